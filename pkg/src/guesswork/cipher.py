"""The cipher system: group-XOR encryption, optimal attack, exact attack moments.

The encryption that maximizes attacker effort pairs messages of comparable
probability: sort messages by decreasing probability, pad with zero-probability
dummies until the count is a multiple of the key count M = 2^k, then XOR the
low k bits of the index with the key inside each block of M.  A wiretapper
seeing the cryptogram learns only the block, and the best attack sweeps the
block in probability order.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, ValidationError
from .guessing import GuessOrder, harmonic_number
from .sources import (
    DEFAULT_MATERIALIZE_CAP,
    Pmf,
    SourceModel,
    materialize,
    sort_desc,
)

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class CipherSpec:
    """Block parameters: message length n, key bits k, padded message count."""

    n: int
    k: int
    num_messages: int

    def __post_init__(self):
        if self.n < 1 or self.k < 0 or self.num_messages < 1:
            raise ValidationError("need n >= 1, k >= 0, and at least one message")

    @property
    def num_keys(self) -> int:
        return 2 ** self.k

    @property
    def key_rate(self) -> float:
        """Key bits per letter converted to nats: k ln2 / n."""
        return self.k * LN2 / self.n


@dataclass(frozen=True, eq=False)
class Cipher:
    """An invertible-per-key encryption table over a fixed message set.

    ``table[u, m]`` is the cryptogram for message m under key u; each row is
    a permutation.  ``pmf`` is the message distribution in this cipher's
    index space (for the group-XOR construction: sorted descending, padded
    with zero-probability dummies).
    """

    spec: CipherSpec
    table: np.ndarray
    pmf: Pmf

    def __post_init__(self):
        tbl = np.array(self.table, dtype=int)
        if tbl.shape != (self.spec.num_keys, self.spec.num_messages):
            raise ValidationError("table must be (num_keys x num_messages)")
        full = np.arange(self.spec.num_messages)
        for u in range(tbl.shape[0]):
            if not np.array_equal(np.sort(tbl[u]), full):
                raise ValidationError(f"key {u} does not act as a bijection")
        if self.pmf.size != self.spec.num_messages:
            raise ValidationError("message distribution must cover the message set")
        tbl.setflags(write=False)
        object.__setattr__(self, "table", tbl)

    def decrypt(self, y: int, u: int) -> int:
        return int(np.flatnonzero(self.table[u] == y)[0])

    def to_json_dict(self) -> dict:
        return {
            "n": self.spec.n,
            "k": self.spec.k,
            "num_messages": self.spec.num_messages,
            "probs": self.pmf.probs.tolist(),
            "table": self.table.tolist(),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "Cipher":
        spec = CipherSpec(doc["n"], doc["k"], doc["num_messages"])
        return Cipher(spec, np.array(doc["table"], dtype=int), Pmf(doc["probs"]))


def sorted_padded_pmf(p: Pmf, num_keys: int) -> Pmf:
    """Probabilities sorted descending and zero-padded to a multiple of num_keys."""
    ordered = p.probs[sort_desc(p)]
    n_padded = -(-p.size // num_keys) * num_keys
    out = np.zeros(n_padded)
    out[: p.size] = ordered
    return Pmf(out, tol=1e-9)


def build_group_xor_cipher(p: Pmf, k: int, n: int = 1) -> Cipher:
    """Blockwise XOR cipher over messages re-indexed in decreasing probability.

    Messages are padded with zero-probability dummies to a multiple of
    M = 2^k, grouped into consecutive blocks of M, and the low k bits are
    XORed with the key inside each block.
    """
    if k < 0:
        raise ValidationError("key bits must be nonnegative")
    m = 2 ** k
    padded = sorted_padded_pmf(p, m)
    n_msgs = padded.size
    idx = np.arange(n_msgs)
    groups = idx // m
    within = idx % m
    table = np.empty((m, n_msgs), dtype=int)
    for u in range(m):
        table[u] = groups * m + (within ^ u)
    return Cipher(CipherSpec(n, k, n_msgs), table, padded)


def _count_matrix(cipher: Cipher) -> np.ndarray:
    """counts[m, y] = number of keys mapping message m to cryptogram y."""
    n_msgs = cipher.spec.num_messages
    flat = (np.arange(n_msgs)[None, :] * n_msgs + cipher.table).ravel()
    return np.bincount(flat, minlength=n_msgs * n_msgs).reshape(n_msgs, n_msgs)


def optimal_attack(cipher: Cipher, p: Pmf, y: int) -> GuessOrder:
    """Guess in decreasing posterior order given cryptogram ``y``.

    The posterior of message m is proportional to p(m) times the number of
    keys sending m to y.  Ties break by ascending index, which also places
    all zero-posterior messages last in ascending order.
    """
    if p.size != cipher.spec.num_messages:
        raise ValidationError("distribution must cover the cipher's message set")
    if not 0 <= y < cipher.spec.num_messages:
        raise ValidationError("cryptogram index out of range")
    counts = (cipher.table == y).sum(axis=0)
    posterior = p.probs * counts
    order = np.argsort(-posterior, kind="stable")
    rank = np.empty(p.size, dtype=int)
    rank[order] = np.arange(1, p.size + 1)
    return GuessOrder(rank)


def attack_moment(cipher: Cipher, p: Pmf, rho: float) -> float:
    """E[(number of guesses)^rho] for the optimal posterior-order attack.

    Exact sum over the joint law of message and cryptogram with the key
    uniform over 2^k values, accumulated in fixed (cryptogram, message)
    order.
    """
    if rho <= 0.0:
        raise ValidationError("moment exponent must be positive")
    if p.size != cipher.spec.num_messages:
        raise ValidationError("distribution must cover the cipher's message set")
    counts = _count_matrix(cipher)
    m_keys = cipher.spec.num_keys
    terms = []
    for y in range(cipher.spec.num_messages):
        weights = p.probs * counts[:, y]
        order = np.argsort(-weights, kind="stable")
        rank = np.empty(p.size, dtype=int)
        rank[order] = np.arange(1, p.size + 1)
        nz = np.flatnonzero(weights)
        for m in nz:
            terms.append(weights[m] / m_keys * rank[m] ** rho)
    return math.fsum(terms)


def attack_moment_for_orders(cipher: Cipher, p: Pmf, rho: float, orders) -> float:
    """Moment when the attacker uses a caller-supplied order per cryptogram."""
    counts = _count_matrix(cipher)
    m_keys = cipher.spec.num_keys
    terms = []
    for y in range(cipher.spec.num_messages):
        rank = orders[y].rank
        weights = p.probs * counts[:, y]
        nz = np.flatnonzero(weights)
        for m in nz:
            terms.append(weights[m] / m_keys * rank[m] ** rho)
    return math.fsum(terms)


def group_xor_moment_closed(p: Pmf, k: int, rho: float) -> float:
    """Closed form of the group-XOR attack moment.

    With probabilities sorted descending and padded, the attacker needs
    i+1 guesses whenever the message sits at offset i inside its block,
    independent of the cryptogram, so the moment is the double sum of
    p(jM+i) (i+1)^rho.
    """
    if rho <= 0.0:
        raise ValidationError("moment exponent must be positive")
    m = 2 ** k
    padded = sorted_padded_pmf(p, m)
    within = np.arange(padded.size) % m
    return math.fsum(
        (px * float(i + 1) ** rho for px, i in zip(padded.probs.tolist(), within.tolist()))
    )


@dataclass(frozen=True, eq=False)
class BruteForceResult:
    max_moment: float
    witness: Cipher
    tables_searched: int


def _moment_batch(count_mats: np.ndarray, probs: np.ndarray, rho: float, m_keys: int) -> np.ndarray:
    """Attack moments for a batch of key-count matrices, shape (B, N, N)."""
    weights = count_mats * probs[None, :, None]
    order = np.argsort(-weights, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, probs.size + 1)[None, :, None], axis=1)
    return (weights * ranks.astype(float) ** rho).sum(axis=(1, 2)) / m_keys


def brute_force_best_cipher(p: Pmf, k: int, rho: float, *, max_messages: int = 5,
                            max_keys: int = 2, chunk: int = 65536,
                            threads: int = 1) -> BruteForceResult:
    """Exhaustive maximum of the attack moment over permutation-table ciphers.

    The cryptogram alphabet is fixed to the message set, so the search runs
    over per-key permutations.  Two lossless reductions keep it tractable:
    key 0 is pinned to the identity (relabeling cryptograms never changes
    the attack moment) and the remaining keys are enumerated as unordered
    multisets (the key is uniform, so key order is irrelevant).  Ties keep
    the first witness in this canonical enumeration order.
    """
    if rho <= 0.0:
        raise ValidationError("moment exponent must be positive")
    n_msgs = p.size
    if n_msgs > max_messages or k > max_keys:
        raise CapExceededError(
            f"brute force limited to {max_messages} messages and {max_keys} key bits"
        )
    m_keys = 2 ** k
    perms = np.array(list(itertools.permutations(range(n_msgs))), dtype=int)
    base = np.arange(n_msgs)

    if k == 0:
        table = base[None, :]
        cipher = Cipher(CipherSpec(1, 0, n_msgs), table, p)
        return BruteForceResult(attack_moment(cipher, p, rho), cipher, 1)

    combos_iter = itertools.combinations_with_replacement(range(len(perms)), m_keys - 1)
    identity_onehot = np.eye(n_msgs)[None, :, :]
    probs = p.probs

    def eval_chunk(combo_block: np.ndarray):
        b = combo_block.shape[0]
        counts = np.repeat(identity_onehot, b, axis=0)
        flat_base = np.arange(b)[:, None] * (n_msgs * n_msgs) + base[None, :] * n_msgs
        for col in range(m_keys - 1):
            targets = perms[combo_block[:, col]]
            np.add.at(counts.reshape(-1), (flat_base + targets).ravel(), 1.0)
        moments = _moment_batch(counts, probs, rho, m_keys)
        best = int(np.argmax(moments))
        return float(moments[best]), combo_block[best]

    best_val = -math.inf
    best_combo = None
    searched = 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        pending = []
        while True:
            block = np.array(list(itertools.islice(combos_iter, chunk)), dtype=int)
            if block.size == 0:
                break
            searched += block.shape[0]
            if pool is None:
                pending.append(eval_chunk(block))
            else:
                pending.append(pool.submit(eval_chunk, block))
        if pool is not None:
            pending = [f.result() for f in pending]
    finally:
        if pool is not None:
            pool.shutdown()
    # deterministic reduction: chunks in enumeration order, first max wins
    for val, combo in pending:
        if val > best_val:
            best_val, best_combo = val, combo

    table = np.vstack([base[None, :], perms[best_combo]])
    witness = Cipher(CipherSpec(1, k, n_msgs), table, p)
    exact = attack_moment(witness, p, rho)
    return BruteForceResult(exact, witness, searched)


@dataclass(frozen=True, eq=False)
class AchievedExponent:
    """Normalized log attack moment of the group-XOR cipher, with its constants."""

    exponent: float
    moment: float
    n: int
    k: int
    num_keys: int
    num_messages: int
    harmonic: float
    floor_constant: float


def keys_for_rate(n: int, key_rate: float) -> int:
    """Smallest key-bit count whose rate covers ``key_rate``: ceil(nR / ln 2).

    The tiny slack absorbs rounding when nR/ln2 is an exact integer.
    """
    if key_rate <= 0.0:
        raise ValidationError("key rate must be positive")
    return int(math.ceil(n * key_rate / LN2 - 1e-12))


def guessing_exponent_achieved(model: SourceModel, n: int, rho: float, key_rate: float,
                               cap: int = DEFAULT_MATERIALIZE_CAP) -> AchievedExponent:
    """Exponent achieved by the group-XOR cipher at key rate ``key_rate``.

    A certified lower bound on the best attainable finite-n exponent; the
    reported floor constant 1/((2 H_N)^rho (2 + rho)) ties it to the
    saturated-cost compression optimum, with H_N the harmonic number of
    the padded message count.
    """
    if rho <= 0.0:
        raise ValidationError("moment exponent must be positive")
    p_n = materialize(model, n, cap=cap)
    k = keys_for_rate(n, key_rate)
    m = 2 ** k
    n_padded = -(-p_n.size // m) * m
    value = group_xor_moment_closed(p_n, k, rho)
    c = harmonic_number(n_padded)
    floor = 1.0 / ((2.0 * c) ** rho * (2.0 + rho))
    return AchievedExponent(
        exponent=math.log(value) / n,
        moment=value,
        n=n,
        k=k,
        num_keys=m,
        num_messages=n_padded,
        harmonic=c,
        floor_constant=floor,
    )
