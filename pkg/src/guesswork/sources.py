"""Finite-alphabet sources, their n-letter distributions, and information measures.

All information quantities are in nats; bit lengths appear only at the
length-function boundary (see :mod:`guesswork.guessing`), where the ln 2
factor is explicit.  Every function here is a pure function of immutable
inputs with a fixed internal summation order, so results are identical
regardless of caller parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import CapExceededError, NumericError, ValidationError

LN2 = math.log(2.0)

# Validation tolerance for distributions built directly from user input.
PMF_TOL = 1e-12
# Looser tolerance for n-fold products, where rounding accumulates.
PRODUCT_TOL = 1e-9
# Residual tolerance for stationary distributions.
STATIONARY_TOL = 1e-10

DEFAULT_MATERIALIZE_CAP = 2 ** 24


class Pmf:
    """Probability mass function over indices 0..N-1.

    For an n-letter distribution the index enumerates strings in
    lexicographic order, first letter most significant.  Instances are
    immutable; the underlying array is write-locked on construction.
    """

    __slots__ = ("probs",)

    def __init__(self, probs, tol: float = PMF_TOL):
        arr = np.array(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("a PMF must be a nonempty 1-D vector")
        if np.any(arr < 0.0):
            raise ValidationError("PMF entries must be nonnegative")
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > tol:
            raise ValidationError(f"PMF entries sum to {total!r}, not 1 within {tol:g}")
        arr.setflags(write=False)
        self.probs = arr

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Pmf({self.probs.tolist()!r})"


@dataclass(frozen=True, eq=False)
class IidSource:
    """Memoryless source with a fixed single-letter marginal."""

    marginal: Pmf

    @property
    def alphabet_size(self) -> int:
        return self.marginal.size


@dataclass(frozen=True, eq=False)
class MarkovSource:
    """First-order chain with initial distribution and row-stochastic transitions."""

    init: Pmf
    transition: np.ndarray
    stationary: bool = False

    def __post_init__(self):
        pi = np.array(self.transition, dtype=float)
        if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
            raise ValidationError("transition matrix must be square")
        if pi.shape[0] != self.init.size:
            raise ValidationError("initial distribution size must match the transition matrix")
        if np.any(pi < 0.0):
            raise ValidationError("transition probabilities must be nonnegative")
        for i in range(pi.shape[0]):
            row_sum = math.fsum(pi[i].tolist())
            if abs(row_sum - 1.0) > PMF_TOL:
                raise ValidationError(f"transition row {i} sums to {row_sum!r}, not 1")
        pi.setflags(write=False)
        object.__setattr__(self, "transition", pi)
        if self.stationary:
            residual = float(np.abs(self.init.probs @ pi - self.init.probs).sum())
            if residual > STATIONARY_TOL:
                raise ValidationError(
                    f"declared-stationary init has residual {residual:.3e} > {STATIONARY_TOL:g}"
                )

    @property
    def alphabet_size(self) -> int:
        return self.init.size


@dataclass(frozen=True, eq=False)
class UnifilarSource:
    """Finite-state source whose next state is a function of (state, emitted symbol).

    ``next_state[s, x]`` gives the successor state, ``emission[s]`` the
    per-state symbol distribution, and ``init_states`` the distribution of
    the initial state.
    """

    init_states: Pmf
    next_state: np.ndarray
    emission: tuple

    def __post_init__(self):
        nxt = np.array(self.next_state, dtype=int)
        if nxt.ndim != 2:
            raise ValidationError("next-state map must be a (states x symbols) table")
        num_states, num_symbols = nxt.shape
        if self.init_states.size != num_states:
            raise ValidationError("initial state distribution size must match the state count")
        emissions = tuple(self.emission)
        if len(emissions) != num_states:
            raise ValidationError("one emission distribution is required per state")
        for e in emissions:
            if e.size != num_symbols:
                raise ValidationError("emission distributions must cover the symbol alphabet")
        # total function: every (state, symbol) must map to a valid state
        if np.any(nxt < 0) or np.any(nxt >= num_states):
            raise ValidationError("next-state map must land inside the state set")
        nxt.setflags(write=False)
        object.__setattr__(self, "next_state", nxt)
        object.__setattr__(self, "emission", emissions)

    @property
    def num_states(self) -> int:
        return int(self.next_state.shape[0])

    @property
    def alphabet_size(self) -> int:
        return int(self.next_state.shape[1])


@dataclass(frozen=True, eq=False)
class ExplicitSource:
    """Source given by an explicit list of n-letter distributions, index n-1."""

    pmfs: tuple

    def __post_init__(self):
        entries = tuple(self.pmfs)
        if not entries:
            raise ValidationError("explicit source needs at least one distribution")
        object.__setattr__(self, "pmfs", entries)

    @property
    def alphabet_size(self) -> int:
        return self.pmfs[0].size


SourceModel = Union[IidSource, MarkovSource, UnifilarSource, ExplicitSource]


def materialize(model: SourceModel, n: int, cap: int = DEFAULT_MATERIALIZE_CAP) -> Pmf:
    """Return the n-letter distribution of ``model`` over all strings of length n.

    Strings are indexed lexicographically.  Raises
    :class:`CapExceededError` when the string count would exceed ``cap``
    (default 2^24 entries).
    """
    if n < 1:
        raise ValidationError("n must be a positive integer")
    if isinstance(model, ExplicitSource):
        if n > len(model.pmfs):
            raise ValidationError(f"explicit source defines lengths 1..{len(model.pmfs)}")
        out = model.pmfs[n - 1]
        if out.size > cap:
            raise CapExceededError(f"{out.size} strings exceed the cap of {cap}")
        return out

    k = model.alphabet_size
    if k ** n > cap:
        raise CapExceededError(f"{k}^{n} strings exceed the cap of {cap}")

    if isinstance(model, IidSource):
        probs = model.marginal.probs
        out = probs
        for _ in range(n - 1):
            out = np.kron(out, probs)
        return Pmf(out, tol=PRODUCT_TOL)

    if isinstance(model, MarkovSource):
        cur = model.init.probs.copy()
        pi = model.transition
        for _ in range(n - 1):
            last = np.arange(cur.size) % k
            cur = (cur[:, None] * pi[last]).ravel()
        return Pmf(cur, tol=PRODUCT_TOL)

    if isinstance(model, UnifilarSource):
        # The state trajectory is deterministic given the start state, so
        # evolve (probability, current state) per string and start state,
        # then mix over the initial state distribution.
        emission = np.array([e.probs for e in model.emission])
        total = np.zeros(k ** n)
        for s0 in range(model.num_states):
            w0 = model.init_states.probs[s0]
            if w0 == 0.0:
                continue
            probs = np.array([1.0])
            states = np.array([s0], dtype=int)
            for _ in range(n):
                probs = (probs[:, None] * emission[states]).ravel()
                states = model.next_state[states].ravel()
            total += w0 * probs
        return Pmf(total, tol=PRODUCT_TOL)

    raise ValidationError(f"unknown source model {type(model).__name__}")


def entropy(p: Pmf) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    terms = [-x * math.log(x) for x in p.probs.tolist() if x > 0.0]
    return math.fsum(terms)


def renyi_entropy(p: Pmf, alpha: float) -> float:
    """Order-``alpha`` entropy ln(sum p^alpha)/(1-alpha) in nats, alpha > 0, != 1."""
    if alpha <= 0.0 or alpha == 1.0:
        raise ValidationError("order must be positive and different from 1")
    total = math.fsum((x ** alpha for x in p.probs.tolist() if x > 0.0))
    return math.log(total) / (1.0 - alpha)


def divergence(q: Pmf, p: Pmf) -> float:
    """Relative entropy D(q||p) in nats; +inf when q is not dominated by p."""
    if q.size != p.size:
        raise ValidationError("distributions must share one index set")
    terms = []
    for qx, px in zip(q.probs.tolist(), p.probs.tolist()):
        if qx == 0.0:
            continue
        if px == 0.0:
            return math.inf
        terms.append(qx * math.log(qx / px))
    return math.fsum(terms)


def tilt(p: Pmf, beta: float, support=None) -> Pmf:
    """Exponentiate-and-normalize: p^beta / Z on ``support``, zero elsewhere.

    ``support`` is an index array or boolean mask; None means the full set.
    ``beta`` must lie in (0, 1].
    """
    if not 0.0 < beta <= 1.0:
        raise ValidationError("tilt exponent must lie in (0, 1]")
    idx = _support_indices(p.size, support)
    if idx.size == 0:
        raise ValidationError("support is empty")
    weights = p.probs[idx] ** beta
    z = math.fsum(weights.tolist())
    if z <= 0.0:
        raise ValidationError("support carries no probability mass")
    out = np.zeros(p.size)
    out[idx] = weights / z
    return Pmf(out, tol=PRODUCT_TOL)


def _support_indices(size: int, support) -> np.ndarray:
    if support is None:
        return np.arange(size)
    arr = np.asarray(support)
    if arr.dtype == bool:
        if arr.size != size:
            raise ValidationError("boolean support mask must match the index set")
        return np.flatnonzero(arr)
    arr = arr.astype(int)
    if arr.size and (arr.min() < 0 or arr.max() >= size):
        raise ValidationError("support indices out of range")
    return np.unique(arr)


def sort_desc(p: Pmf) -> np.ndarray:
    """Indices ordering ``p`` by decreasing probability, ties by ascending index."""
    return np.argsort(-p.probs, kind="stable")


def is_irreducible(transition: np.ndarray) -> bool:
    """True when the directed graph of positive transitions is strongly connected."""
    adj = np.asarray(transition) > 0.0
    reach = np.eye(adj.shape[0], dtype=bool)
    for _ in range(adj.shape[0]):
        new = reach | (reach @ adj)
        if np.array_equal(new, reach):
            break
        reach = new
    return bool(reach.all())


def stationary(transition, tol: float = STATIONARY_TOL, max_iter: int = 10 ** 5) -> Pmf:
    """Stationary distribution q with q pi = q for an irreducible chain.

    Iterates the half-identity damping (pi + I)/2 from the uniform vector;
    the damped chain is aperiodic with the same stationary distribution, so
    the iteration converges even for periodic chains.  The residual is
    checked against the original matrix.
    """
    pi = np.asarray(transition, dtype=float)
    if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
        raise ValidationError("transition matrix must be square")
    if not is_irreducible(pi):
        raise ValidationError("transition matrix is reducible")
    k = pi.shape[0]
    v = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        residual = float(np.abs(v @ pi - v).sum())
        if residual <= tol:
            return Pmf(v / v.sum(), tol=PRODUCT_TOL)
        v = 0.5 * (v @ pi + v)
        v /= v.sum()
    raise NumericError(
        f"stationary iteration did not reach residual {tol:g} in {max_iter} steps "
        f"(last residual {residual:.3e})"
    )


def perron_root(matrix, tol: float = 1e-12, max_iter: int = 10 ** 5) -> float:
    """Dominant eigenvalue of an irreducible nonnegative matrix by power iteration.

    Iterates on matrix + I, which is primitive whenever the matrix is
    irreducible, and subtracts the unit shift at the end; the shift moves
    the dominant eigenvalue by exactly 1 and defeats periodicity.
    """
    a = np.asarray(matrix, dtype=float)
    shifted = a + np.eye(a.shape[0])
    v = np.full(a.shape[0], 1.0 / a.shape[0])
    lam = None
    for it in range(max_iter):
        w = v @ shifted
        new_lam = float(w.sum())
        v = w / new_lam
        if lam is not None and abs(new_lam - lam) <= tol * abs(new_lam):
            return new_lam - 1.0
        lam = new_lam
    raise NumericError(
        f"power iteration did not converge in {max_iter} steps "
        f"(last eigenvalue estimate {lam!r})"
    )


def markov_renyi_rate(transition, alpha: float, tol: float = 1e-12,
                      max_iter: int = 10 ** 5) -> float:
    """Order-``alpha`` entropy rate of an irreducible chain, nats per symbol.

    Equals ln(lambda)/(1-alpha) where lambda is the dominant eigenvalue of
    the entrywise alpha-th power of the transition matrix.  The rate does
    not depend on the initial distribution.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("order must lie in (0, 1)")
    pi = np.asarray(transition, dtype=float)
    if not is_irreducible(pi):
        raise ValidationError("transition matrix is reducible")
    lam = perron_root(pi ** alpha, tol=tol, max_iter=max_iter)
    return math.log(lam) / (1.0 - alpha)


def unifilar_state_power_matrix(model: UnifilarSource, alpha: float) -> np.ndarray:
    """State-to-state matrix whose Perron root gives the power-sum growth rate.

    Entry (s, s') sums emission[s](x)^alpha over symbols x driving s to s';
    the deterministic transitions make the string-power sum a product along
    the state path, so its growth rate is the root of this matrix.
    """
    s_count = model.num_states
    out = np.zeros((s_count, s_count))
    for s in range(s_count):
        probs = model.emission[s].probs
        for x in range(model.alphabet_size):
            if probs[x] > 0.0:
                out[s, model.next_state[s, x]] += probs[x] ** alpha
    return out


def renyi_entropy_rate(model: SourceModel, alpha: float) -> float:
    """Per-letter order-``alpha`` entropy rate for iid, Markov, or unifilar models."""
    if isinstance(model, IidSource):
        return renyi_entropy(model.marginal, alpha)
    if isinstance(model, MarkovSource):
        return markov_renyi_rate(model.transition, alpha)
    if isinstance(model, UnifilarSource):
        if not 0.0 < alpha < 1.0:
            raise ValidationError("order must lie in (0, 1)")
        lam = perron_root(unifilar_state_power_matrix(model, alpha))
        return math.log(lam) / (1.0 - alpha)
    raise ValidationError("entropy rates require an iid, Markov, or unifilar model")


def _as_floats(values) -> list:
    # model files may carry probabilities as decimal strings
    return [float(v) for v in values]


def model_from_dict(doc: dict) -> SourceModel:
    """Build a source model from its JSON document form."""
    try:
        kind = doc["kind"]
    except (KeyError, TypeError):
        raise ValidationError("model document needs a 'kind' field")
    if kind == "iid":
        return IidSource(Pmf(_as_floats(doc["probs"])))
    if kind == "markov":
        pi = np.array([_as_floats(row) for row in doc["transition"]])
        if "init" in doc:
            init = Pmf(_as_floats(doc["init"]))
            return MarkovSource(init, pi, stationary=bool(doc.get("stationary", False)))
        return MarkovSource(stationary(pi), pi, stationary=True)
    if kind == "unifilar":
        nxt = np.array(doc["next_state"], dtype=int)
        emission = tuple(Pmf(_as_floats(row)) for row in doc["emission"])
        if "init_states" in doc:
            init = Pmf(_as_floats(doc["init_states"]))
        else:
            init = _point_mass(nxt.shape[0], int(doc.get("init_state", 0)))
        return UnifilarSource(init, nxt, emission)
    if kind == "explicit":
        return ExplicitSource(tuple(Pmf(_as_floats(row)) for row in doc["pmfs"]))
    raise ValidationError(f"unknown model kind {kind!r}")


def _point_mass(size: int, index: int) -> Pmf:
    if not 0 <= index < size:
        raise ValidationError("initial state index out of range")
    out = np.zeros(size)
    out[index] = 1.0
    return Pmf(out)


def load_model(path) -> SourceModel:
    """Load a source model from a JSON file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file {path} is not valid JSON: {exc}")
    return model_from_dict(doc)
