"""Registered cross-module identity and inequality checks.

Each check draws its randomness from a child of one 64-bit seed, runs a
batch of instances, and reports the worst observed slack against its
documented tolerance.  The CLI ``verify`` command and the acceptance test
suite both run these functions, so a green verify run is the same
evidence as a green acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cipher as ci
from . import compression as co
from . import exponents as ex
from . import guessing as gu
from . import sources as so

LN2 = math.log(2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def _random_pmf(rng: np.random.Generator, size: int, concentration: float = 1.0) -> so.Pmf:
    return so.Pmf(rng.dirichlet(np.full(size, concentration)), tol=1e-9)


def check_tilted_identity(seed: int = 0, instances: int = 1000, max_support: int = 64,
                          num_random: int = 1000) -> CheckResult:
    """Tilted-maximizer identity on random (p, B, theta), plus random probes."""
    rng = _rng(seed, 1)
    worst_gap = 0.0
    worst_excess = -math.inf
    for i in range(instances):
        size = int(rng.integers(2, max_support + 1))
        p = _random_pmf(rng, size)
        b_size = int(rng.integers(1, size + 1))
        support = rng.choice(size, size=b_size, replace=False)
        theta = float(rng.uniform(0.0, 4.0)) if i % 5 else 0.0
        gap, excess = ex.variational_identity_check(
            p, theta, support=support, num_random=num_random, seed=int(rng.integers(2 ** 32))
        )
        worst_gap = max(worst_gap, gap)
        worst_excess = max(worst_excess, excess)
    passed = worst_gap <= 1e-9 and worst_excess <= 1e-12
    return CheckResult(
        "tilted-identity",
        passed,
        f"max gap {worst_gap:.3e} (tol 1e-9), max random excess {worst_excess:.3e} (tol 1e-12)",
    )


def check_renyi_variational(seed: int = 0, instances: int = 200) -> CheckResult:
    """Full-support specialization: theta H(tilt) - D equals theta H_{1/(1+theta)}."""
    rng = _rng(seed, 2)
    worst = 0.0
    for _ in range(instances):
        size = int(rng.integers(2, 33))
        p = _random_pmf(rng, size)
        theta = float(rng.uniform(0.05, 4.0))
        gap, _ = ex.variational_identity_check(p, theta, num_random=2,
                                               seed=int(rng.integers(2 ** 32)))
        direct = abs(
            theta * so.renyi_entropy(p, 1.0 / (1.0 + theta))
            - (1.0 + theta) * math.log(math.fsum((p.probs ** (1.0 / (1.0 + theta))).tolist()))
        )
        worst = max(worst, gap, direct)
    return CheckResult("renyi-variational", worst <= 1e-9, f"max gap {worst:.3e} (tol 1e-9)")


def check_decomposition(tol: float = 1e-4) -> CheckResult:
    """Error/correct split equals the theta dual on a (rho, R) sweep."""
    worst = 0.0
    for probs in ([0.8, 0.2], [0.6, 0.3, 0.1]):
        p = so.Pmf(probs)
        top = math.log(p.size)
        for rho in (0.5, 1.0, 2.0):
            for r in np.linspace(0.05, top + 0.1, 20).tolist():
                _, _, gap = ex.decomposition_check(p, rho, r)
                worst = max(worst, gap)
    return CheckResult("decomposition", worst <= tol, f"max gap {worst:.3e} (tol {tol:g})")


def check_three_regime() -> CheckResult:
    """Linear, concave-interior, and flat regimes of the (0.8, 0.2) curve."""
    p = so.Pmf([0.8, 0.2])
    rho = 1.0
    h_p, h_sat = ex.thresholds(p, rho)
    e_max = rho * so.renyi_entropy(p, 0.5)
    problems = []
    for r in np.arange(0.01, h_p + 1e-12, 0.01).tolist():
        if abs(ex.iid_exponent_dual(p, rho, r) - rho * r) > 1e-9:
            problems.append(f"linear regime broken at R={r:.4f}")
    for r in np.arange(h_sat, LN2 + 1e-9, 0.005).tolist():
        if abs(ex.iid_exponent_dual(p, rho, r) - e_max) > 1e-6:
            problems.append(f"saturated regime broken at R={r:.4f}")
    rs = np.arange(h_p, h_sat, 0.01)
    vals = np.array([ex.iid_exponent_dual(p, rho, r) for r in rs.tolist()])
    if np.any(np.diff(vals) < -1e-10):
        problems.append("interior regime not nondecreasing")
    if np.any(np.diff(vals, 2) > 1e-8):
        problems.append("interior regime not concave")
    detail = "; ".join(problems) if problems else (
        f"H_P={h_p:.6f}, H'={h_sat:.6f}, E_max={e_max:.6f}"
    )
    return CheckResult("three-regime", not problems, detail)


def check_group_xor_closed_form(seed: int = 0, instances: int = 100) -> CheckResult:
    """Closed-form group-XOR moment equals the exact posterior-attack moment."""
    rng = _rng(seed, 3)
    worst = 0.0
    for _ in range(instances):
        size = int(rng.integers(2, 65))
        k = int(rng.integers(0, 5))
        rho = float(rng.uniform(0.2, 2.5))
        p = _random_pmf(rng, size)
        cipher = ci.build_group_xor_cipher(p, k)
        exact = ci.attack_moment(cipher, cipher.pmf, rho)
        closed = ci.group_xor_moment_closed(p, k, rho)
        worst = max(worst, abs(exact - closed))
    return CheckResult("group-xor-closed-form", worst <= 1e-12,
                       f"max |exact - closed| {worst:.3e} (tol 1e-12)")


def _enumerate_tables(n_msgs: int, num_keys: int):
    import itertools

    perms = list(itertools.permutations(range(n_msgs)))
    for combo in itertools.product(perms, repeat=num_keys):
        yield np.array(combo, dtype=int)


def check_attack_ceiling(seed: int = 0) -> CheckResult:
    """Interleaved attack needs at most twice the capped guess budget, per cipher.

    For every cipher on up to 4 messages with 1 key bit: pointwise on
    every consistent (message, cryptogram) pair,
    rank(x | y) <= 2 exp(min(L(x) ln2, nR)), and in expectation the moment
    is at most 2^rho times the saturated cost of the optimal integer
    lengths.
    """
    rng = _rng(seed, 4)
    violations = 0
    cases = 0
    for n_msgs in (2, 3, 4):
        for _ in range(3):
            p = _random_pmf(rng, n_msgs)
            for k in (0, 1):
                rho = float(rng.uniform(0.3, 2.0))
                key_rate = k * LN2 if k else 0.5
                _, lengths = co.integer_bruteforce(p, rho, key_rate, 1)
                lf = gu.LengthFunction(lengths)
                base_order = gu.order_from_lengths(lf)
                budget = 2.0 * np.exp(np.minimum(lf.lengths * LN2, key_rate))
                sat_cost = gu.saturated_moment(lf, p, rho, 1, key_rate)
                for table in _enumerate_tables(n_msgs, 2 ** k):
                    cases += 1
                    cipher = ci.Cipher(ci.CipherSpec(1, k, n_msgs), table, p)
                    orders = []
                    for y in range(n_msgs):
                        key_search = [cipher.decrypt(y, u) for u in range(2 ** k)]
                        merged = gu.interleave(base_order, key_search)
                        orders.append(merged)
                        for x in key_search:
                            if merged.rank[x] > budget[x] * (1.0 + 1e-12):
                                violations += 1
                    moment = ci.attack_moment_for_orders(cipher, p, rho, orders)
                    if moment > 2.0 ** rho * sat_cost * (1.0 + 1e-12):
                        violations += 1
    return CheckResult("attack-ceiling", violations == 0,
                       f"{violations} violations over {cases} enumerated ciphers")


def check_attack_floor(seed: int = 0, instances: int = 40) -> CheckResult:
    """Group-XOR moment is at least the saturated cost scaled by its constant.

    The induced lengths come from converting the descending-probability
    order on the padded message set; the constant is
    1/((2 H_N)^rho (2 + rho)) with H_N the harmonic number of the padded
    message count.
    """
    rng = _rng(seed, 5)
    violations = 0
    worst_margin = math.inf
    for _ in range(instances):
        size = int(rng.integers(2, 33))
        rho = float(rng.uniform(0.2, 2.5))
        n = 1
        # any positive rate; the cipher then uses k = ceil(nR / ln2) key bits
        key_rate = float(rng.uniform(0.05, 2.7))
        k = ci.keys_for_rate(n, key_rate)
        p = _random_pmf(rng, size)
        cipher = ci.build_group_xor_cipher(p, k, n=n)
        padded = cipher.pmf
        moment = ci.group_xor_moment_closed(p, k, rho)
        desc = gu.GuessOrder(np.arange(1, padded.size + 1))
        lf = gu.lengths_from_order(desc)
        sat_cost = gu.saturated_moment(lf, padded, rho, n, key_rate)
        c = gu.harmonic_number(padded.size)
        floor = sat_cost / ((2.0 * c) ** rho * (2.0 + rho))
        worst_margin = min(worst_margin, moment - floor)
        if moment < floor * (1.0 - 1e-12):
            violations += 1
    return CheckResult("attack-floor", violations == 0,
                       f"{violations} violations; smallest margin {worst_margin:.3e}")


def check_guessing_compression_gap(seed: int = 0, instances: int = 50,
                                   rhos=(0.5, 1.0)) -> CheckResult:
    """Compression and best-cipher exponents agree within the harmonic constant.

    For brute-forceable systems, both ends of the achieved-exponent bracket
    (group-XOR and exhaustive best) and its midpoint sit within
    ln((4 H_N)^rho (2+rho)) / n of the integer compression optimum.
    """
    rng = _rng(seed, 6)
    worst_ratio = 0.0
    count = 0
    for i in range(instances):
        size = int(rng.integers(2, 6))
        k = int(rng.integers(1, 3))
        rho = float(rhos[i % len(rhos)])
        p = _random_pmf(rng, size)
        # any rate with ceil(R / ln2) = k, so cipher and code share the rate
        key_rate = float(rng.uniform((k - 1) * LN2 + 1e-6, k * LN2))
        e_s, _ = co.integer_bruteforce(p, rho, key_rate, 1)
        lo = math.log(ci.group_xor_moment_closed(p, k, rho))
        result = ci.brute_force_best_cipher(p, k, rho)
        hi = math.log(result.max_moment)
        lo, hi = min(lo, hi), max(lo, hi)
        c = gu.harmonic_number(size)
        bound = math.log((4.0 * c) ** rho * (2.0 + rho))
        for endpoint in (lo, hi, 0.5 * (lo + hi)):
            worst_ratio = max(worst_ratio, abs(e_s - endpoint) / bound)
        count += 1
    return CheckResult("guessing-compression-gap", worst_ratio <= 1.0,
                       f"worst |gap|/bound {worst_ratio:.3f} over {count} systems")


def check_relaxed_integer_sandwich(seed: int = 0, instances: int = 200) -> CheckResult:
    """relaxed <= integer <= relaxed + rho ln2 / n on enumerable instances."""
    rng = _rng(seed, 7)
    worst_low = math.inf
    worst_high = -math.inf
    for _ in range(instances):
        size = int(rng.integers(2, 11))
        rho = float(rng.uniform(0.2, 2.5))
        n = int(rng.integers(1, 4))
        key_rate = float(rng.uniform(0.05, 1.2))
        p = _random_pmf(rng, size, concentration=float(rng.uniform(0.3, 3.0)))
        relaxed = co.relaxed_optimum(p, n, rho, key_rate)
        integer, _ = co.integer_bruteforce(p, rho, key_rate, n)
        worst_low = min(worst_low, integer - relaxed.value)
        worst_high = max(worst_high, integer - relaxed.value - relaxed.slack)
    passed = worst_low >= -1e-9 and worst_high <= 1e-9
    return CheckResult(
        "relaxed-integer-sandwich", passed,
        f"min(integer-relaxed) {worst_low:.3e} >= 0; max overshoot {worst_high:.3e} <= 0",
    )


def check_finite_n_convergence() -> CheckResult:
    """Finite-n relaxed optima approach the single-letter dual monotonically."""
    p = so.Pmf([0.8, 0.2])
    model = so.IidSource(p)
    rho = 1.0
    problems = []
    finals = []
    for key_rate in (0.3, 0.55, 0.69):
        dual = ex.iid_exponent_dual(p, rho, key_rate)
        gaps = []
        for n in (4, 6, 8, 10, 12):
            p_n = so.materialize(model, n)
            gaps.append(abs(co.relaxed_optimum(p_n, n, rho, key_rate).value - dual))
        if any(b > a + 1e-12 for a, b in zip(gaps, gaps[1:])):
            problems.append(f"R={key_rate}: gaps not nonincreasing {gaps}")
        if gaps[-1] > 0.15:
            problems.append(f"R={key_rate}: gap at n=12 is {gaps[-1]:.4f} > 0.15")
        finals.append(gaps[-1])
    detail = "; ".join(problems) if problems else (
        "gaps at n=12: " + ", ".join(f"{g:.4f}" for g in finals)
    )
    return CheckResult("finite-n-convergence", not problems, detail)


def check_markov_dual(step: float = 0.01) -> CheckResult:
    """Perron dual within 2e-2 of the transition-grid supremum; iid-in-disguise exact."""
    pi = np.array([[0.9, 0.1], [0.3, 0.7]])
    rho = 1.0
    problems = []
    gaps = []
    for key_rate in (0.3, 0.5, 0.65):
        dual = ex.markov_exponent(pi, rho, key_rate)
        grid = ex.markov_exponent_grid(pi, rho, key_rate, step=step)
        gaps.append(abs(dual - grid))
        if abs(dual - grid) > 2e-2:
            problems.append(f"R={key_rate}: |dual-grid|={abs(dual - grid):.4f}")
    p = so.Pmf([0.8, 0.2])
    disguised = np.array([[0.8, 0.2], [0.8, 0.2]])
    for key_rate in (0.3, 0.55, 0.69):
        gap = abs(ex.markov_exponent(disguised, rho, key_rate)
                  - ex.iid_exponent_dual(p, rho, key_rate))
        if gap > 1e-9:
            problems.append(f"iid-in-disguise gap {gap:.3e} at R={key_rate}")
    detail = "; ".join(problems) if problems else (
        "dual-grid gaps: " + ", ".join(f"{g:.4f}" for g in gaps)
    )
    return CheckResult("markov-dual", not problems, detail)


def check_length_order_duality(seed: int = 0, instances: int = 200) -> CheckResult:
    """Random permutations: conversion lengths are Kraft-feasible and sandwich ranks."""
    rng = _rng(seed, 8)
    problems = 0
    for _ in range(instances):
        size = int(rng.integers(1, 1025))
        rank = rng.permutation(size) + 1
        order = gu.GuessOrder(rank)
        lf = gu.lengths_from_order(order)
        if gu.kraft_sum(lf) > 1.0 + 1e-12:
            problems += 1
        c = gu.harmonic_number(size)
        log_rank = np.log2(rank.astype(float))
        if np.any(log_rank > lf.lengths + 1e-9):
            problems += 1
        if np.any(lf.lengths - 1.0 - math.log2(c) > log_rank + 1e-9):
            problems += 1
    return CheckResult("length-order-duality", problems == 0,
                       f"{problems} violations over {instances} permutations")


def check_interleave_factor(seed: int = 0, instances: int = 200) -> CheckResult:
    """Merged rank never exceeds twice the better individual position."""
    rng = _rng(seed, 9)
    problems = 0
    for _ in range(instances):
        size = int(rng.integers(1, 65))
        order = gu.GuessOrder(rng.permutation(size) + 1)
        b_len = int(rng.integers(0, 2 * size))
        seq_b = rng.integers(0, size, size=b_len).tolist()
        merged = gu.interleave(order, seq_b)
        pos_b = np.full(size, math.inf)
        for j, x in enumerate(seq_b):
            if pos_b[x] == math.inf:
                pos_b[x] = j + 1
        better = np.minimum(order.rank, pos_b)
        if np.any(merged.rank > 2 * better):
            problems += 1
    return CheckResult("interleave-factor", problems == 0,
                       f"{problems} violations over {instances} merges")


ALL_CHECKS = (
    check_tilted_identity,
    check_renyi_variational,
    check_decomposition,
    check_three_regime,
    check_group_xor_closed_form,
    check_attack_ceiling,
    check_attack_floor,
    check_guessing_compression_gap,
    check_relaxed_integer_sandwich,
    check_finite_n_convergence,
    check_markov_dual,
    check_length_order_duality,
    check_interleave_factor,
)


def run_all(seed: int = 0) -> list:
    """Run every registered check; randomized ones use children of ``seed``."""
    results = []
    for check in ALL_CHECKS:
        if "seed" in check.__code__.co_varnames[: check.__code__.co_argcount]:
            results.append(check(seed=seed))
        else:
            results.append(check())
    return results
