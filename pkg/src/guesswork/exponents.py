"""Single-letter attack exponents and the identities tying them together.

The central curve is E(R, rho) = max over distributions Q of
rho min(H(Q), R) - D(Q || P): linear with slope rho up to the source
entropy, concave in between, and flat at rho times the order-1/(1+rho)
entropy beyond a saturation threshold.  The same value comes out of a
one-dimensional dual over a mixing weight theta, out of a direct simplex
search, and out of an error/correct-decoding split; this module computes
all three so they can certify each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import CapExceededError, NumericError, ValidationError
from .optimize import minimize_scan_golden
from .sources import (
    ExplicitSource,
    IidSource,
    MarkovSource,
    Pmf,
    SourceModel,
    UnifilarSource,
    divergence,
    entropy,
    is_irreducible,
    perron_root,
    renyi_entropy,
    renyi_entropy_rate,
    stationary,
    tilt,
    unifilar_state_power_matrix,
)

_GRID_MAX_ALPHABET = 4
_MARKOV_GRID_MAX_STATES = 4
# default row-grid steps for the transition-matrix verifier, by state count
_MARKOV_GRID_STEPS = {2: 0.01, 3: 0.1, 4: 0.25}


def _log_power_sum(log_probs: np.ndarray, beta: float) -> float:
    return float(np.log(np.exp(beta * log_probs).sum()))


def iid_exponent_dual(p1: Pmf, rho: float, key_rate: float) -> float:
    """min over theta in [0, rho] of (rho - theta) R + theta H_{1/(1+theta)}(P).

    The objective is convex in theta (the entropy term is a supremum of
    linear functions), so a 1024-point scan plus golden refinement is
    exact to working precision; the scan minimum backstops the refinement
    regardless.
    """
    if rho <= 0.0 or key_rate <= 0.0:
        raise ValidationError("need rho > 0 and key_rate > 0")
    log_probs = np.log(p1.probs[p1.probs > 0.0])

    def objective(theta: float) -> float:
        # theta * H_{1/(1+theta)} written as (1+theta) ln sum p^{1/(1+theta)},
        # which is exact (zero) at theta = 0
        return (rho - theta) * key_rate + (1.0 + theta) * _log_power_sum(
            log_probs, 1.0 / (1.0 + theta)
        )

    _, best = minimize_scan_golden(objective, 0.0, rho, scan_points=1024)
    return best


def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All probability vectors with entries that are multiples of 1/steps."""
    if dim == 1:
        return np.ones((1, 1))
    out = []

    def rec(prefix, remaining):
        if len(prefix) == dim - 1:
            out.append(prefix + [remaining])
            return
        for i in range(remaining + 1):
            rec(prefix + [i], remaining - i)

    rec([], steps)
    return np.array(out, dtype=float) / steps


def _objective_on_simplex(q: np.ndarray, p: np.ndarray, rho: float, key_rate: float) -> float:
    mask = q > 0.0
    if np.any(mask & (p <= 0.0)):
        return -math.inf
    h = float(-(q[mask] * np.log(q[mask])).sum())
    d = float((q[mask] * (np.log(q[mask]) - np.log(p[mask]))).sum())
    return rho * min(h, key_rate) - d


def iid_exponent_grid(p1: Pmf, rho: float, key_rate: float, resolution: float = 0.01) -> float:
    """Direct maximum of rho min(H(Q), R) - D(Q||P) over a simplex grid.

    A barycentric grid with the given step is refined by Nelder-Mead from
    the best grid point.  Alphabets above 4 are refused; use the dual.
    """
    if p1.size > _GRID_MAX_ALPHABET:
        raise CapExceededError("grid search supports alphabets up to 4; use the dual")
    if not 0.0 < resolution <= 0.5:
        raise ValidationError("resolution must lie in (0, 0.5]")
    if p1.size == 1:
        return 0.0
    steps = max(2, int(round(1.0 / resolution)))
    grid = _simplex_grid(p1.size, steps)
    p = p1.probs
    log_p = np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(grid > 0.0, np.log(np.maximum(grid, 1e-300)), 0.0)
        h = -(grid * logs).sum(axis=1)
        cross = np.where(grid > 0.0, grid * log_p[None, :], 0.0).sum(axis=1)
        d = -h - cross
    feasible = ~np.any((grid > 0.0) & (p[None, :] <= 0.0), axis=1)
    objective = np.where(feasible, rho * np.minimum(h, key_rate) - d, -np.inf)
    best_i = int(np.argmax(objective))
    best_val = float(objective[best_i])

    def neg_obj(x: np.ndarray) -> float:
        tail = 1.0 - x.sum()
        if np.any(x < -1e-12) or tail < -1e-12:
            return 1e6
        q = np.append(np.maximum(x, 0.0), max(tail, 0.0))
        return -_objective_on_simplex(q, p, rho, key_rate)

    start = grid[best_i][:-1]
    result = minimize(neg_obj, start, method="Nelder-Mead",
                      options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return max(best_val, float(-result.fun))


def _tilted_entropy(p1: Pmf, exponent: float) -> float:
    """Entropy of p^s / Z for any s > 0 (not restricted to the (0,1] tilt op)."""
    log_p = np.log(p1.probs[p1.probs > 0.0])
    w = np.exp(exponent * log_p - (exponent * log_p).max())
    w /= w.sum()
    w = w[w > 0.0]  # huge exponents underflow the tail; 0 ln 0 = 0
    return float(-(w * np.log(w)).sum())


def _tilted_pmf(p1: Pmf, exponent: float) -> Pmf:
    log_p = np.log(np.maximum(p1.probs, 1e-300))
    out = np.zeros(p1.size)
    mask = p1.probs > 0.0
    w = np.exp(exponent * log_p[mask] - (exponent * log_p[mask]).max())
    out[mask] = w / w.sum()
    return Pmf(out, tol=1e-9)


def iid_error_exponent(p1: Pmf, key_rate: float) -> float:
    """Smallest divergence from P among distributions with entropy above R.

    Zero for R up to H(P) (P itself sits in the closure of the constraint
    set); +inf from ln(support size) on, where the constraint set empties;
    in between, solved on the tilted family p^b / Z by bisecting
    H(tilt) = R over b in (0, 1), along which the entropy is monotone.
    """
    if key_rate <= 0.0:
        raise ValidationError("key rate must be positive")
    h_p = entropy(p1)
    support = int((p1.probs > 0.0).sum())
    if key_rate <= h_p:
        return 0.0
    if key_rate >= math.log(support) - 1e-15:
        return math.inf
    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tilted_entropy(p1, mid) > key_rate:
            lo = mid
        else:
            hi = mid
    q = _tilted_pmf(p1, 0.5 * (lo + hi))
    return divergence(q, p1)


def iid_correct_term(p1: Pmf, rho: float, key_rate: float) -> float:
    """max of rho H(Q) - D(Q||P) over distributions with entropy at most R.

    Unconstrained, the maximum is rho times the order-1/(1+rho) entropy,
    attained by the tilt with exponent 1/(1+rho).  When that tilt is too
    spread out, the entropy constraint binds and the maximizer moves along
    the tilted family toward (and past) P until H(tilt) = R.  Tilting
    cannot push the entropy below ln(#maximal probabilities); if R sits
    under that floor the maximizer leaves the family and a simplex grid
    with local refinement takes over (alphabets up to 4).
    """
    if rho <= 0.0 or key_rate <= 0.0:
        raise ValidationError("need rho > 0 and key_rate > 0")
    s_free = 1.0 / (1.0 + rho)
    if _tilted_entropy(p1, s_free) <= key_rate:
        return rho * renyi_entropy(p1, s_free)
    lo, hi = s_free, 1.0
    while _tilted_entropy(p1, hi) > key_rate:
        hi *= 2.0
        if hi > 1e12:
            return _correct_term_grid(p1, rho, key_rate)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tilted_entropy(p1, mid) > key_rate:
            lo = mid
        else:
            hi = mid
    q = _tilted_pmf(p1, 0.5 * (lo + hi))
    return rho * entropy(q) - divergence(q, p1)


def _correct_term_grid(p1: Pmf, rho: float, key_rate: float) -> float:
    if p1.size > _GRID_MAX_ALPHABET:
        raise NumericError(
            "entropy-constrained maximizer left the tilted family and the "
            "alphabet is too large for the grid fallback"
        )
    grid = _simplex_grid(p1.size, 500)
    p = p1.probs
    best_val = -math.inf
    best_q = None
    for q in grid:
        mask = q > 0.0
        if np.any(mask & (p <= 0.0)):
            continue
        h = float(-(q[mask] * np.log(q[mask])).sum())
        if h > key_rate:
            continue
        val = rho * h - float((q[mask] * (np.log(q[mask]) - np.log(p[mask]))).sum())
        if val > best_val:
            best_val, best_q = val, q

    def neg_obj(x: np.ndarray) -> float:
        tail = 1.0 - x.sum()
        if np.any(x < -1e-12) or tail < -1e-12:
            return 1e6
        q = np.append(np.maximum(x, 0.0), max(tail, 0.0))
        mask = q > 0.0
        if np.any(mask & (p <= 0.0)):
            return 1e6
        h = float(-(q[mask] * np.log(q[mask])).sum())
        if h > key_rate:
            return 1e6
        return -(rho * h - float((q[mask] * (np.log(q[mask]) - np.log(p[mask]))).sum()))

    result = minimize(neg_obj, best_q[:-1], method="Nelder-Mead",
                      options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return max(best_val, float(-result.fun))


def decomposition_check(p1: Pmf, rho: float, key_rate: float) -> tuple:
    """Compare max(rho R - error exponent, correct term) with the theta dual.

    Returns (lhs, rhs, |gap|); the two sides agree analytically, so the gap
    measures only the optimizers' numerical error.
    """
    err = iid_error_exponent(p1, key_rate)
    first = rho * key_rate - err if err < math.inf else -math.inf
    lhs = max(first, iid_correct_term(p1, rho, key_rate))
    rhs = iid_exponent_dual(p1, rho, key_rate)
    return lhs, rhs, abs(lhs - rhs)


class _PressureCache:
    """Memoized (1+theta) ln(Perron root of pi^(1/(1+theta))) evaluations."""

    def __init__(self, transition: np.ndarray):
        self.pi = np.asarray(transition, dtype=float)
        self._store: dict = {}

    def __call__(self, theta: float) -> float:
        key = round(theta, 15)
        if key not in self._store:
            alpha = 1.0 / (1.0 + theta)
            lam = perron_root(self.pi ** alpha)
            self._store[key] = (1.0 + theta) * math.log(lam)
        return self._store[key]


def markov_exponent(transition, rho: float, key_rate: float) -> float:
    """Dual exponent for an irreducible chain via Perron roots of tilted powers.

    min over theta of (rho - theta) R + theta * (order-1/(1+theta) entropy
    rate); the entropy-rate term equals (1+theta) ln of the Perron root of
    the entrywise power matrix, which is exactly zero at theta = 0.
    """
    if rho <= 0.0 or key_rate <= 0.0:
        raise ValidationError("need rho > 0 and key_rate > 0")
    pi = np.asarray(transition, dtype=float)
    if not is_irreducible(pi):
        raise ValidationError("transition matrix is reducible")
    pressure = _PressureCache(pi)

    def objective(theta: float) -> float:
        return (rho - theta) * key_rate + pressure(theta)

    _, best = minimize_scan_golden(objective, 0.0, rho, scan_points=1024)
    return best


def _batch_stationary(etas: np.ndarray) -> tuple:
    """Stationary rows for a batch of chains; returns (q, residual)."""
    b, k, _ = etas.shape
    m = np.transpose(etas, (0, 2, 1)) - np.eye(k)[None, :, :]
    m[:, -1, :] = 1.0
    rhs = np.zeros((b, k))
    rhs[:, -1] = 1.0
    dets = np.abs(np.linalg.det(m))
    q = np.full((b, k), 1.0 / k)
    solvable = dets > 1e-12
    if np.any(solvable):
        q[solvable] = np.linalg.solve(m[solvable], rhs[solvable][:, :, None])[:, :, 0]
    # damped power iteration cleans up singular (reducible) cases and any
    # negative round-off; it converges to some stationary vector for every chain
    bad = ~solvable | np.any(q < -1e-12, axis=1)
    if np.any(bad):
        v = np.full((int(bad.sum()), k), 1.0 / k)
        half = 0.5 * (etas[bad] + np.eye(k)[None, :, :])
        for _ in range(20000):
            new = np.einsum("bi,bij->bj", v, half)
            new /= new.sum(axis=1, keepdims=True)
            if np.abs(new - v).max() < 1e-14:
                v = new
                break
            v = new
        q[bad] = v
    q = np.maximum(q, 0.0)
    q /= q.sum(axis=1, keepdims=True)
    residual = np.abs(np.einsum("bi,bij->bj", q, etas) - q).sum(axis=1)
    return q, residual


def markov_exponent_grid(transition, rho: float, key_rate: float,
                         step: float = None) -> float:
    """Verifier: maximize over pair-stationary laws q x eta on a row grid.

    Every row of the candidate transition matrix eta ranges over a simplex
    grid; q is recomputed as a stationary distribution of eta (reducible
    grid corners contribute through whichever stationary vector the damped
    iteration selects).  Objective: rho min(conditional entropy, R) minus
    the conditional divergence from the true chain.
    """
    pi = np.asarray(transition, dtype=float)
    k = pi.shape[0]
    if k > _MARKOV_GRID_MAX_STATES:
        raise CapExceededError("transition-matrix grid supports up to 4 states")
    if step is None:
        step = _MARKOV_GRID_STEPS[k]
    rows = _simplex_grid(k, int(round(1.0 / step)))
    row_idx = np.stack(
        np.meshgrid(*([np.arange(len(rows))] * k), indexing="ij"), axis=-1
    ).reshape(-1, k)
    etas = rows[row_idx]  # (B, k, k)
    q, residual = _batch_stationary(etas)
    ok = residual <= 1e-8

    with np.errstate(divide="ignore", invalid="ignore"):
        log_eta = np.where(etas > 0.0, np.log(np.maximum(etas, 1e-300)), 0.0)
        h_rows = -(etas * log_eta).sum(axis=2)
        log_pi = np.log(np.maximum(pi, 1e-300))
        d_terms = np.where(etas > 0.0, etas * (log_eta - log_pi[None, :, :]), 0.0)
        leak = np.any((etas > 0.0) & (pi[None, :, :] <= 0.0), axis=(1, 2))
        d_rows = d_terms.sum(axis=2)
    h_cond = (q * h_rows).sum(axis=1)
    d_cond = (q * d_rows).sum(axis=1)
    objective = rho * np.minimum(h_cond, key_rate) - d_cond
    objective[leak | ~ok] = -math.inf
    return float(objective.max())


def thresholds(p1: Pmf, rho: float) -> tuple:
    """(H_P, H') for the single-letter curve: linear up to H_P, flat from H'.

    H' is defined numerically as the smallest rate at which the dual
    reaches its saturation value rho H_{1/(1+rho)} within 1e-9, found by
    bisection on the nondecreasing dual.
    """
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    h_p = entropy(p1)
    e_max = rho * renyi_entropy(p1, 1.0 / (1.0 + rho))
    target = e_max - 1e-9

    def reaches(r: float) -> bool:
        return iid_exponent_dual(p1, rho, r) >= target

    hi = math.log(p1.size) + 1e-6
    lo = 1e-9
    if reaches(lo):
        return h_p, 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return h_p, hi


def legendre_fenchel(rhos, values, lambdas=None, convexity_tol: float = 1e-6):
    """Discrete convex conjugate sup over rho of (lambda rho - E(rho)).

    The input must be convex in rho within ``convexity_tol`` (checked via
    slope monotonicity); the default lambda grid spans the data slopes.
    Returns (lambdas, transform values).
    """
    rhos = np.asarray(rhos, dtype=float)
    values = np.asarray(values, dtype=float)
    if rhos.size < 64:
        raise ValidationError("need at least 64 grid points")
    if rhos.size != values.size or np.any(np.diff(rhos) <= 0.0):
        raise ValidationError("grids must match and be strictly increasing")
    slopes = np.diff(values) / np.diff(rhos)
    if np.any(np.diff(slopes) < -convexity_tol):
        raise ValidationError("input is not convex within tolerance")
    if lambdas is None:
        lo, hi = float(slopes.min()), float(slopes.max())
        pad = 0.05 * max(hi - lo, 1e-6)
        lambdas = np.linspace(lo - pad, hi + pad, 512)
    else:
        lambdas = np.asarray(lambdas, dtype=float)
    transform = (lambdas[:, None] * rhos[None, :] - values[None, :]).max(axis=1)
    return lambdas, transform


def variational_identity_check(p: Pmf, theta: float, support=None,
                               num_random: int = 1000, seed: int = 0) -> tuple:
    """Gap of the tilted-maximizer identity on a support set, plus random probes.

    Left side: (1+theta) ln sum of p^(1/(1+theta)) over the support.  Right
    side: theta H(nu) - D(nu||p) at the tilted distribution, which attains
    the maximum.  Also returns the largest amount by which ``num_random``
    random distributions on the support exceed the left side (analytically
    never positive).
    """
    if theta < 0.0:
        raise ValidationError("theta must be nonnegative")
    from .sources import _support_indices  # shared index normalization

    idx = _support_indices(p.size, support)
    sub = p.probs[idx]
    if math.fsum(sub.tolist()) <= 0.0:
        raise ValidationError("support carries no probability mass")
    beta = 1.0 / (1.0 + theta)
    lhs = (1.0 + theta) * math.log(math.fsum((sub[sub > 0.0] ** beta).tolist()))
    maximizer = tilt(p, beta, support=idx)
    rhs = theta * entropy(maximizer) - divergence(maximizer, p)
    gap = abs(lhs - rhs)

    rng = np.random.default_rng(seed)
    nu = rng.dirichlet(np.ones(idx.size), size=num_random)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_nu = np.where(nu > 0.0, np.log(np.maximum(nu, 1e-300)), 0.0)
        h = -(nu * log_nu).sum(axis=1)
        sub_mask = sub > 0.0
        log_sub = np.where(sub_mask, np.log(np.maximum(sub, 1e-300)), -np.inf)
        cross = np.where(nu > 0.0, nu * log_sub[None, :], 0.0)
        leaked = np.any((nu > 0.0) & ~sub_mask[None, :], axis=1)
        d = -h - cross.sum(axis=1)
    probes = theta * h - d
    probes[leaked] = -math.inf
    max_excess = float((probes - lhs).max())
    return gap, max_excess


@dataclass(frozen=True, eq=False)
class PerfectSecrecyResult:
    value: float
    asymptotic: bool
    n: int = 0


def perfect_secrecy_exponent(model: SourceModel, rho: float) -> PerfectSecrecyResult:
    """rho times the order-1/(1+rho) entropy rate, the exponent once the key
    rate is large enough that the cryptogram carries no usable information.

    Explicit models have no closed rate; the value at the largest available
    n is returned and flagged as non-asymptotic.
    """
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    alpha = 1.0 / (1.0 + rho)
    if isinstance(model, ExplicitSource):
        n = len(model.pmfs)
        value = rho * renyi_entropy(model.pmfs[-1], alpha) / n
        return PerfectSecrecyResult(value=value, asymptotic=False, n=n)
    return PerfectSecrecyResult(value=rho * renyi_entropy_rate(model, alpha), asymptotic=True)


def model_exponent_dual(model: SourceModel, rho: float, key_rate: float) -> float:
    """Single-letter dual exponent for iid, Markov, or unifilar models."""
    if isinstance(model, IidSource):
        return iid_exponent_dual(model.marginal, rho, key_rate)
    if isinstance(model, MarkovSource):
        return markov_exponent(model.transition, rho, key_rate)
    if isinstance(model, UnifilarSource):
        def objective(theta: float) -> float:
            alpha = 1.0 / (1.0 + theta)
            lam = perron_root(unifilar_state_power_matrix(model, alpha))
            return (rho - theta) * key_rate + (1.0 + theta) * math.log(lam)

        _, best = minimize_scan_golden(objective, 0.0, rho, scan_points=1024)
        return best
    raise ValidationError("single-letter exponents require iid, Markov, or unifilar models")


@dataclass(frozen=True, eq=False)
class ExponentCurve:
    """Sampled exponent curve with its regime thresholds.

    ``branch`` labels each sample linear / interior / saturated by
    comparing R against the thresholds.
    """

    rho: float
    rates: np.ndarray
    values: np.ndarray
    h_source: float
    h_saturation: float
    e_max: float

    @property
    def branches(self) -> list:
        out = []
        for r in self.rates.tolist():
            if r <= self.h_source + 1e-12:
                out.append("linear")
            elif r >= self.h_saturation - 1e-12:
                out.append("saturated")
            else:
                out.append("interior")
        return out


def build_curve(model: SourceModel, rho: float, rates) -> ExponentCurve:
    """Evaluate the dual exponent on a rate grid and locate its thresholds."""
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0.0):
        raise ValidationError("key rates must be positive")
    values = np.array([model_exponent_dual(model, rho, r) for r in rates.tolist()])
    alpha = 1.0 / (1.0 + rho)
    if isinstance(model, IidSource):
        h_source, h_sat = thresholds(model.marginal, rho)
        e_max = rho * renyi_entropy(model.marginal, alpha)
    else:
        e_max = rho * renyi_entropy_rate(model, alpha)
        h_source = _entropy_rate(model)
        h_sat = _saturation_threshold(model, rho, e_max)
    return ExponentCurve(rho, rates, values, h_source, h_sat, e_max)


def _entropy_rate(model: SourceModel) -> float:
    if isinstance(model, MarkovSource):
        q = stationary(model.transition).probs
        pi = model.transition
        terms = []
        for i in range(pi.shape[0]):
            for j in range(pi.shape[1]):
                if pi[i, j] > 0.0:
                    terms.append(-q[i] * pi[i, j] * math.log(pi[i, j]))
        return math.fsum(terms)
    if isinstance(model, UnifilarSource):
        chain = np.zeros((model.num_states, model.num_states))
        for s in range(model.num_states):
            for x in range(model.alphabet_size):
                chain[s, model.next_state[s, x]] += model.emission[s].probs[x]
        q = stationary(chain).probs
        terms = []
        for s in range(model.num_states):
            for x in range(model.alphabet_size):
                e = model.emission[s].probs[x]
                if e > 0.0:
                    terms.append(-q[s] * e * math.log(e))
        return math.fsum(terms)
    raise ValidationError("entropy rate needs a Markov or unifilar model")


def _saturation_threshold(model: SourceModel, rho: float, e_max: float) -> float:
    target = e_max - 1e-9
    size = model.alphabet_size
    lo, hi = 1e-9, math.log(size) + 1e-6
    if model_exponent_dual(model, rho, lo) >= target:
        return 0.0
    while model_exponent_dual(model, rho, hi) < target:
        hi *= 2.0
        if hi > 100.0:
            raise NumericError("saturation threshold not bracketed")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if model_exponent_dual(model, rho, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi
