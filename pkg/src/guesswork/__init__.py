"""Guessing moments of a cipher system with a rate-limited secret key.

Computes exact finite-n attack moments under the probability-ordered
group-XOR encryption, the equivalent saturated-cost compression optimum
with relaxed and exact-integer solvers, finite-n bound sandwiches, and
single-letter exponent curves for iid, Markov, and unifilar sources.
"""

from .cipher import (
    AchievedExponent,
    BruteForceResult,
    Cipher,
    CipherSpec,
    attack_moment,
    build_group_xor_cipher,
    brute_force_best_cipher,
    group_xor_moment_closed,
    guessing_exponent_achieved,
    keys_for_rate,
    optimal_attack,
)
from .compression import (
    BoundValue,
    SaturatedOptimum,
    TopSetSummary,
    correct_decoding_term,
    error_term,
    integer_bruteforce,
    lower_bound_finite,
    relaxed_optimum,
    top_set,
    upper_bound_finite,
)
from .errors import CapExceededError, GuessworkError, NumericError, ValidationError
from .exponents import (
    ExponentCurve,
    PerfectSecrecyResult,
    build_curve,
    decomposition_check,
    iid_correct_term,
    iid_error_exponent,
    iid_exponent_dual,
    iid_exponent_grid,
    legendre_fenchel,
    markov_exponent,
    markov_exponent_grid,
    model_exponent_dual,
    perfect_secrecy_exponent,
    thresholds,
    variational_identity_check,
)
from .guessing import (
    GuessOrder,
    LengthFunction,
    harmonic_number,
    interleave,
    kraft_sum,
    lengths_from_order,
    moment,
    order_from_lengths,
    saturated_moment,
)
from .sources import (
    ExplicitSource,
    IidSource,
    MarkovSource,
    Pmf,
    SourceModel,
    UnifilarSource,
    divergence,
    entropy,
    load_model,
    markov_renyi_rate,
    materialize,
    model_from_dict,
    renyi_entropy,
    renyi_entropy_rate,
    sort_desc,
    stationary,
    tilt,
)

__version__ = "0.1.0"
