"""
Information bounds for the hypothesis-testing reduction.

Fano lower bounds, information-radius (IR) and Lyapunov-function (LF) upper
bounds, the closed-form complexity lower bounds, the functional recurrence
checker and the plug-in mutual information estimate used to compare them.
All information quantities are in nats.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import entr, rel_entr

from src.errors import (
    ParameterOutOfRangeError,
    UnsupportedCountError,
    UnsupportedEnsembleError,
    UnsupportedOracleError,
)
from src.geometry import Domain, DomainKind
from src.instances import EVEN_DEGREES, Family, Instance, InstanceEnsemble, dual_norm
from src.oracles import (
    OracleKind,
    OracleModel,
    check_compatible,
    label_probabilities,
    pure_noise_kl_grid,
    response_kl,
    response_kl_grid,
)
from src.streams import make_stream

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
SUP_GRID_POINTS = 10**4
SUP_RANDOM_POINTS = 10**5
SUP_GRID_SEED = 0
GRID_CHECK_MAX_SIZE = 8
BOOTSTRAP_RESAMPLES = 200


def _condition(text: str, satisfied: bool) -> dict:
    return {"condition": text, "satisfied": bool(satisfied)}


def _delta_condition(delta: float) -> dict:
    return _condition("δ ∈ (0,1/2)", 0.0 < delta < 0.5)


@dataclass(frozen=True)
class BoundReport:
    """
    One evaluated bound with the inputs that produced it.

    units is "nats" for information quantities, "queries" for complexity
    lower bounds and "excess_risk" for risk floors.
    """

    name: str
    value: float
    inputs: dict = field(default_factory=dict)
    validity: list = field(default_factory=list)
    units: str = "nats"

    @property
    def quotable(self) -> bool:
        return all(item["satisfied"] for item in self.validity)

    def violations(self) -> list:
        return [item["condition"] for item in self.validity if not item["satisfied"]]

    def to_json_dict(self, bits: bool = False) -> dict:
        """Keys name, value_nats, inputs, validity; bits adds value_bits to reports in nats."""
        payload = {
            "name": self.name,
            "value_nats": self.value,
            "inputs": {**self.inputs, "units": self.units},
            "validity": [dict(item) for item in self.validity],
        }
        if bits and self.units == "nats":
            payload["value_bits"] = self.value / LN2
        return payload


def binary_entropy(p: float) -> float:
    """h2(p) in nats."""
    if not 0.0 <= p <= 1.0:
        raise ParameterOutOfRangeError("p", p, "0 <= p <= 1")
    return float(entr(p) + entr(1.0 - p))


def _fano_value(N: int, delta: float) -> float:
    if N == 2:
        return LN2 - binary_entropy(delta)
    if N > 4:
        return (1.0 - delta) * math.log(N) - LN2
    raise UnsupportedCountError(N)


def fano_lower(N: int, delta: float) -> float:
    """
    Least information I(M; M_hat) a delta-reliable identification of N hypotheses carries.

    Args:
        N: Hypothesis count, 2 or more than 4
        delta: Error probability in [0, 1/2]

    Returns:
        (1 - delta) ln N - ln 2 for N > 4, ln 2 - h2(delta) for N = 2

    Raises:
        UnsupportedCountError: If N is not 2 and not above 4
        ParameterOutOfRangeError: If delta lies outside [0, 1/2]
    """
    if not 0.0 <= delta <= 0.5:
        raise ParameterOutOfRangeError("delta", delta, "δ ∈ [0,1/2]")
    return _fano_value(N, delta)


def fano_report(N: int, delta: float, **inputs) -> BoundReport:
    """
    fano_lower wrapped in a BoundReport; extra inputs are recorded as given.

    A delta above 1/2 is still evaluated but marks the report unquotable.
    """
    if not 0.0 <= delta <= 1.0:
        raise ParameterOutOfRangeError("delta", delta, "an error probability in [0, 1]")
    value = _fano_value(N, delta)
    validity = [_condition("δ ∈ [0,1/2]", delta <= 0.5)]
    return BoundReport("fano_lower", value, {"N": N, "delta": delta, **inputs}, validity)


def _sup_points(domain: Domain) -> Tuple[np.ndarray, str]:
    if domain.dim == 1:
        return domain.grid(SUP_GRID_POINTS)[:, None], "grid"
    rng = make_stream(SUP_GRID_SEED, domain.dim)
    return domain.sample(rng, SUP_RANDOM_POINTS), "random_points"


def _identical(a: Instance, b: Instance) -> bool:
    if a.family is Family.LINEAR:
        return a.sign == b.sign and np.array_equal(a.slope, b.slope)
    return a.scale == b.scale and np.array_equal(a.center, b.center)


def _closed_form_pair_kl(
    oracle: OracleModel, a: Instance, b: Instance
) -> Optional[Tuple[float, str]]:
    """sup_x D(P(.|a,x) || P(.|b,x)) where it is known without a grid."""
    kind = oracle.kind
    if kind is OracleKind.STAT_ESTIMATION:
        return response_kl(oracle, a, b, a.domain.center_array), "closed_form"
    if kind is OracleKind.NOISELESS:
        return (0.0 if _identical(a, b) else math.inf), "closed_form"
    if kind not in (OracleKind.FOG, OracleKind.SOG):
        return None

    domain = a.domain
    noise = 2.0 * oracle.sigma**2
    factor = domain.dim if oracle.total_variance else 1
    if a.family in (Family.QUADRATIC, Family.LINEAR):
        # value gap is affine with slope equal to the constant gradient gap
        center = domain.center_array
        gap_slope = a.gradient(center) - b.gradient(center)
        grad_term = factor * float(np.dot(gap_slope, gap_slope)) / noise
        if kind is OracleKind.SOG:
            return grad_term, "closed_form"
        value_gap = abs(a.value(center) - b.value(center))
        value_gap += domain.radius * dual_norm(domain, gap_slope)
        return value_gap**2 / noise + grad_term, "closed_form"
    if a.family is Family.NORM_DISTANCE and a.scale == b.scale:
        # |f_a - f_b| <= c |theta_a - theta_b| and |g_a - g_b| <= 2c
        diff = a.center - b.center
        grad_term = factor * 4.0 * a.scale**2 / noise
        if kind is OracleKind.SOG:
            return grad_term, "analytic_bound"
        return a.scale**2 * float(np.dot(diff, diff)) / noise + grad_term, "analytic_bound"
    return None


def _grid_sup(
    ensemble: InstanceEnsemble, oracle: OracleModel, points: np.ndarray
) -> float:
    best = 0.0
    for a, b in itertools.permutations(ensemble.instances, 2):
        best = max(best, float(np.max(response_kl_grid(oracle, a, b, points))))
    return best


def _sup_pair_kl(
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    sup_grid: Optional[np.ndarray] = None,
) -> Tuple[float, dict]:
    if oracle.kind is OracleKind.MOMENT_BOUNDED:
        raise UnsupportedOracleError(oracle.kind, "ir_upper")
    for inst in ensemble.instances:
        check_compatible(oracle, inst)
    if ensemble.size == 1:
        return 0.0, {"sup_method": "single_instance"}

    closed = [
        _closed_form_pair_kl(oracle, a, b)
        for a, b in itertools.combinations(ensemble.instances, 2)
    ]
    if all(item is not None for item in closed):
        value = max(item[0] for item in closed)
        method = "analytic_bound" if any(m == "analytic_bound" for _, m in closed) else "closed_form"
        details = {"sup_method": method}
        check_points = None
        if sup_grid is not None:
            check_points = np.asarray(sup_grid, dtype=float).reshape(-1, ensemble.domain.dim)
        elif ensemble.domain.dim == 1 and ensemble.size <= GRID_CHECK_MAX_SIZE:
            check_points = _sup_points(ensemble.domain)[0]
        if check_points is not None and math.isfinite(value):
            details["grid_sup_nats"] = _grid_sup(ensemble, oracle, check_points)
            details["grid_points"] = int(check_points.shape[0])
        return value, details

    if sup_grid is not None:
        points = np.asarray(sup_grid, dtype=float).reshape(-1, ensemble.domain.dim)
        method = "grid"
    else:
        points, method = _sup_points(ensemble.domain)
    value = _grid_sup(ensemble, oracle, points)
    logger.warning(
        "Supremum of the per-query divergence estimated on %d %s points; "
        "the IR value is a lower estimate of the true sup",
        points.shape[0],
        method,
    )
    return value, {"sup_method": method, "grid_points": int(points.shape[0])}


def per_step_information(ensemble: InstanceEnsemble, oracle: OracleModel) -> float:
    """
    Upper bound on the information one query carries about the hidden index.

    Max pairwise response KL for oracles with closed-form divergences;
    p ln 2 for the sparse moment-bounded oracle, whose answer is informative
    only with probability p.
    """
    if oracle.kind is OracleKind.MOMENT_BOUNDED:
        for inst in ensemble.instances:
            check_compatible(oracle, inst)
        return oracle.probability * LN2
    return _sup_pair_kl(ensemble, oracle)[0]


def ir_upper(
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    T: int,
    sup_grid: Optional[np.ndarray] = None,
) -> BoundReport:
    """
    Information-radius bound T * max_{i,j} sup_x D(P(.|f_i,x) || P(.|f_j,x)).

    Closed forms are used for the Gaussian oracles on quadratic and linear
    families (affine value gap, constant gradient gap) and an analytic bound
    for norm-distance families; anything else falls back to an evaluation
    grid, tagged in the report. A supplied sup_grid cross-checks a closed form
    or replaces the default grid.

    Raises:
        UnsupportedOracleError: For the moment-bounded oracle
        IncompatibleOracleError: If the oracle cannot answer about the ensemble
    """
    if T < 0:
        raise ParameterOutOfRangeError("T", T, "T >= 0")
    per_step, details = _sup_pair_kl(ensemble, oracle, sup_grid)
    inputs = {
        "N": ensemble.size,
        "oracle": oracle.kind.value,
        "sigma": oracle.sigma,
        "T": T,
        "per_step_nats": per_step,
        **details,
    }
    value = T * per_step if T else 0.0
    return BoundReport("ir_upper", value, inputs)


def lf_terms(
    transcript,
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    chosen: int,
) -> np.ndarray:
    """
    Per-step Lyapunov-function terms D(P(.|f_chosen, X_t) || Q*) for t = 1..T.

    Q* is the response law at a minimizer: N(c*, sigma^2) x N(0, sigma^2 I)
    for Gaussian oracles and a fair coin for the label oracle.

    Raises:
        UnsupportedEnsembleError: If the ensemble has no common minimum
        UnsupportedOracleError: For oracles without a pure-noise law
    """
    if ensemble.common_min is None:
        raise UnsupportedEnsembleError("LF terms need a common minimum c*")
    if oracle.kind not in (OracleKind.FOG, OracleKind.SOG, OracleKind.BERNOULLI_LABEL):
        raise UnsupportedOracleError(oracle.kind, "lf_terms")
    if not 0 <= chosen < ensemble.size:
        raise ParameterOutOfRangeError("chosen", chosen, f"0 <= i < {ensemble.size}")
    inst = ensemble.instances[chosen]
    return pure_noise_kl_grid(oracle, inst, transcript.queries, ensemble.common_min)


def lf_label_envelope(
    transcript,
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    chosen: int,
) -> np.ndarray:
    """Quadratic envelope 4 (eta(X_t) - 1/2)^2 of the label-oracle LF terms."""
    if oracle.kind is not OracleKind.BERNOULLI_LABEL:
        raise UnsupportedOracleError(oracle.kind, "lf_label_envelope")
    inst = ensemble.instances[chosen]
    points = transcript.queries
    eta = label_probabilities(oracle, inst.values(points), inst.gradients(points))
    return 4.0 * (eta - 0.5) ** 2


class TheoremBound(str, Enum):
    THM1 = "thm1"
    THM1_EXPECTED = "thm1_expected"
    THM2_FOG = "thm2_fog"
    THM2_SOG = "thm2_sog"
    THM3_FOG = "thm3_fog"
    THM3_SOG = "thm3_sog"
    THM4 = "thm4"
    THM6 = "thm6"
    THM8_KAPPA1 = "thm8_kappa1"


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise ParameterOutOfRangeError(name, value, f"{name} > 0")
    return float(value)


def _general(c_star: float, packing_count: int, delta: float):
    c_star = _positive("c_star", c_star)
    validity = [
        _delta_condition(delta),
        _condition("N >= 2", packing_count >= 2),
    ]
    information = (1.0 - delta) * math.log(packing_count) - LN2
    value = 0.0 if math.isinf(c_star) else information / c_star
    return value, validity


def _general_expected(c_star: float, packing_count: int):
    c_star = _positive("c_star", c_star)
    validity = [_condition("N >= 2", packing_count >= 2)]
    information = (2.0 / 3.0) * math.log(packing_count) - LN2
    value = 0.0 if math.isinf(c_star) else information / c_star
    return value, validity


def _lipschitz(
    fog: bool,
    n: int,
    s: float,
    delta: float,
    eps: float,
    sigma: float = 1.0,
    r: float = 1.0,
):
    eps = _positive("eps", eps)
    s = _positive("s", s)
    validity = [
        _condition("n >= 16", n >= 16),
        _condition("ε <= (s_X sqrt(n/8))^r", eps <= (s * math.sqrt(n / 8.0)) ** r),
        _condition("r >= 1", r >= 1),
        _delta_condition(delta),
    ]
    coefficient = ((1.0 - delta) * n - 8.0) * n * s**2 * LN2 / 128.0
    if fog:
        coefficient /= n * s**2 + 1.0
    return coefficient * sigma**2 / eps ** (2.0 / r), validity


def _strongly_convex(
    fog: bool,
    n: int,
    delta: float,
    eps: float,
    sigma: float = 1.0,
    r: float = 1.0,
    s: float = 1.0,
    diameter: Optional[float] = None,
):
    eps = _positive("eps", eps)
    s = _positive("s", s)
    # s_X B_inf is the default domain when no diameter is given
    diameter = 2.0 * s * math.sqrt(n) if diameter is None else diameter
    validity = [
        _condition("n >= 16", n >= 16),
        _condition("ε <= (n s_X^2 / 16)^r", eps <= (n * s**2 / 16.0) ** r),
        _condition("r >= 1", r >= 1),
        _delta_condition(delta),
    ]
    coefficient = ((1.0 - delta) * n - 8.0) * LN2 / 256.0
    if fog:
        coefficient /= diameter**2 + 1.0
    return coefficient * sigma**2 / eps ** (1.0 / r), validity


def _moment(alpha: float, delta: float, eps: float, c: float, lipschitz: float = 1.0):
    eps = _positive("eps", eps)
    c = _positive("c", c)
    if not alpha > 1:
        raise ParameterOutOfRangeError("alpha", alpha, "alpha > 1")
    validity = [
        _condition(
            "ε < min(L / 2^(1/α), 1)",
            eps < min(lipschitz / 2.0 ** (1.0 / alpha), 1.0),
        ),
        _condition(
            "c^(1-α) < min(L^α / 2, 1)",
            c ** (1.0 - alpha) < min(lipschitz**alpha / 2.0, 1.0),
        ),
        _delta_condition(delta),
    ]
    information = LN2 - binary_entropy(min(max(delta, 0.0), 1.0))
    value = information / (c * LN2) * eps ** (-alpha / (alpha - 1.0))
    return value, validity


def _even_power(degree: int, delta: float, eps: float, sigma: float = 1.0):
    eps = _positive("eps", eps)
    m = int(degree)
    validity = [
        _condition("m even in {2,4,6,8}", m in EVEN_DEGREES),
        _condition("ε <= 1", eps <= 1.0),
        _delta_condition(delta),
    ]
    # sup of the squared value gap plus sup of the squared derivative gap
    spread = m**2 * 4.0**m + (m * (m - 1)) ** 2 * 4.0 ** (m - 1)
    information = LN2 - binary_entropy(min(max(delta, 0.0), 1.0))
    return 2.0 * sigma**2 * information / (spread * eps ** (1.0 / m)), validity


def _label_kappa1(c_low: float, c_high: float, horizon: int):
    validity = [
        _condition("0 < c < C < 1/2", 0.0 < c_low < c_high < 0.5),
        _condition("T >= 1", horizon >= 1),
    ]
    distance = math.exp(-6.0 * c_high**2 * (horizon + (5.0 / 12.0) * LN2))
    return (2.0 * c_low / 3.0) * distance, validity, {"distance_floor": distance}


_EVALUATORS = {
    TheoremBound.THM1: lambda p: _general(**p),
    TheoremBound.THM1_EXPECTED: lambda p: _general_expected(**p),
    TheoremBound.THM2_FOG: lambda p: _lipschitz(True, **p),
    TheoremBound.THM2_SOG: lambda p: _lipschitz(False, **p),
    TheoremBound.THM3_FOG: lambda p: _strongly_convex(True, **p),
    TheoremBound.THM3_SOG: lambda p: _strongly_convex(False, **p),
    TheoremBound.THM4: lambda p: _moment(**p),
    TheoremBound.THM6: lambda p: _even_power(**p),
}


def thm_lower(which: TheoremBound, **params) -> BoundReport:
    """
    Evaluate one closed-form complexity lower bound.

    Preconditions are reported in the validity list rather than raised;
    only parameters that make the formula undefined raise.

    Args:
        which: Bound to evaluate
        **params: The bound's inputs, e.g. n, s, delta, eps, sigma, r for thm2_fog

    Returns:
        BoundReport in queries (excess risk for thm8_kappa1)

    Raises:
        ParameterOutOfRangeError: If an input makes the formula undefined
        TypeError: If a required input is missing or an unknown one is given
    """
    which = TheoremBound(which)
    inputs = dict(params)
    if which is TheoremBound.THM8_KAPPA1:
        value, validity, extra = _label_kappa1(**params)
        inputs.update(extra)
        return BoundReport(which.value, value, inputs, validity, units="excess_risk")
    value, validity = _EVALUATORS[which](params)
    report = BoundReport(which.value, value, inputs, validity, units="queries")
    if not report.quotable:
        logger.info("%s evaluated outside its range: %s", which.value, report.violations())
    return report


class SmoothnessClass(str, Enum):
    LIPSCHITZ = "lipschitz"
    STRONGLY_CONVEX = "strongly_convex"


def corollary_order(
    condition: SmoothnessClass,
    domain: Domain,
    oracle_kind: OracleKind,
    sigma: float,
    eps: float,
    r: float = 1.0,
) -> BoundReport:
    """
    Growth order of the Gaussian lower bounds on rho-boxes and rho-balls.

    The value is the order expression without its absolute constant, e.g.
    n^2 rho^2 / (1 + n rho^2) * sigma^2 / eps^(2/r) for Lipschitz functions
    on a box under the first-order oracle.
    """
    condition = SmoothnessClass(condition)
    oracle_kind = OracleKind(oracle_kind)
    if oracle_kind not in (OracleKind.FOG, OracleKind.SOG):
        raise UnsupportedOracleError(oracle_kind, "corollary_order")
    eps = _positive("eps", eps)
    n, rho = domain.dim, domain.radius
    box = domain.kind is DomainKind.BOX_INF
    fog = oracle_kind is OracleKind.FOG

    if condition is SmoothnessClass.LIPSCHITZ:
        base = n**2 * rho**2 if box else n * rho**2
        if fog:
            base /= (1.0 + n * rho**2) if box else (1.0 + rho**2)
        value = base * sigma**2 / eps ** (2.0 / r)
        admissible = eps <= (domain.inscribed_scale() * math.sqrt(n / 8.0)) ** r
    else:
        base = float(n)
        if fog:
            base /= (n * rho**2 + 1.0) if box else (rho**2 + 1.0)
        value = base * sigma**2 / eps ** (1.0 / r)
        admissible = eps <= (n * domain.inscribed_scale() ** 2 / 16.0) ** r

    name = f"corollary_{condition.value}_{domain.kind.value}_{oracle_kind.value}"
    inputs = {"n": n, "rho": rho, "sigma": sigma, "eps": eps, "r": r}
    validity = [
        _condition("n >= 16", n >= 16),
        _condition("ε within the construction range", admissible),
    ]
    return BoundReport(name, value, inputs, validity, units="queries")


def anytime_exponent(
    family: str, degree: Optional[int] = None, kappa: Optional[float] = None
) -> float:
    """
    Best polynomial decay exponent gamma for anytime algorithms.

    strongly_convex -> 1; even_power of degree m -> m / (m - 1);
    active_learning with kappa in (1, 2] -> kappa / (2 kappa - 2).
    """
    if family == "strongly_convex":
        return 1.0
    if family == "even_power":
        if degree not in EVEN_DEGREES:
            raise ParameterOutOfRangeError("degree", degree, f"m in {EVEN_DEGREES}")
        return degree / (degree - 1.0)
    if family == "active_learning":
        if kappa is None or not 1.0 < kappa <= 2.0:
            raise ParameterOutOfRangeError("kappa", kappa, "1 < kappa <= 2")
        return kappa / (2.0 * kappa - 2.0)
    raise ParameterOutOfRangeError(
        "family", family, "strongly_convex, even_power or active_learning"
    )


def active_learning_recurrence(kappa: float, C: float) -> Tuple[float, float, float]:
    """
    (K, L, alpha) of the recurrence K ln(1/eps_T) - L <= sum_t eps_t^alpha.

    Any label strategy whose distances eps_t meet the risk targets must obey it.
    """
    if not 1.0 < kappa <= 2.0:
        raise ParameterOutOfRangeError("kappa", kappa, "1 < kappa <= 2")
    if not 0.0 < C < 0.5:
        raise ParameterOutOfRangeError("C", C, "0 < C < 1/2")
    factor = 3.0 ** ((kappa - 2.0) / kappa)
    K = factor / (2.0 * C**2)
    L = 5.0 * factor * LN2 / (4.0 * C**2)
    return K, L, 2.0 * (kappa - 1.0)


@dataclass(frozen=True, eq=False)
class RecurrenceReport:
    holds_for_all: bool
    holds_up_to: int
    first_violation: Optional[int]
    witness_times: np.ndarray
    rate_constant: float


def recurrence_check(
    K: float,
    L: float,
    alpha: float,
    eps_seq,
    c: Optional[float] = None,
) -> RecurrenceReport:
    """
    Check K ln(1/eps_T) - L <= sum_{t<=T} eps_t^alpha for every prefix T.

    Also collects the times t with eps_t >= c t^(-1/alpha); c defaults to
    half of (K/alpha)^(1/alpha). A zero eps_T with K > 0 counts as a violation.
    Times are 1-based.
    """
    eps = np.asarray(eps_seq, dtype=float)
    if eps.ndim != 1 or eps.size == 0:
        raise ParameterOutOfRangeError("eps_seq", eps_seq, "a nonempty sequence")
    if np.any(eps < 0):
        raise ParameterOutOfRangeError("eps_seq", "negative entry", "eps_t >= 0")
    if not alpha > 0:
        raise ParameterOutOfRangeError("alpha", alpha, "alpha > 0")

    positive = eps > 0
    log_inverse = -np.log(np.where(positive, eps, 1.0))
    if K > 0:
        lhs = np.where(positive, K * log_inverse - L, np.inf)
    else:
        lhs = K * log_inverse - L
    rhs = np.cumsum(eps**alpha)
    violated = np.flatnonzero(lhs > rhs)

    if c is None:
        c = 0.5 * (K / alpha) ** (1.0 / alpha) if K > 0 else 0.0
    times = np.arange(1, eps.size + 1)
    witnesses = times[eps >= c * times ** (-1.0 / alpha)]

    if violated.size:
        first = int(violated[0]) + 1
        return RecurrenceReport(False, first - 1, first, witnesses, float(c))
    return RecurrenceReport(True, int(eps.size), None, witnesses, float(c))


def _counts(confusion) -> np.ndarray:
    counts = np.asarray(confusion, dtype=float)
    if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
        raise ParameterOutOfRangeError("confusion", counts.shape, "a square matrix")
    if np.any(counts < 0):
        raise ParameterOutOfRangeError("confusion", "negative count", "counts >= 0")
    return counts


def plugin_mi(confusion) -> float:
    """Plug-in mutual information of the empirical joint law of (M, M_hat)."""
    counts = _counts(confusion)
    total = counts.sum()
    if total <= 0:
        return 0.0
    joint = counts / total
    product = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    seen = joint > 0
    return max(float(np.sum(rel_entr(joint[seen], product[seen]))), 0.0)


def miller_madow_correction(confusion) -> float:
    """Bias correction (nonzero cells - 1) / (2 * total), reported beside the estimate."""
    counts = _counts(confusion)
    total = counts.sum()
    if total <= 0:
        return 0.0
    return (int(np.count_nonzero(counts)) - 1) / (2.0 * total)


def mi_bootstrap_interval(
    confusion,
    rng: np.random.Generator,
    resamples: int = BOOTSTRAP_RESAMPLES,
) -> Tuple[float, float]:
    """
    Symmetric interval plug-in MI +- 2 bootstrap standard errors, clipped at 0.

    Rows are resampled separately with their own totals, matching the
    stratified trial design.
    """
    counts = _counts(confusion)
    estimate = plugin_mi(counts)
    rows = counts.sum(axis=1)
    draws = np.zeros((resamples,) + counts.shape)
    for i, total in enumerate(rows):
        if total > 0:
            draws[:, i, :] = rng.multinomial(int(total), counts[i] / total, size=resamples)
    replicates = np.array([plugin_mi(draw) for draw in draws])
    spread = 2.0 * float(replicates.std(ddof=1)) if resamples > 1 else 0.0
    return max(estimate - spread, 0.0), estimate + spread
