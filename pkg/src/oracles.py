"""Stochastic oracle kernels, their sampling and closed-form response divergences."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import rel_entr

from src.errors import (
    DomainViolationError,
    IncompatibleInstancesError,
    IncompatibleOracleError,
    ParameterOutOfRangeError,
    UnsupportedOracleError,
)
from src.geometry import PointLike
from src.instances import Family, Instance

logger = logging.getLogger(__name__)


class OracleKind(str, Enum):
    NOISELESS = "noiseless"
    FOG = "fog"
    SOG = "sog"
    MOMENT_BOUNDED = "moment"
    BERNOULLI_LABEL = "label"
    STAT_ESTIMATION = "stat"


class ResponseKind(str, Enum):
    FIRST_ORDER = "first_order"
    GRAD_ONLY = "grad_only"
    LABEL = "label"
    RAW = "raw"


@dataclass(frozen=True, eq=False)
class OracleResponse:
    kind: ResponseKind
    value: Optional[float] = None
    grad: Optional[np.ndarray] = None
    label: Optional[int] = None
    raw: Optional[np.ndarray] = None

    def gradient_part(self) -> np.ndarray:
        if self.grad is None:
            raise IncompatibleOracleError(self.kind, "response carries no gradient")
        return self.grad

    def identical(self, other: "OracleResponse") -> bool:
        """Bit-exact equality of two responses."""
        return (
            self.kind is other.kind
            and self.value == other.value
            and self.label == other.label
            and _same_array(self.grad, other.grad)
            and _same_array(self.raw, other.raw)
        )


def _same_array(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return bool(np.array_equal(a, b))


@dataclass(frozen=True)
class OracleModel:
    """
    Immutable description of one oracle kernel.

    Build it through the named constructors, which validate the parameter ranges.
    """

    kind: OracleKind
    sigma: float = 0.0
    total_variance: bool = False
    alpha: float = 2.0
    moment_c: float = 1.0
    eps: float = 0.0
    lipschitz: float = 1.0
    kappa: float = 1.0
    c_low: float = 0.0
    c_high: float = 0.0

    @classmethod
    def noiseless(cls) -> "OracleModel":
        return cls(OracleKind.NOISELESS)

    @classmethod
    def fog(cls, sigma: float, total_variance: bool = False) -> "OracleModel":
        if not sigma > 0:
            raise ParameterOutOfRangeError("sigma", sigma, "sigma > 0")
        return cls(OracleKind.FOG, sigma=float(sigma), total_variance=total_variance)

    @classmethod
    def sog(cls, sigma: float, total_variance: bool = False) -> "OracleModel":
        if not sigma > 0:
            raise ParameterOutOfRangeError("sigma", sigma, "sigma > 0")
        return cls(OracleKind.SOG, sigma=float(sigma), total_variance=total_variance)

    @classmethod
    def moment_bounded(
        cls,
        alpha: float,
        eps: float,
        lipschitz: float = 1.0,
        c: Optional[float] = None,
    ) -> "OracleModel":
        """
        Sparse-response oracle answering p^-1 (f(x), grad f(x)) with probability p.

        Args:
            alpha: Moment order, alpha > 1
            eps: Accuracy the response probability p = c eps^(alpha/(alpha-1)) is set for
            lipschitz: Moment bound L
            c: Probability constant; defaults to twice the smallest admissible value

        Raises:
            ParameterOutOfRangeError: If alpha, c or the resulting p are out of range
        """
        if not alpha > 1:
            raise ParameterOutOfRangeError("alpha", alpha, "alpha > 1")
        if not eps > 0:
            raise ParameterOutOfRangeError("eps", eps, "eps > 0")
        limit = min(lipschitz**alpha / 2.0, 1.0)
        if c is None:
            c = 2.0 * limit ** (1.0 / (1.0 - alpha))
        if not c ** (1.0 - alpha) < limit:
            raise ParameterOutOfRangeError(
                "c", c, f"c^(1-alpha) < min(L^alpha/2, 1) = {limit:.6g}"
            )
        oracle = cls(
            OracleKind.MOMENT_BOUNDED,
            alpha=float(alpha),
            moment_c=float(c),
            eps=float(eps),
            lipschitz=float(lipschitz),
        )
        if not 0 < oracle.probability <= 1:
            raise ParameterOutOfRangeError(
                "eps", eps, f"response probability c eps^(alpha/(alpha-1)) <= 1 with c={c:.6g}"
            )
        return oracle

    @classmethod
    def bernoulli_label(cls, kappa: float, c_low: float, c_high: float) -> "OracleModel":
        if not kappa >= 1:
            raise ParameterOutOfRangeError("kappa", kappa, "kappa >= 1")
        if not 0 < c_low < c_high < 0.5:
            raise ParameterOutOfRangeError("c, C", (c_low, c_high), "0 < c < C < 1/2")
        return cls(
            OracleKind.BERNOULLI_LABEL,
            kappa=float(kappa),
            c_low=float(c_low),
            c_high=float(c_high),
        )

    @classmethod
    def stat_estimation(cls, sigma: float) -> "OracleModel":
        if not sigma > 0:
            raise ParameterOutOfRangeError("sigma", sigma, "sigma > 0")
        return cls(OracleKind.STAT_ESTIMATION, sigma=float(sigma))

    @property
    def probability(self) -> float:
        """Response probability p of the moment-bounded oracle."""
        return self.moment_c * self.eps ** (self.alpha / (self.alpha - 1.0))

    def gradient_noise_scale(self, dim: int) -> float:
        if self.total_variance:
            return self.sigma / math.sqrt(dim)
        return self.sigma


def check_compatible(oracle: OracleModel, inst: Instance) -> None:
    """Raise IncompatibleOracleError when the oracle cannot answer about inst."""
    if oracle.kind is OracleKind.MOMENT_BOUNDED and inst.family is not Family.LINEAR:
        raise IncompatibleOracleError(oracle.kind, "defined only on the linear pair")
    if oracle.kind is OracleKind.BERNOULLI_LABEL and inst.family is not Family.THRESHOLD:
        raise IncompatibleOracleError(oracle.kind, "labels need a threshold instance")
    if oracle.kind is OracleKind.STAT_ESTIMATION and inst.family is Family.LINEAR:
        raise IncompatibleOracleError(oracle.kind, "estimation needs a centered instance")


def label_probabilities(
    oracle: OracleModel, values: np.ndarray, grads: np.ndarray
) -> np.ndarray:
    """
    eta(x) from the threshold pair (|x - theta|, sign(x - theta)), vectorized.

    Uses the upper Tsybakov envelope 1/2 + sign(x - theta) C |x - theta|^(kappa-1).
    """
    margin = oracle.c_high * np.asarray(values, dtype=float) ** (oracle.kappa - 1.0)
    signs = np.sign(np.asarray(grads, dtype=float).reshape(margin.size, -1)[:, 0])
    return np.clip(0.5 + signs * margin, 0.0, 1.0)


def label_probability(oracle: OracleModel, value: float, grad: np.ndarray) -> float:
    return float(label_probabilities(oracle, np.array([value]), np.atleast_2d(grad))[0])


def _checked(inst: Instance, x: PointLike) -> np.ndarray:
    point = inst.domain.as_point(x)
    if not inst.domain.contains(point):
        raise DomainViolationError(point.tolist(), inst.domain)
    return point


def sample(
    oracle: OracleModel, inst: Instance, x: PointLike, rng: np.random.Generator
) -> OracleResponse:
    """Draw one response Y ~ P(. | f, x) from the caller's stream."""
    point = _checked(inst, x)
    check_compatible(oracle, inst)
    kind = oracle.kind

    if kind is OracleKind.STAT_ESTIMATION:
        noise = rng.normal(0.0, oracle.sigma, size=inst.domain.dim)
        return OracleResponse(ResponseKind.RAW, raw=inst.center + noise)

    value = inst.value(point)
    grad = inst.gradient(point)
    if kind is OracleKind.NOISELESS:
        return OracleResponse(ResponseKind.FIRST_ORDER, value=value, grad=grad)
    if kind is OracleKind.FOG:
        w = rng.normal(0.0, oracle.sigma)
        z = rng.normal(0.0, oracle.gradient_noise_scale(point.size), size=point.size)
        return OracleResponse(ResponseKind.FIRST_ORDER, value=value + w, grad=grad + z)
    if kind is OracleKind.SOG:
        z = rng.normal(0.0, oracle.gradient_noise_scale(point.size), size=point.size)
        return OracleResponse(ResponseKind.GRAD_ONLY, grad=grad + z)
    if kind is OracleKind.MOMENT_BOUNDED:
        p = oracle.probability
        if rng.random() < p:
            return OracleResponse(ResponseKind.FIRST_ORDER, value=value / p, grad=grad / p)
        return OracleResponse(ResponseKind.FIRST_ORDER, value=0.0, grad=np.zeros_like(grad))

    eta = label_probability(oracle, value, grad)
    label = 1 if rng.random() < eta else -1
    return OracleResponse(ResponseKind.LABEL, label=label)


def binary_kl(p: float, q: float) -> float:
    """KL divergence in nats between Bernoulli(p) and Bernoulli(q)."""
    return float(rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q))


def response_kl(
    oracle: OracleModel, inst_a: Instance, inst_b: Instance, x: PointLike
) -> float:
    """
    D(P(. | f_a, x) || P(. | f_b, x)) in nats.

    Raises:
        IncompatibleInstancesError: If the instances are not from one family and domain
        UnsupportedOracleError: For the moment-bounded oracle
    """
    if not inst_a.comparable(inst_b):
        raise IncompatibleInstancesError(inst_a, inst_b)
    if oracle.kind is OracleKind.MOMENT_BOUNDED:
        raise UnsupportedOracleError(oracle.kind, "response_kl")
    point = _checked(inst_a, x)
    check_compatible(oracle, inst_a)
    kind = oracle.kind

    if kind is OracleKind.STAT_ESTIMATION:
        diff = inst_a.center - inst_b.center
        return float(np.dot(diff, diff)) / (2.0 * oracle.sigma**2)

    value_gap = inst_a.value(point) - inst_b.value(point)
    grad_gap = inst_a.gradient(point) - inst_b.gradient(point)
    if kind is OracleKind.NOISELESS:
        if value_gap == 0.0 and not np.any(grad_gap):
            return 0.0
        return math.inf
    if kind is OracleKind.BERNOULLI_LABEL:
        eta_a = label_probability(oracle, inst_a.value(point), inst_a.gradient(point))
        eta_b = label_probability(oracle, inst_b.value(point), inst_b.gradient(point))
        return binary_kl(eta_a, eta_b)

    grad_var = oracle.gradient_noise_scale(point.size) ** 2
    grad_term = float(np.dot(grad_gap, grad_gap)) / (2.0 * grad_var)
    if kind is OracleKind.SOG:
        return grad_term
    return value_gap**2 / (2.0 * oracle.sigma**2) + grad_term


def pure_noise_kl(
    oracle: OracleModel, inst: Instance, x: PointLike, common_min: float
) -> float:
    """
    D(P(. | f, x) || Q*) where Q* is the response law at a minimizer.

    At a minimizer the first-order oracle returns (c* + W, Z) and the label
    oracle a fair coin.
    """
    point = _checked(inst, x)
    check_compatible(oracle, inst)
    kind = oracle.kind
    value = inst.value(point)
    grad = inst.gradient(point)
    if kind is OracleKind.BERNOULLI_LABEL:
        return binary_kl(label_probability(oracle, value, grad), 0.5)
    if kind not in (OracleKind.FOG, OracleKind.SOG):
        raise UnsupportedOracleError(kind, "pure_noise_kl")
    grad_var = oracle.gradient_noise_scale(point.size) ** 2
    grad_term = float(np.dot(grad, grad)) / (2.0 * grad_var)
    if kind is OracleKind.SOG:
        return grad_term
    return (value - common_min) ** 2 / (2.0 * oracle.sigma**2) + grad_term


def _row_sq_norms(rows: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", rows, rows)


def response_kl_grid(
    oracle: OracleModel, inst_a: Instance, inst_b: Instance, points: np.ndarray
) -> np.ndarray:
    """
    response_kl at every row of points, which must lie in the domain.

    Used for sup-estimates over evaluation grids.
    """
    if not inst_a.comparable(inst_b):
        raise IncompatibleInstancesError(inst_a, inst_b)
    if oracle.kind is OracleKind.MOMENT_BOUNDED:
        raise UnsupportedOracleError(oracle.kind, "response_kl")
    check_compatible(oracle, inst_a)
    points = np.asarray(points, dtype=float).reshape(-1, inst_a.domain.dim)
    kind = oracle.kind

    if kind is OracleKind.STAT_ESTIMATION:
        diff = inst_a.center - inst_b.center
        return np.full(points.shape[0], float(np.dot(diff, diff)) / (2.0 * oracle.sigma**2))

    values_a, values_b = inst_a.values(points), inst_b.values(points)
    grads_a, grads_b = inst_a.gradients(points), inst_b.gradients(points)
    if kind is OracleKind.NOISELESS:
        same = (values_a == values_b) & np.all(grads_a == grads_b, axis=1)
        return np.where(same, 0.0, np.inf)
    if kind is OracleKind.BERNOULLI_LABEL:
        eta_a = label_probabilities(oracle, values_a, grads_a)
        eta_b = label_probabilities(oracle, values_b, grads_b)
        return rel_entr(eta_a, eta_b) + rel_entr(1.0 - eta_a, 1.0 - eta_b)

    grad_var = oracle.gradient_noise_scale(points.shape[1]) ** 2
    grad_term = _row_sq_norms(grads_a - grads_b) / (2.0 * grad_var)
    if kind is OracleKind.SOG:
        return grad_term
    return (values_a - values_b) ** 2 / (2.0 * oracle.sigma**2) + grad_term


def pure_noise_kl_grid(
    oracle: OracleModel, inst: Instance, points: np.ndarray, common_min: float
) -> np.ndarray:
    """pure_noise_kl at every row of points."""
    check_compatible(oracle, inst)
    points = np.asarray(points, dtype=float).reshape(-1, inst.domain.dim)
    values = inst.values(points)
    grads = inst.gradients(points)
    kind = oracle.kind
    if kind is OracleKind.BERNOULLI_LABEL:
        eta = label_probabilities(oracle, values, grads)
        return rel_entr(eta, 0.5) + rel_entr(1.0 - eta, 0.5)
    if kind not in (OracleKind.FOG, OracleKind.SOG):
        raise UnsupportedOracleError(kind, "pure_noise_kl")
    grad_var = oracle.gradient_noise_scale(points.shape[1]) ** 2
    grad_term = _row_sq_norms(grads) / (2.0 * grad_var)
    if kind is OracleKind.SOG:
        return grad_term
    return (values - common_min) ** 2 / (2.0 * oracle.sigma**2) + grad_term
