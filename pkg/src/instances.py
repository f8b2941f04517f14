"""Parametric convex objective families and the ensembles built from them."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.errors import (
    DomainViolationError,
    IncompatibleInstancesError,
    ParameterOutOfRangeError,
)
from src.geometry import Domain, DomainKind, PointLike, lattice_packing, vg_packing

logger = logging.getLogger(__name__)

EVEN_DEGREES = (2, 4, 6, 8)
GENERIC_GRID_STEP = 1e-4


class Family(str, Enum):
    NORM_DISTANCE = "norm_distance"
    QUADRATIC = "quadratic"
    EVEN_POWER = "even_power"
    LINEAR = "linear"
    THRESHOLD = "threshold"


@dataclass(frozen=True, eq=False)
class Instance:
    """
    One objective f from a parametric family on a fixed domain.

    value() and gradient() skip the domain check; evaluate() and subgradient()
    are the checked entry points.
    """

    family: Family
    domain: Domain
    center: Optional[np.ndarray] = None
    scale: float = 1.0
    degree: int = 2
    slope: Optional[np.ndarray] = None
    sign: int = 1

    @classmethod
    def norm_distance(
        cls, domain: Domain, center: PointLike, scale: float = 1.0
    ) -> "Instance":
        if not scale > 0:
            raise ParameterOutOfRangeError("scale", scale, "c > 0")
        return cls(Family.NORM_DISTANCE, domain, _center(domain, center), float(scale))

    @classmethod
    def quadratic(cls, domain: Domain, center: PointLike) -> "Instance":
        return cls(Family.QUADRATIC, domain, _center(domain, center))

    @classmethod
    def even_power(cls, domain: Domain, center: float, degree: int) -> "Instance":
        if domain.dim != 1:
            raise ParameterOutOfRangeError("dim", domain.dim, "n = 1 for even powers")
        if degree not in EVEN_DEGREES:
            raise ParameterOutOfRangeError("degree", degree, f"m in {EVEN_DEGREES}")
        return cls(Family.EVEN_POWER, domain, _center(domain, center), degree=degree)

    @classmethod
    def linear(cls, domain: Domain, slope: PointLike, sign: int = 1) -> "Instance":
        if sign not in (-1, 1):
            raise ParameterOutOfRangeError("sign", sign, "s in {-1, +1}")
        return cls(Family.LINEAR, domain, slope=domain.as_point(slope), sign=sign)

    @classmethod
    def threshold(cls, domain: Domain, center: float) -> "Instance":
        if domain.dim != 1:
            raise ParameterOutOfRangeError("dim", domain.dim, "n = 1 for thresholds")
        return cls(Family.THRESHOLD, domain, _center(domain, center))

    def value(self, x: np.ndarray) -> float:
        if self.family is Family.LINEAR:
            return float(self.sign * np.dot(self.slope, x))
        diff = x - self.center
        if self.family is Family.NORM_DISTANCE:
            return float(self.scale * np.linalg.norm(diff))
        if self.family is Family.QUADRATIC:
            return float(0.5 * np.dot(diff, diff))
        if self.family is Family.EVEN_POWER:
            return float(diff[0] ** self.degree)
        return float(abs(diff[0]))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.family is Family.LINEAR:
            return self.sign * self.slope
        diff = x - self.center
        if self.family is Family.NORM_DISTANCE:
            norm = np.linalg.norm(diff)
            if norm == 0.0:
                return np.zeros_like(diff)
            return self.scale * diff / norm
        if self.family is Family.QUADRATIC:
            return diff
        if self.family is Family.EVEN_POWER:
            return self.degree * diff ** (self.degree - 1)
        return np.sign(diff)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Vectorized value() over the rows of points."""
        points = np.asarray(points, dtype=float).reshape(-1, self.domain.dim)
        if self.family is Family.LINEAR:
            return self.sign * points @ self.slope
        diff = points - self.center
        if self.family is Family.NORM_DISTANCE:
            return self.scale * np.linalg.norm(diff, axis=1)
        if self.family is Family.QUADRATIC:
            return 0.5 * np.einsum("ij,ij->i", diff, diff)
        if self.family is Family.EVEN_POWER:
            return diff[:, 0] ** self.degree
        return np.abs(diff[:, 0])

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Vectorized gradient(); one row per point."""
        points = np.asarray(points, dtype=float).reshape(-1, self.domain.dim)
        if self.family is Family.LINEAR:
            return np.broadcast_to(self.sign * self.slope, points.shape).copy()
        diff = points - self.center
        if self.family is Family.NORM_DISTANCE:
            norms = np.linalg.norm(diff, axis=1, keepdims=True)
            safe = np.where(norms == 0.0, 1.0, norms)
            return np.where(norms == 0.0, 0.0, self.scale * diff / safe)
        if self.family is Family.QUADRATIC:
            return diff
        if self.family is Family.EVEN_POWER:
            return self.degree * diff ** (self.degree - 1)
        return np.sign(diff)

    def minimizer(self) -> np.ndarray:
        if self.family is not Family.LINEAR:
            return self.center.copy()
        direction = self.sign * self.slope
        if self.domain.kind is DomainKind.BOX_INF:
            return self.domain.center_array - self.domain.radius * np.sign(direction)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            return self.domain.center_array.copy()
        return self.domain.center_array - self.domain.radius * direction / norm

    def minimum(self) -> float:
        if self.family is not Family.LINEAR:
            return 0.0
        offset = self.sign * float(np.dot(self.slope, self.domain.center_array))
        return offset - self.domain.radius * dual_norm(self.domain, self.slope)

    def comparable(self, other: "Instance") -> bool:
        return (
            self.family is other.family
            and self.domain == other.domain
            and (self.family is not Family.EVEN_POWER or self.degree == other.degree)
        )

    def __repr__(self) -> str:
        if self.family is Family.LINEAR:
            return f"Instance(linear, sign={self.sign}, slope={self.slope.tolist()})"
        return f"Instance({self.family.value}, center={self.center.tolist()})"


def _center(domain: Domain, center: PointLike) -> np.ndarray:
    point = domain.as_point(center)
    if not domain.contains(point):
        raise DomainViolationError(point.tolist(), domain)
    return point


def dual_norm(domain: Domain, vector: np.ndarray) -> float:
    if domain.kind is DomainKind.BOX_INF:
        return float(np.sum(np.abs(vector)))
    return float(np.linalg.norm(vector))


def _checked_point(inst: Instance, x: PointLike) -> np.ndarray:
    point = inst.domain.as_point(x)
    if not inst.domain.contains(point):
        raise DomainViolationError(point.tolist(), inst.domain)
    return point


def evaluate(inst: Instance, x: PointLike) -> float:
    """Exact f(x); raises DomainViolationError outside the domain."""
    return inst.value(_checked_point(inst, x))


def subgradient(inst: Instance, x: PointLike) -> np.ndarray:
    """Deterministic subgradient selector; the zero vector at a kink minimizer."""
    return inst.gradient(_checked_point(inst, x))


def separation(a: Instance, b: Instance) -> float:
    """Family-specific separation d(a, b)."""
    if not a.comparable(b):
        raise IncompatibleInstancesError(a, b)
    if a.family is Family.LINEAR:
        combined = a.sign * a.slope + b.sign * b.slope
        return a.domain.radius * (
            dual_norm(a.domain, a.slope)
            + dual_norm(a.domain, b.slope)
            - dual_norm(a.domain, combined)
        )
    diff = a.center - b.center
    if a.family is Family.NORM_DISTANCE:
        return a.scale * float(np.linalg.norm(diff))
    if a.family is Family.QUADRATIC:
        return 0.5 * float(np.dot(diff, diff))
    if a.family is Family.EVEN_POWER:
        return 2.0 ** (1 - a.degree) * float(diff[0]) ** a.degree
    return abs(float(diff[0]))


def generic_separation(
    a: Instance, b: Instance, grid_step: float = GENERIC_GRID_STEP
) -> float:
    """inf_x [a(x) + b(x)] - [a* + b*] by grid minimization on a 1-D domain."""
    if not a.comparable(b):
        raise IncompatibleInstancesError(a, b)
    count = int(math.ceil(2.0 * a.domain.radius / grid_step)) + 1
    grid = a.domain.grid(count)
    total = a.values(grid) + b.values(grid)
    return float(total.min() - (a.minimum() + b.minimum()))


class EnsembleKind(str, Enum):
    LIPSCHITZ_VG = "lipschitz_vg"
    STRONGLY_CONVEX_VG = "strongly_convex_vg"
    LIPSCHITZ_PAIR = "lipschitz_pair"
    QUADRATIC_PAIR = "quadratic_pair"
    QUADRATIC_LATTICE = "quadratic_lattice"
    EVEN_POWER_PAIR = "even_power_pair"
    EVEN_POWER_LATTICE = "even_power_lattice"
    LINEAR_PAIR = "linear_pair"
    THRESHOLD_LATTICE = "threshold_lattice"


@dataclass(frozen=True, eq=False)
class InstanceEnsemble:
    instances: tuple
    separation: Optional[float]
    common_min: Optional[float]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.instances:
            raise ParameterOutOfRangeError("N", 0, "N >= 1")
        first = self.instances[0]
        for other in self.instances[1:]:
            if not first.comparable(other):
                raise IncompatibleInstancesError(first, other)

    @property
    def size(self) -> int:
        return len(self.instances)

    @property
    def family(self) -> Family:
        return self.instances[0].family

    @property
    def domain(self) -> Domain:
        return self.instances[0].domain

    def excess(self, x: np.ndarray) -> np.ndarray:
        """f_i(x) - f_i* for every member."""
        return np.array([inst.value(x) - inst.minimum() for inst in self.instances])


def exclusion_holds(
    ensemble: InstanceEnsemble, level: float, points: np.ndarray
) -> bool:
    """True when no point is a level-minimizer of two members at once."""
    excess = np.stack(
        [inst.values(points) - inst.minimum() for inst in ensemble.instances]
    )
    good = excess < level
    return bool(np.all(good.sum(axis=0) <= 1))


def _require(condition: bool, name: str, value, admissible: str) -> None:
    if not condition:
        raise ParameterOutOfRangeError(name, value, admissible)


def _lipschitz_vg(domain: Domain, eps: float, r: float, seed: int):
    n = domain.dim
    _require(n >= 16, "n", n, "n >= 16")
    s = domain.inscribed_scale()
    bound = (s * math.sqrt(n / 8.0)) ** r
    _require(0 < eps <= bound, "eps", eps, f"0 < eps <= (s_X sqrt(n/8))^r = {bound:.6g}")
    level = eps ** (1.0 / r)
    packing = vg_packing(n, seed)
    scale = level / s * math.sqrt(8.0 / n)
    instances = tuple(
        Instance.norm_distance(domain, domain.center_array + s * xi, scale)
        for xi in packing.points
    )
    return instances, 2.0 * level, 0.0, {"scale": scale, "packing": packing.meta}


def _strongly_convex_vg(domain: Domain, eps: float, r: float, seed: int):
    n = domain.dim
    _require(n >= 16, "n", n, "n >= 16")
    s = domain.inscribed_scale()
    bound = (n * s**2 / 16.0) ** r
    _require(0 < eps <= bound, "eps", eps, f"0 < eps <= (n s_X^2 / 16)^r = {bound:.6g}")
    level = eps ** (1.0 / r)
    packing = vg_packing(n, seed)
    spread = math.sqrt(16.0 * level / n)
    instances = tuple(
        Instance.quadratic(domain, domain.center_array + spread * xi)
        for xi in packing.points
    )
    return instances, 2.0 * level, 0.0, {"spread": spread, "packing": packing.meta}


def _one_dimensional(domain: Domain) -> None:
    _require(domain.dim == 1, "dim", domain.dim, "n = 1")


def _lipschitz_pair(domain: Domain, eps: float, r: float):
    _one_dimensional(domain)
    rho = domain.radius
    level = eps ** (1.0 / r)
    _require(0 < level <= rho / 2.0, "eps", eps, f"0 < eps^(1/r) <= rho/2 = {rho / 2:.6g}")
    scale = 2.0 * level / rho
    mid = domain.center[0]
    instances = (
        Instance.norm_distance(domain, mid - rho / 2.0, scale),
        Instance.norm_distance(domain, mid + rho / 2.0, scale),
    )
    return instances, 2.0 * level, 0.0, {"scale": scale}


def _quadratic_pair(domain: Domain, eps: float, r: float):
    _one_dimensional(domain)
    rho = domain.radius
    level = eps ** (1.0 / r)
    _require(0 < level < 2.0 * rho**2, "eps", eps, f"0 < eps^(1/r) < 2 rho^2 = {2 * rho**2:.6g}")
    offset = min(math.sqrt(2.0 * level), rho)
    mid = domain.center[0]
    instances = (
        Instance.quadratic(domain, mid - offset),
        Instance.quadratic(domain, mid + offset),
    )
    # inf-formula d for two quadratics is ||a - b||^2 / 4
    certified = offset**2
    meta = {"offset": offset, "exclusion_certified": certified >= 2.0 * level * (1 - 1e-12)}
    return instances, certified, 0.0, meta


def _quadratic_lattice(domain: Domain, eps: float, r: float):
    level = eps ** (1.0 / r)
    _require(eps > 0, "eps", eps, "eps > 0")
    packing = lattice_packing(domain, 2.0 * math.sqrt(2.0 * level))
    instances = tuple(Instance.quadratic(domain, p) for p in packing.points)
    return instances, 2.0 * level, 0.0, {"packing": packing.meta}


def _even_power_pair(domain: Domain, eps: float, degree: int):
    _one_dimensional(domain)
    rho = domain.radius
    bound = rho ** (2 * degree)
    _require(0 < eps <= bound, "eps", eps, f"0 < eps <= rho^(2m) = {bound:.6g}")
    offset = eps ** (1.0 / (2 * degree))
    mid = domain.center[0]
    instances = (
        Instance.even_power(domain, mid + offset, degree),
        Instance.even_power(domain, mid - offset, degree),
    )
    return instances, 2.0 * math.sqrt(eps), 0.0, {"offset": offset, "r": 2}


def _even_power_lattice(domain: Domain, eps: float, degree: int):
    _one_dimensional(domain)
    _require(eps > 0, "eps", eps, "eps > 0")
    packing = lattice_packing(domain, 2.0 * eps ** (1.0 / (2 * degree)))
    instances = tuple(Instance.even_power(domain, p[0], degree) for p in packing.points)
    return instances, 2.0 * math.sqrt(eps), 0.0, {"packing": packing.meta, "r": 2}


def _linear_pair(
    domain: Domain, eps: float, lipschitz: Optional[float], alpha: Optional[float]
):
    _require(
        domain.kind is DomainKind.BOX_INF, "domain", domain, "an l_inf box domain"
    )
    bound = 1.0
    if lipschitz is not None and alpha is not None:
        bound = min(lipschitz / 2.0 ** (1.0 / alpha), 1.0)
    _require(0 < eps < bound, "eps", eps, f"0 < eps < min(L / 2^(1/alpha), 1) = {bound:.6g}")
    slope = np.full(domain.dim, eps / domain.dim)
    instances = (
        Instance.linear(domain, slope, -1),
        Instance.linear(domain, slope, 1),
    )
    minima = [inst.minimum() for inst in instances]
    common = minima[0] if math.isclose(minima[0], minima[1], abs_tol=1e-15) else None
    return instances, None, common, {"slope": eps / domain.dim}


def _threshold_lattice(domain: Domain, eps: float):
    _one_dimensional(domain)
    _require(eps > 0, "eps", eps, "eps > 0")
    packing = lattice_packing(domain, 2.0 * eps)
    instances = tuple(Instance.threshold(domain, p[0]) for p in packing.points)
    return instances, 2.0 * eps, 0.0, {"packing": packing.meta}


def build_ensemble(
    kind: EnsembleKind,
    domain: Domain,
    eps: float,
    r: float = 1.0,
    seed: int = 0,
    degree: int = 2,
    lipschitz: Optional[float] = None,
    alpha: Optional[float] = None,
) -> InstanceEnsemble:
    """
    Build the ensemble used by one lower-bound construction.

    Args:
        kind: Which construction to build
        domain: Domain shared by all members
        eps: Target accuracy the ensemble is separated for
        r: Error exponent (members are 2 eps^(1/r) apart where applicable)
        seed: Seed for the random sign packing
        degree: Even degree m for even-power constructions
        lipschitz: Moment bound L for the linear pair precondition
        alpha: Moment order for the linear pair precondition

    Returns:
        InstanceEnsemble with its certified separation and common minimum

    Raises:
        ParameterOutOfRangeError: If eps or the domain violate the construction's range
    """
    kind = EnsembleKind(kind)
    if kind is EnsembleKind.LIPSCHITZ_VG:
        built = _lipschitz_vg(domain, eps, r, seed)
    elif kind is EnsembleKind.STRONGLY_CONVEX_VG:
        built = _strongly_convex_vg(domain, eps, r, seed)
    elif kind is EnsembleKind.LIPSCHITZ_PAIR:
        built = _lipschitz_pair(domain, eps, r)
    elif kind is EnsembleKind.QUADRATIC_PAIR:
        built = _quadratic_pair(domain, eps, r)
    elif kind is EnsembleKind.QUADRATIC_LATTICE:
        built = _quadratic_lattice(domain, eps, r)
    elif kind is EnsembleKind.EVEN_POWER_PAIR:
        built = _even_power_pair(domain, eps, degree)
    elif kind is EnsembleKind.EVEN_POWER_LATTICE:
        built = _even_power_lattice(domain, eps, degree)
    elif kind is EnsembleKind.LINEAR_PAIR:
        built = _linear_pair(domain, eps, lipschitz, alpha)
    else:
        built = _threshold_lattice(domain, eps)

    instances, sep, common_min, meta = built
    if len(instances) < 2:
        raise ParameterOutOfRangeError("N", len(instances), "N >= 2")
    meta = {"construction": kind.value, "eps": eps, "r": r, **meta}
    logger.debug("Built %s ensemble with %d members on %s", kind.value, len(instances), domain)
    return InstanceEnsemble(instances, sep, common_min, meta)

