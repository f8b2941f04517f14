"""Problem domains, their geometric constants and packing constructions."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import gammaln

from src.errors import (
    PackingConstructionError,
    ParameterOutOfRangeError,
    SinglePointPackingError,
)
from src.streams import make_stream

logger = logging.getLogger(__name__)

PointLike = Union[float, Sequence[float], np.ndarray]

MEMBERSHIP_TOL = 1e-12
VG_DRAWS_PER_RESTART = 10**6
VG_RESTARTS = 10


class DomainKind(str, Enum):
    BOX_INF = "box_inf"
    BALL2 = "ball2"


def unit_ball_volume(n: int) -> float:
    """Volume v_n = pi^(n/2) / Gamma(n/2 + 1) of the Euclidean unit ball in R^n."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


@dataclass(frozen=True)
class Domain:
    """
    A compact convex domain: an l_inf box or an l_2 ball of radius rho.

    Intervals [a, b] are boxes in dimension 1 with center (a + b) / 2.
    """

    kind: DomainKind
    dim: int
    radius: float
    center: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterOutOfRangeError("dim", self.dim, "n >= 1")
        if not self.radius > 0:
            raise ParameterOutOfRangeError("radius", self.radius, "rho > 0")
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * self.dim)
        elif len(self.center) != self.dim:
            raise ParameterOutOfRangeError(
                "center", self.center, f"a vector of length {self.dim}"
            )
        else:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def box(
        cls, radius: float, dim: int = 1, center: Optional[Sequence[float]] = None
    ) -> "Domain":
        offset = tuple(center) if center is not None else ()
        return cls(DomainKind.BOX_INF, dim, float(radius), offset)

    @classmethod
    def ball(
        cls, radius: float, dim: int = 1, center: Optional[Sequence[float]] = None
    ) -> "Domain":
        offset = tuple(center) if center is not None else ()
        return cls(DomainKind.BALL2, dim, float(radius), offset)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        if not hi > lo:
            raise ParameterOutOfRangeError("interval", (lo, hi), "lo < hi")
        return cls.box((hi - lo) / 2.0, 1, ((lo + hi) / 2.0,))

    @cached_property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @cached_property
    def lower(self) -> np.ndarray:
        """Coordinate-wise lower corner of the bounding box"""
        return self.center_array - self.radius

    @cached_property
    def upper(self) -> np.ndarray:
        """Coordinate-wise upper corner of the bounding box"""
        return self.center_array + self.radius

    def diameter(self) -> float:
        """l_2 diameter D_X."""
        if self.kind is DomainKind.BOX_INF:
            return 2.0 * self.radius * math.sqrt(self.dim)
        return 2.0 * self.radius

    def inscribed_scale(self) -> float:
        """Largest s with center + s * B_inf contained in the domain."""
        if self.kind is DomainKind.BOX_INF:
            return self.radius
        return self.radius / math.sqrt(self.dim)

    def volume(self) -> float:
        if self.kind is DomainKind.BOX_INF:
            return (2.0 * self.radius) ** self.dim
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def as_point(self, x: PointLike) -> np.ndarray:
        point = np.atleast_1d(np.asarray(x, dtype=float))
        if point.shape != (self.dim,):
            raise ParameterOutOfRangeError(
                "point", x, f"a vector of length {self.dim}"
            )
        return point

    def contains(self, x: PointLike, tol: float = MEMBERSHIP_TOL) -> bool:
        offset = self.as_point(x) - self.center_array
        if self.kind is DomainKind.BOX_INF:
            return bool(np.max(np.abs(offset)) <= self.radius + tol)
        return bool(np.linalg.norm(offset) <= self.radius + tol)

    def project(self, x: PointLike) -> np.ndarray:
        """Euclidean projection: coordinate clamp for boxes, radial for balls."""
        point = self.as_point(x)
        if self.kind is DomainKind.BOX_INF:
            return np.clip(point, self.lower, self.upper)
        offset = point - self.center_array
        norm = np.linalg.norm(offset)
        if norm <= self.radius:
            return point
        return self.center_array + offset * (self.radius / norm)

    def inscribed_corners(self, max_free_dims: int = 12) -> np.ndarray:
        """
        Corner samples of center + s_X * B_inf.

        All sign patterns over the first min(n, max_free_dims) coordinates are
        enumerated; remaining coordinates alternate in sign.
        """
        free = min(self.dim, max_free_dims)
        tail = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(self.dim - free)])
        corners = []
        for signs in itertools.product((-1.0, 1.0), repeat=free):
            corners.append(np.concatenate([np.array(signs), tail]))
        return self.center_array + self.inscribed_scale() * np.array(corners)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform random points of the domain, one per row."""
        if self.kind is DomainKind.BOX_INF:
            offsets = rng.uniform(-self.radius, self.radius, size=(count, self.dim))
            return self.center_array + offsets
        directions = rng.standard_normal(size=(count, self.dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.radius * rng.uniform(size=(count, 1)) ** (1.0 / self.dim)
        return self.center_array + directions * radii

    def grid(self, count: int) -> np.ndarray:
        """Evenly spaced points of a one-dimensional domain, endpoints included."""
        if self.dim != 1:
            raise ParameterOutOfRangeError("dim", self.dim, "n = 1 for grids")
        return np.linspace(self.lower[0], self.upper[0], count)

    def __str__(self) -> str:
        name = "BoxInf" if self.kind is DomainKind.BOX_INF else "Ball2"
        return f"{name}(rho={self.radius:g}, n={self.dim}, center={self.center})"


@dataclass(frozen=True, eq=False)
class PackingSet:
    points: np.ndarray
    min_sq_dist: float
    domain: Domain
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    def pairwise_sq_dists(self) -> np.ndarray:
        return pdist(self.points, metric="sqeuclidean")

    def verify(self) -> bool:
        """Exhaustive check of membership, cardinality and certified separation."""
        if self.size < 2:
            return False
        if not all(self.domain.contains(p) for p in self.points):
            return False
        return bool(self.pairwise_sq_dists().min() >= self.min_sq_dist - 1e-12)


def vg_packing(
    n: int,
    rng_seed: int,
    max_draws: int = VG_DRAWS_PER_RESTART,
    max_restarts: int = VG_RESTARTS,
) -> PackingSet:
    """
    Greedy random subset of {-1, +1}^n with pairwise Hamming distance >= ceil(n/8).

    Args:
        n: Dimension, at least 16
        rng_seed: Seed; each restart derives its own stream from it
        max_draws: Candidate sign vectors drawn per restart
        max_restarts: Number of restarts before giving up

    Returns:
        PackingSet of ceil(2^(n/8)) + 1 sign vectors inside BoxInf(1)

    Raises:
        ParameterOutOfRangeError: If n < 16
        PackingConstructionError: If every restart exhausts its draw budget
    """
    if n < 16:
        raise ParameterOutOfRangeError("n", n, "n >= 16")
    target = math.ceil(2.0 ** (n / 8.0)) + 1
    threshold = math.ceil(n / 8.0)

    for restart in range(max_restarts):
        rng = make_stream(rng_seed, restart)
        kept = np.empty((target, n))
        count = 0
        draws = 0
        while draws < max_draws and count < target:
            batch = min(4096, max_draws - draws)
            candidates = 2.0 * rng.integers(0, 2, size=(batch, n)) - 1.0
            draws += batch
            for candidate in candidates:
                if count:
                    hamming = (n - kept[:count] @ candidate) / 2.0
                    if hamming.min() < threshold:
                        continue
                kept[count] = candidate
                count += 1
                if count == target:
                    break
        if count == target:
            min_sq = float(pdist(kept, metric="sqeuclidean").min())
            logger.debug(
                "Sign packing n=%d: %d points after %d draws (restart %d)",
                n,
                target,
                draws,
                restart,
            )
            return PackingSet(
                points=kept,
                min_sq_dist=min_sq,
                domain=Domain.box(1.0, n),
                meta={
                    "construction": "varshamov_gilbert",
                    "hamming_threshold": threshold,
                    "restart": restart,
                    "draws": draws,
                },
            )
        logger.debug("Sign packing n=%d: restart %d kept %d/%d", n, restart, count, target)

    raise PackingConstructionError(n, max_restarts)


def _antipodal_pair(domain: Domain) -> np.ndarray:
    if domain.kind is DomainKind.BOX_INF:
        direction = np.full(domain.dim, domain.radius)
    else:
        direction = np.zeros(domain.dim)
        direction[0] = domain.radius
    return np.vstack([domain.center_array - direction, domain.center_array + direction])


def lattice_packing(
    domain: Domain, sep: float, max_points: int = 10**5
) -> PackingSet:
    """
    Axis-aligned grid of domain points with pairwise distance >= sep.

    When the grid holds a single point but sep still fits inside the domain, the
    two endpoints of a diameter are returned instead.
    """
    if not sep > 0:
        raise ParameterOutOfRangeError("sep", sep, "sep > 0")
    diameter = domain.diameter()
    if sep > diameter * (1.0 + 1e-12):
        raise SinglePointPackingError(sep, diameter)

    if domain.kind is DomainKind.BOX_INF:
        per_axis = int(math.floor(2.0 * domain.radius / sep + 1e-9)) + 1
        total = per_axis**domain.dim
        axes = [
            np.minimum(lo + sep * np.arange(per_axis), hi)
            for lo, hi in zip(domain.lower, domain.upper)
        ]
    else:
        half = int(math.floor(domain.radius / sep + 1e-9))
        per_axis = 2 * half + 1
        total = per_axis**domain.dim
        axes = [c + sep * np.arange(-half, half + 1) for c in domain.center]
    if total > max_points:
        raise ParameterOutOfRangeError(
            "sep", sep, f"a grid of at most {max_points} points (got {total})"
        )

    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    if domain.kind is DomainKind.BALL2:
        norms = np.linalg.norm(points - domain.center_array, axis=1)
        points = points[norms <= domain.radius * (1.0 + MEMBERSHIP_TOL)]

    construction = "lattice"
    min_sq_dist = sep**2
    if points.shape[0] < 2:
        points = _antipodal_pair(domain)
        construction = "antipodal"
        min_sq_dist = diameter**2

    volume_bound = domain.volume() / (unit_ball_volume(domain.dim) * sep**domain.dim)
    logger.debug(
        "Lattice packing on %s with sep=%g: %d points (volume bound %.3g)",
        domain,
        sep,
        points.shape[0],
        volume_bound,
    )
    return PackingSet(
        points=points,
        min_sq_dist=min_sq_dist,
        domain=domain,
        meta={
            "construction": construction,
            "sep": sep,
            "per_axis": per_axis,
            "achieved": int(points.shape[0]),
            "volume_bound": volume_bound,
        },
    )
