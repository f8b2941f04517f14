"""Sequential algorithms and the transcript recorder for the query protocol."""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from src.errors import (
    DomainViolationError,
    IncompatibleOracleError,
    ParameterOutOfRangeError,
)
from src.geometry import Domain
from src.instances import Instance, InstanceEnsemble
from src.oracles import OracleModel, OracleResponse, check_compatible, sample

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12


class StepRule(str, Enum):
    INV_T = "inv_t"
    INV_SQRT_T = "inv_sqrt_t"


class Policy(ABC):
    """Running state of one algorithm; sees nothing but oracle responses."""

    @abstractmethod
    def query(self) -> np.ndarray:  # pragma: no cover
        """Next query point X_t"""
        pass

    @abstractmethod
    def observe(self, response: OracleResponse) -> None:  # pragma: no cover
        """Consume Y_t and move to X_{t+1}"""
        pass

    def candidate(self) -> np.ndarray:
        """Current output; the next query for weak infinite-step algorithms"""
        return self.query()


class Algorithm(ABC):
    @property
    def horizon_free(self) -> bool:
        """
        True when one long run yields the output of every shorter horizon.

        Holds when the queries do not depend on T and the output is the next query.
        """
        return True

    @abstractmethod
    def start(self, domain: Domain, horizon: int) -> Policy:  # pragma: no cover
        """Create the policy for a run of the given horizon"""
        pass


def _one_dimensional(domain: Domain, name: str) -> None:
    if domain.dim != 1:
        raise ParameterOutOfRangeError("dim", domain.dim, f"n = 1 for {name}")


@dataclass(frozen=True)
class ProjectedSGD(Algorithm):
    """X_{t+1} = project(X_t - a_t G_t) with a_t = a/t or a/sqrt(t)."""

    step_rule: StepRule = StepRule.INV_T
    scale: Optional[float] = None
    x1: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise ParameterOutOfRangeError("step_scale", self.scale, "a > 0")

    @property
    def horizon_free(self) -> bool:
        return not (self.scale is None and self.step_rule is StepRule.INV_SQRT_T)

    def step_scale(self, domain: Domain, horizon: int) -> float:
        if self.scale is not None:
            return self.scale
        if self.step_rule is StepRule.INV_T:
            return 1.0
        return domain.diameter() / math.sqrt(horizon)

    def start(self, domain: Domain, horizon: int) -> Policy:
        x1 = domain.center_array if self.x1 is None else domain.as_point(self.x1)
        if not domain.contains(x1):
            raise DomainViolationError(list(self.x1), domain)
        return _SGDPolicy(
            domain, x1.copy(), self.step_scale(domain, horizon), self.step_rule
        )


class _SGDPolicy(Policy):
    def __init__(self, domain: Domain, x1: np.ndarray, scale: float, rule: StepRule):
        self._domain = domain
        self._x = x1
        self._scale = scale
        self._sqrt = rule is StepRule.INV_SQRT_T
        self._t = 1

    def query(self) -> np.ndarray:
        return self._x

    def observe(self, response: OracleResponse) -> None:
        step = self._scale / (math.sqrt(self._t) if self._sqrt else self._t)
        self._x = self._domain.project(self._x - step * response.gradient_part())
        self._t += 1


@dataclass(frozen=True)
class Bisection(Algorithm):
    """Interval halving on the sign of the observed derivative (n = 1)."""

    def start(self, domain: Domain, horizon: int) -> Policy:
        _one_dimensional(domain, "bisection")
        return _BisectionPolicy(float(domain.lower[0]), float(domain.upper[0]))


class _BisectionPolicy(Policy):
    def __init__(self, lo: float, hi: float):
        self._lo = lo
        self._hi = hi

    def query(self) -> np.ndarray:
        return np.array([0.5 * (self._lo + self._hi)])

    def observe(self, response: OracleResponse) -> None:
        mid = 0.5 * (self._lo + self._hi)
        slope = response.gradient_part()[0]
        if slope > 0:
            self._hi = mid
        elif slope < 0:
            self._lo = mid
        else:
            self._lo = self._hi = mid


@dataclass(frozen=True)
class GridSearch(Algorithm):
    """
    Round-robin sampling of an evenly spaced grid (n = 1).

    The budget is spread over ceil(sqrt(T)) points unless points is given;
    the output is the grid point with the smallest mean observed value.
    """

    points: Optional[int] = None

    @property
    def horizon_free(self) -> bool:
        return False

    def start(self, domain: Domain, horizon: int) -> Policy:
        _one_dimensional(domain, "grid search")
        count = self.points or max(2, math.ceil(math.sqrt(horizon)))
        return _GridPolicy(domain.grid(count))


class _GridPolicy(Policy):
    def __init__(self, grid: np.ndarray):
        self._grid = grid
        self._sums = np.zeros(grid.size)
        self._counts = np.zeros(grid.size)
        self._t = 0

    def query(self) -> np.ndarray:
        return np.array([self._grid[self._t % self._grid.size]])

    def observe(self, response: OracleResponse) -> None:
        if response.value is None:
            raise IncompatibleOracleError(response.kind, "grid search needs values")
        index = self._t % self._grid.size
        self._sums[index] += response.value
        self._counts[index] += 1
        self._t += 1

    def candidate(self) -> np.ndarray:
        seen = self._counts > 0
        if not seen.any():
            return self.query()
        means = np.full(self._grid.size, np.inf)
        means[seen] = self._sums[seen] / self._counts[seen]
        return np.array([self._grid[int(np.argmin(means))]])


@dataclass(frozen=True)
class ActiveBisection(Algorithm):
    """
    Epoch-based bisection on noisy labels (n = 1).

    Epoch j queries the interval midpoint ceil(k ln(1/eps_target) growth^j)
    times (rounded up to odd). The interval is halved toward the majority
    label only when the vote margin reaches sqrt(2 L ln(1/eps_target)) for an
    epoch of length L; otherwise the next epoch stays at the same midpoint.
    """

    k: float = 8.0
    eps_target: float = 0.01
    growth: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ParameterOutOfRangeError("k", self.k, "k > 0")
        if not 0 < self.eps_target < 1:
            raise ParameterOutOfRangeError("eps_target", self.eps_target, "0 < eps < 1")
        if not self.growth >= 1:
            raise ParameterOutOfRangeError("growth", self.growth, "growth >= 1")

    def epoch_length(self, epoch: int) -> int:
        length = math.ceil(self.k * math.log(1.0 / self.eps_target) * self.growth**epoch)
        return length if length % 2 else length + 1

    def margin(self, length: int) -> float:
        """Vote margin an epoch of the given length needs before halving."""
        return math.sqrt(2.0 * length * math.log(1.0 / self.eps_target))

    def start(self, domain: Domain, horizon: int) -> Policy:
        _one_dimensional(domain, "active bisection")
        return _ActivePolicy(self, float(domain.lower[0]), float(domain.upper[0]))


class _ActivePolicy(Policy):
    def __init__(self, config: ActiveBisection, lo: float, hi: float):
        self._config = config
        self._lo = lo
        self._hi = hi
        self._epoch = 0
        self._length = config.epoch_length(0)
        self._votes = 0
        self._seen = 0

    def query(self) -> np.ndarray:
        return np.array([0.5 * (self._lo + self._hi)])

    def observe(self, response: OracleResponse) -> None:
        if response.label is None:
            raise IncompatibleOracleError(response.kind, "active bisection needs labels")
        self._votes += response.label
        self._seen += 1
        if self._seen < self._length:
            return
        mid = 0.5 * (self._lo + self._hi)
        if abs(self._votes) >= self._config.margin(self._length):
            # majority +1 means eta(mid) >= 1/2, so the threshold lies left of mid
            if self._votes > 0:
                self._hi = mid
            else:
                self._lo = mid
        self._epoch += 1
        self._length = self._config.epoch_length(self._epoch)
        self._votes = 0
        self._seen = 0


@dataclass(frozen=True, eq=False)
class Transcript:
    """
    Record of one run: X_1..X_T, Y_1..Y_T and the output X_{T+1}.

    err_trace[t - 1] is f(X_t) - f* for t = 1..T+1, so err_trace[T] is the error
    of the output.
    """

    queries: np.ndarray
    responses: tuple
    final: np.ndarray
    err_trace: np.ndarray
    div_trace: Optional[np.ndarray] = None

    @property
    def horizon(self) -> int:
        return int(self.queries.shape[0])

    def point_at(self, horizon: int) -> np.ndarray:
        """Output after `horizon` steps of a weak infinite-step run."""
        if horizon == self.horizon:
            return self.final
        return self.queries[horizon]


def run(
    alg: Algorithm,
    oracle: OracleModel,
    inst: Instance,
    T: int,
    rng: np.random.Generator,
) -> Transcript:
    """
    Execute the query protocol for T steps.

    Args:
        alg: Algorithm configuration
        oracle: Oracle answering the queries
        inst: Hidden instance; used by the oracle and for the error trace only
        T: Horizon, T >= 1
        rng: The run's random stream

    Returns:
        Transcript with queries, responses, output and error trace
    """
    if T < 1:
        raise ParameterOutOfRangeError("T", T, "T >= 1")
    check_compatible(oracle, inst)
    policy = alg.start(inst.domain, T)
    queries = np.empty((T, inst.domain.dim))
    responses = []
    for t in range(T):
        x = policy.query()
        queries[t] = x
        response = sample(oracle, inst, x, rng)
        responses.append(response)
        policy.observe(response)
    final = np.array(policy.candidate(), dtype=float)
    visited = np.vstack([queries, final[None, :]])
    err_trace = np.maximum(inst.values(visited) - inst.minimum(), 0.0)
    return Transcript(queries, tuple(responses), final, err_trace)


def replay(
    alg: Algorithm, domain: Domain, responses: Sequence[OracleResponse]
) -> Tuple[np.ndarray, np.ndarray]:
    """Recompute queries and output from recorded responses alone."""
    horizon = len(responses)
    policy = alg.start(domain, horizon)
    queries = np.empty((horizon, domain.dim))
    for t, response in enumerate(responses):
        queries[t] = policy.query()
        policy.observe(response)
    return queries, np.array(policy.candidate(), dtype=float)


def canonical_estimate(ensemble: InstanceEnsemble, final: np.ndarray) -> int:
    """Index of the member with the smallest excess at final; ties to the lowest index."""
    excess = ensemble.excess(np.atleast_1d(np.asarray(final, dtype=float)))
    best = excess.min()
    tied = excess <= best + TIE_TOL * max(1.0, abs(best))
    return int(np.flatnonzero(tied)[0])
