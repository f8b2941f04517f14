"""
Experiment orchestration: the hypothesis-testing reduction run empirically,
complexity scans, rate fits, the diminishing-returns check and the
active-learning experiment.

Every (hypothesis, trial) cell owns its random stream, so cells can run in a
process pool; results are sorted by cell key before any reduction and are
bit-identical for every job count.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.algorithms import (
    ActiveBisection,
    Algorithm,
    Bisection,
    GridSearch,
    ProjectedSGD,
    StepRule,
    canonical_estimate,
    run,
)
from src.errors import ConfigError, ParameterOutOfRangeError
from src.geometry import Domain
from src.infobounds import (
    BoundReport,
    fano_report,
    ir_upper,
    lf_terms,
    mi_bootstrap_interval,
    miller_madow_correction,
    per_step_information,
    plugin_mi,
)
from src.instances import EnsembleKind, Instance, InstanceEnsemble, build_ensemble
from src.oracles import OracleKind, OracleModel
from src.streams import make_stream

logger = logging.getLogger(__name__)

MIN_TRIALS = 30
BOOTSTRAP_KEY = 2**31
LF_ORACLES = (OracleKind.FOG, OracleKind.SOG, OracleKind.BERNOULLI_LABEL)


class AlgorithmKind(str, Enum):
    SGD = "sgd"
    BISECTION = "bisection"
    GRID_SEARCH = "grid_search"
    ACTIVE_BISECTION = "active_bisection"


class CriterionKind(str, Enum):
    PROBABILITY = "probability"
    MEAN_ERROR = "mean_error"


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble construction; eps=None binds the accuracy to each target."""

    kind: EnsembleKind
    domain: Domain
    eps: Optional[float] = None
    r: float = 1.0
    seed: int = 0
    degree: int = 2
    lipschitz: Optional[float] = None
    alpha: Optional[float] = None

    def build(self, target: float) -> InstanceEnsemble:
        eps = self.eps if self.eps is not None else target
        return build_ensemble(
            self.kind,
            self.domain,
            eps,
            r=self.r,
            seed=self.seed,
            degree=self.degree,
            lipschitz=self.lipschitz,
            alpha=self.alpha,
        )


@dataclass(frozen=True)
class OracleSpec:
    kind: OracleKind
    sigma: float = 1.0
    total_variance: bool = False
    alpha: float = 2.0
    moment_c: Optional[float] = None
    lipschitz: float = 1.0
    kappa: float = 1.0
    c_low: float = 0.1
    c_high: float = 0.4

    def build(self, eps: float) -> OracleModel:
        kind = OracleKind(self.kind)
        if kind is OracleKind.NOISELESS:
            return OracleModel.noiseless()
        if kind is OracleKind.FOG:
            return OracleModel.fog(self.sigma, self.total_variance)
        if kind is OracleKind.SOG:
            return OracleModel.sog(self.sigma, self.total_variance)
        if kind is OracleKind.MOMENT_BOUNDED:
            return OracleModel.moment_bounded(self.alpha, eps, self.lipschitz, self.moment_c)
        if kind is OracleKind.BERNOULLI_LABEL:
            return OracleModel.bernoulli_label(self.kappa, self.c_low, self.c_high)
        return OracleModel.stat_estimation(self.sigma)


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: AlgorithmKind = AlgorithmKind.SGD
    step_rule: StepRule = StepRule.INV_T
    step_scale: Optional[float] = None
    x1: Optional[Tuple[float, ...]] = None
    grid_points: Optional[int] = None
    k: float = 8.0
    eps_target: float = 0.01
    growth: float = 1.0

    def build(self) -> Algorithm:
        kind = AlgorithmKind(self.kind)
        if kind is AlgorithmKind.SGD:
            return ProjectedSGD(StepRule(self.step_rule), self.step_scale, self.x1)
        if kind is AlgorithmKind.BISECTION:
            return Bisection()
        if kind is AlgorithmKind.GRID_SEARCH:
            return GridSearch(self.grid_points)
        return ActiveBisection(self.k, self.eps_target, self.growth)


@dataclass(frozen=True)
class SuccessCriterion:
    """
    PROBABILITY: sup_f P(err^r >= eps) <= delta.
    MEAN_ERROR: sup_f E err^r < eps.
    """

    kind: CriterionKind = CriterionKind.PROBABILITY
    eps: float = 0.01
    delta: float = 0.1
    r: float = 1.0

    def passes(self, err_r: np.ndarray) -> bool:
        """err_r holds err^r with one row per hypothesis."""
        if self.kind is CriterionKind.MEAN_ERROR:
            return bool(err_r.mean(axis=1).max() < self.eps)
        return bool((err_r >= self.eps).mean(axis=1).max() <= self.delta)


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec
    oracle: OracleSpec
    algorithm: AlgorithmSpec
    horizons: Tuple[int, ...]
    trials: int
    base_seed: int
    criterion: SuccessCriterion = field(default_factory=SuccessCriterion)
    targets: Tuple[float, ...] = ()
    name: str = "experiment"

    def violations(self) -> List[str]:
        found = []
        if self.trials < MIN_TRIALS:
            found.append(f"trials={self.trials} violates minimum {MIN_TRIALS} trials per cell")
        if any(T < 1 for T in self.horizons):
            found.append(f"horizons={list(self.horizons)} must all be >= 1")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            found.append(f"horizons={list(self.horizons)} must be strictly increasing")
        if not self.criterion.eps > 0:
            found.append(f"eps={self.criterion.eps} violates ε > 0")
        if not 0.0 < self.criterion.delta < 0.5:
            found.append(f"delta={self.criterion.delta} violates δ ∈ (0,1/2)")
        if not self.criterion.r >= 1:
            found.append(f"r={self.criterion.r} violates r >= 1")
        if any(not eps > 0 for eps in self.targets):
            found.append(f"targets={list(self.targets)} must all satisfy ε > 0")
        if self.base_seed < 0:
            found.append(f"seed={self.base_seed} must be a nonnegative integer")
        return found

    def validate(self) -> None:
        found = self.violations()
        if found:
            raise ConfigError(found)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, base_seed=int(seed))


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    ci: Tuple[float, float]
    r_squared: float
    points: int


def _regression(xs: np.ndarray, ys: np.ndarray) -> ExponentFit:
    fit = stats.linregress(xs, ys)
    half = float(stats.t.ppf(0.975, xs.size - 2)) * float(fit.stderr)
    slope = float(fit.slope)
    return ExponentFit(
        slope=slope,
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        ci=(slope - half, slope + half),
        r_squared=float(fit.rvalue) ** 2,
        points=int(xs.size),
    )


def _fit_pairs(pairs: Sequence[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    data = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if data.shape[0] < 4:
        raise ParameterOutOfRangeError("points", data.shape[0], "at least 4 points")
    if np.any(data[:, 1] <= 0):
        raise ParameterOutOfRangeError("values", "nonpositive entry", "values > 0")
    return data[:, 0], data[:, 1]


def fit_exponent(pairs: Sequence[Tuple[float, float]]) -> ExponentFit:
    """Least squares of ln value on ln scale; pairs are (scale, value)."""
    scales, values = _fit_pairs(pairs)
    if np.any(scales <= 0):
        raise ParameterOutOfRangeError("scales", "nonpositive entry", "scales > 0")
    return _regression(np.log(scales), np.log(values))


def fit_exponential(pairs: Sequence[Tuple[float, float]]) -> ExponentFit:
    """Least squares of ln value on t; pairs are (t, value)."""
    times, values = _fit_pairs(pairs)
    return _regression(times, np.log(values))


@dataclass(frozen=True, eq=False)
class _Batch:
    ensemble: InstanceEnsemble
    oracle: OracleModel
    algorithm: Algorithm
    horizons: Tuple[int, ...]
    base_seed: int
    hypothesis: int
    start: int
    stop: int
    with_lf: bool = False
    keep_traces: bool = False


@dataclass(frozen=True, eq=False)
class _CellOutcome:
    hypothesis: int
    trial: int
    excess: np.ndarray
    estimates: np.ndarray
    lf_sums: Optional[np.ndarray] = None
    err_trace: Optional[np.ndarray] = None
    lf_trace: Optional[np.ndarray] = None


def _run_batch(batch: _Batch) -> List[_CellOutcome]:
    ensemble = batch.ensemble
    inst = ensemble.instances[batch.hypothesis]
    horizons = list(batch.horizons)
    outcomes = []
    for trial in range(batch.start, batch.stop):
        if batch.algorithm.horizon_free:
            rng = make_stream(batch.base_seed, batch.hypothesis, trial)
            transcript = run(batch.algorithm, batch.oracle, inst, horizons[-1], rng)
            transcripts = [transcript] * len(horizons)
            finals = [transcript.point_at(T) for T in horizons]
            excess = transcript.err_trace[horizons]
        else:
            transcripts = [
                run(
                    batch.algorithm,
                    batch.oracle,
                    inst,
                    T,
                    make_stream(batch.base_seed, batch.hypothesis, trial, T),
                )
                for T in horizons
            ]
            finals = [t.final for t in transcripts]
            excess = np.array([t.err_trace[-1] for t in transcripts])
        estimates = np.array([canonical_estimate(ensemble, p) for p in finals])

        lf_sums = lf_trace = err_trace = None
        if batch.with_lf:
            lf_sums = np.array(
                [
                    lf_terms(t, ensemble, batch.oracle, batch.hypothesis)[:T].sum()
                    for t, T in zip(transcripts, horizons)
                ]
            )
        if batch.keep_traces:
            err_trace = transcripts[-1].err_trace[: horizons[-1]]
            lf_trace = lf_terms(transcripts[-1], ensemble, batch.oracle, batch.hypothesis)
        outcomes.append(
            _CellOutcome(batch.hypothesis, trial, excess, estimates, lf_sums, err_trace, lf_trace)
        )
    return outcomes


def _batches(
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    algorithm: Algorithm,
    horizons: Sequence[int],
    base_seed: int,
    trials: int,
    jobs: int,
    **flags,
) -> List[_Batch]:
    chunk = max(1, math.ceil(trials / max(1, jobs)))
    return [
        _Batch(
            ensemble,
            oracle,
            algorithm,
            tuple(horizons),
            base_seed,
            hypothesis,
            start,
            min(start + chunk, trials),
            **flags,
        )
        for hypothesis in range(ensemble.size)
        for start in range(0, trials, chunk)
    ]


def _execute(batches: List[_Batch], jobs: int) -> List[_CellOutcome]:
    outcomes: List[_CellOutcome] = []
    if jobs <= 1 or len(batches) == 1:
        for batch in batches:
            outcomes.extend(_run_batch(batch))
    else:
        logger.debug("Scheduling %d batches on %d workers", len(batches), jobs)
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {
                executor.submit(_run_batch, batch): (batch.hypothesis, batch.start)
                for batch in batches
            }
            for future in as_completed(futures):
                outcomes.extend(future.result())
    outcomes.sort(key=lambda o: (o.hypothesis, o.trial))
    return outcomes


@dataclass(frozen=True, eq=False)
class _Simulation:
    excess: np.ndarray
    estimates: np.ndarray
    lf_sums: Optional[np.ndarray]
    outcomes: List[_CellOutcome]


def _simulate(
    ensemble: InstanceEnsemble,
    oracle: OracleModel,
    algorithm: Algorithm,
    horizons: Sequence[int],
    base_seed: int,
    trials: int,
    jobs: int = 1,
    **flags,
) -> _Simulation:
    batches = _batches(ensemble, oracle, algorithm, horizons, base_seed, trials, jobs, **flags)
    outcomes = _execute(batches, jobs)
    shape = (ensemble.size, trials, len(horizons))
    excess = np.array([o.excess for o in outcomes]).reshape(shape)
    estimates = np.array([o.estimates for o in outcomes]).reshape(shape)
    lf_sums = None
    if flags.get("with_lf"):
        lf_sums = np.array([o.lf_sums for o in outcomes]).reshape(shape)
    return _Simulation(excess, estimates, lf_sums, outcomes)


@dataclass(frozen=True, eq=False)
class HorizonRow:
    """
    Aggregates at one horizon.

    max_err is the worst per-hypothesis mean of err^r and p_err the worst
    per-hypothesis P(err^r >= eps); p_mismatch is the pooled P(M_hat != M).
    """

    horizon: int
    mean_err: float
    max_err: float
    p_err: float
    p_mismatch: float
    mi_nats: float
    mi_lo: float
    mi_hi: float
    ir_upper_nats: float
    fano_lower_nats: float
    confusion: np.ndarray
    per_hypothesis_mismatch: np.ndarray
    per_hypothesis_p_err: np.ndarray
    miller_madow: float
    lf_upper_nats: float = math.nan

    def sandwich_holds(self) -> bool:
        """Fano <= MI interval top and MI interval bottom <= IR, where both apply."""
        upper_ok = math.isnan(self.ir_upper_nats) or self.mi_lo <= self.ir_upper_nats
        lower_ok = math.isnan(self.fano_lower_nats) or self.fano_lower_nats <= self.mi_hi
        return upper_ok and lower_ok


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    name: str
    seed: int
    rows: Tuple[HorizonRow, ...]
    reports: Tuple[BoundReport, ...] = ()
    fit: Optional[ExponentFit] = None
    meta: dict = field(default_factory=dict)


def _fano_applies(size: int, delta_hat: float) -> bool:
    return delta_hat < 0.5 and (size == 2 or size > 4)


def _information_base(ensemble: InstanceEnsemble, oracle: OracleModel) -> BoundReport:
    if oracle.kind is OracleKind.MOMENT_BOUNDED:
        per_step = per_step_information(ensemble, oracle)
        inputs = {
            "N": ensemble.size,
            "oracle": oracle.kind.value,
            "T": 1,
            "per_step_nats": per_step,
            "sup_method": "entropy_bound",
        }
        return BoundReport("ir_upper", per_step, inputs)
    return ir_upper(ensemble, oracle, 1)


def hypothesis_test(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """
    Run the reduction: every hypothesis gets cfg.trials runs per horizon.

    Args:
        cfg: Experiment configuration
        jobs: Worker processes; results do not depend on it

    Returns:
        ExperimentResult with one HorizonRow per configured horizon, the IR
        and Fano reports and a log-log fit of mean error against T

    Raises:
        ConfigError: If the configuration violates its invariants
    """
    cfg.validate()
    criterion = cfg.criterion
    ensemble = cfg.ensemble.build(criterion.eps)
    oracle = cfg.oracle.build(ensemble.meta["eps"])
    algorithm = cfg.algorithm.build()
    horizons = tuple(cfg.horizons)
    size = ensemble.size
    meta = {"N": size, "construction": ensemble.meta["construction"], "oracle": oracle.kind.value}
    if not horizons:
        return ExperimentResult(cfg.name, cfg.base_seed, (), (), None, meta)

    with_lf = ensemble.common_min is not None and oracle.kind in LF_ORACLES
    sim = _simulate(
        ensemble, oracle, algorithm, horizons, cfg.base_seed, cfg.trials, jobs, with_lf=with_lf
    )
    base = _information_base(ensemble, oracle)
    per_step = base.inputs["per_step_nats"]

    rows = []
    reports = []
    truth = np.repeat(np.arange(size), cfg.trials)
    for k, T in enumerate(horizons):
        err_r = sim.excess[:, :, k] ** criterion.r
        per_hypothesis_p_err = (err_r >= criterion.eps).mean(axis=1)
        confusion = np.zeros((size, size), dtype=int)
        np.add.at(confusion, (truth, sim.estimates[:, :, k].ravel()), 1)
        per_hypothesis_mismatch = 1.0 - np.diag(confusion) / cfg.trials
        p_mismatch = 1.0 - np.trace(confusion) / confusion.sum()

        mi = plugin_mi(confusion)
        mi_lo, mi_hi = mi_bootstrap_interval(
            confusion, make_stream(cfg.base_seed, BOOTSTRAP_KEY, k)
        )
        ir_value = T * per_step
        reports.append(BoundReport("ir_upper", ir_value, {**base.inputs, "T": T}))
        fano_value = math.nan
        if _fano_applies(size, p_mismatch):
            report = fano_report(size, float(p_mismatch), T=T)
            fano_value = report.value
            reports.append(report)
        lf_value = math.nan
        if sim.lf_sums is not None:
            lf_value = float(sim.lf_sums[:, :, k].mean())

        rows.append(
            HorizonRow(
                horizon=T,
                mean_err=float(err_r.mean()),
                max_err=float(err_r.mean(axis=1).max()),
                p_err=float(per_hypothesis_p_err.max()),
                p_mismatch=float(p_mismatch),
                mi_nats=mi,
                mi_lo=mi_lo,
                mi_hi=mi_hi,
                ir_upper_nats=ir_value,
                fano_lower_nats=fano_value,
                confusion=confusion,
                per_hypothesis_mismatch=per_hypothesis_mismatch,
                per_hypothesis_p_err=per_hypothesis_p_err,
                miller_madow=miller_madow_correction(confusion),
                lf_upper_nats=lf_value,
            )
        )
        logger.info(
            "%s: T=%d p_mismatch=%.4g mi=%.4g ir=%.4g", cfg.name, T, p_mismatch, mi, ir_value
        )

    fit = None
    positive = [(row.horizon, row.mean_err) for row in rows if row.mean_err > 0]
    if len(positive) >= 4:
        fit = fit_exponent(positive)
    return ExperimentResult(cfg.name, cfg.base_seed, tuple(rows), tuple(reports), fit, meta)


@dataclass(frozen=True)
class TargetEstimate:
    """T_hat for one accuracy; bracket is (last failing T, first passing T)."""

    eps: float
    horizon: Optional[int]
    bracket: Tuple[Optional[int], Optional[int]]
    resolved: bool


@dataclass(frozen=True, eq=False)
class ComplexityEstimate:
    targets: Tuple[TargetEstimate, ...]
    fit: Optional[ExponentFit] = None

    def as_map(self) -> Dict[float, Optional[int]]:
        return {item.eps: item.horizon for item in self.targets}


def _blocks(horizons: Sequence[int], shared: bool):
    start = 0
    while start < len(horizons):
        stop = start + 1
        if shared:
            while stop < len(horizons) and horizons[stop] <= 2 * horizons[start]:
                stop += 1
        yield horizons[start:stop]
        start = stop


def _scan(
    cfg: ExperimentConfig,
    algorithm: Algorithm,
    eps: float,
    jobs: int,
) -> TargetEstimate:
    ensemble = cfg.ensemble.build(eps)
    oracle = cfg.oracle.build(ensemble.meta["eps"])
    criterion = replace(cfg.criterion, eps=eps)
    last_fail = None
    for block in _blocks(list(cfg.horizons), algorithm.horizon_free):
        sim = _simulate(ensemble, oracle, algorithm, block, cfg.base_seed, cfg.trials, jobs)
        for k, T in enumerate(block):
            if criterion.passes(sim.excess[:, :, k] ** criterion.r):
                logger.info("%s: eps=%g resolved at T=%d", cfg.name, eps, T)
                return TargetEstimate(eps, T, (last_fail, T), True)
            last_fail = T
    logger.warning(
        "%s: criterion for eps=%g not met within horizons up to %s",
        cfg.name,
        eps,
        last_fail,
    )
    return TargetEstimate(eps, None, (last_fail, None), False)


def estimate_complexity(cfg: ExperimentConfig, jobs: int = 1) -> ComplexityEstimate:
    """
    Smallest configured horizon meeting the success criterion, per target accuracy.

    Horizons are scanned in increasing order and the scan stops at the first
    pass; no extrapolation is made beyond the last configured horizon. When
    at least four targets resolve, ln T_hat is fitted against ln(1/eps).
    """
    cfg.validate()
    algorithm = cfg.algorithm.build()
    targets = cfg.targets or (cfg.criterion.eps,)
    estimates = tuple(_scan(cfg, algorithm, eps, jobs) for eps in targets)
    resolved = [(1.0 / item.eps, item.horizon) for item in estimates if item.resolved]
    fit = fit_exponent(resolved) if len(resolved) >= 4 else None
    return ComplexityEstimate(estimates, fit)


@dataclass(frozen=True, eq=False)
class DiminishingReturnsReport:
    times: np.ndarray
    err_mean: np.ndarray
    err_se: np.ndarray
    err_r_mean: np.ndarray
    lf_mean: np.ndarray
    lf_se: np.ndarray
    constant: float
    violations: np.ndarray
    err_fit: ExponentFit
    lf_fit: ExponentFit

    @property
    def bound_holds(self) -> bool:
        return self.violations.size == 0

    @property
    def slope_ratio(self) -> float:
        return self.lf_fit.slope / self.err_fit.slope

    @property
    def slopes_agree(self) -> bool:
        return abs(self.lf_fit.slope - self.err_fit.slope) <= 0.3


def _stderr(samples: np.ndarray) -> np.ndarray:
    return samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])


def diminishing_returns(
    cfg: ExperimentConfig,
    lipschitz_ratio: float = 1.0,
    burn_in: int = 10,
    jobs: int = 1,
) -> DiminishingReturnsReport:
    """
    Compare the mean LF trace with the mean error trace along anytime runs.

    Checks lf_mean(t) <= (L/kappa)^2 (D^2 + 1) / sigma^2 * err_mean(t) plus two
    standard errors at every t up to the last horizon, and fits the decay of
    the LF trace and of the err^r trace over t >= burn_in.
    """
    cfg.validate()
    if not cfg.horizons:
        raise ConfigError(["horizons must not be empty"])
    ensemble = cfg.ensemble.build(cfg.criterion.eps)
    oracle = cfg.oracle.build(ensemble.meta["eps"])
    if oracle.kind not in (OracleKind.FOG, OracleKind.SOG):
        raise ParameterOutOfRangeError("oracle", oracle.kind.value, "fog or sog")
    algorithm = cfg.algorithm.build()
    if not algorithm.horizon_free:
        raise ParameterOutOfRangeError("algorithm", cfg.algorithm.kind, "an anytime algorithm")
    T = cfg.horizons[-1]
    if not burn_in < T:
        raise ParameterOutOfRangeError("burn_in", burn_in, f"burn_in < T = {T}")

    sim = _simulate(
        ensemble, oracle, algorithm, (T,), cfg.base_seed, cfg.trials, jobs, keep_traces=True
    )
    errs = np.array([o.err_trace for o in sim.outcomes])
    lfs = np.array([o.lf_trace for o in sim.outcomes])
    err_mean, err_se = errs.mean(axis=0), _stderr(errs)
    lf_mean, lf_se = lfs.mean(axis=0), _stderr(lfs)
    err_r_mean = (errs**cfg.criterion.r).mean(axis=0)

    constant = lipschitz_ratio**2 * (ensemble.domain.diameter() ** 2 + 1.0) / oracle.sigma**2
    times = np.arange(1, T + 1)
    slack = 2.0 * np.sqrt(lf_se**2 + (constant * err_se) ** 2)
    violations = times[lf_mean > constant * err_mean + slack]

    window = np.unique(np.geomspace(burn_in, T, 30).astype(int))
    err_fit = fit_exponent(list(zip(window, err_r_mean[window - 1])))
    lf_fit = fit_exponent(list(zip(window, lf_mean[window - 1])))
    logger.info(
        "%s: lf slope %.3f, err slope %.3f, %d bound violations",
        cfg.name,
        lf_fit.slope,
        err_fit.slope,
        violations.size,
    )
    return DiminishingReturnsReport(
        times, err_mean, err_se, err_r_mean, lf_mean, lf_se, constant, violations, err_fit, lf_fit
    )


def excess_risk(kappa: float, C: float, distance) -> np.ndarray:
    """
    Integral of |2 eta - 1| over an interval of the given length next to theta.

    With the implemented profile this is (2C/kappa) d^kappa while
    2C d^(kappa-1) < 1, and grows linearly past the clamp point.
    """
    d = np.abs(np.asarray(distance, dtype=float))
    if kappa == 1.0:
        return np.where(2.0 * C < 1.0, 2.0 * C * d, d)
    clamp = (1.0 / (2.0 * C)) ** (1.0 / (kappa - 1.0))
    inner = (2.0 * C / kappa) * np.minimum(d, clamp) ** kappa
    return inner + np.maximum(d - clamp, 0.0)


@dataclass(frozen=True, eq=False)
class ActiveLearningResult:
    kappa: float
    horizons: np.ndarray
    mean_risk: np.ndarray
    risk_se: np.ndarray
    fit: Optional[ExponentFit]
    exponential: bool

    @property
    def expected_slope(self) -> Optional[float]:
        """Polynomial slope -kappa / (2 kappa - 2); None for kappa = 1."""
        if self.exponential:
            return None
        return -self.kappa / (2.0 * self.kappa - 2.0)


def _run_active(args) -> Tuple[int, np.ndarray]:
    oracle, learner, horizons, seed, trial, kappa, C = args
    domain = Domain.interval(0.0, 1.0)
    rng = make_stream(seed, trial)
    theta = float(rng.uniform(0.0, 1.0))
    transcript = run(learner, oracle, Instance.threshold(domain, theta), horizons[-1], rng)
    positions = np.array([transcript.point_at(T)[0] for T in horizons])
    return trial, excess_risk(kappa, C, positions - theta)


def active_learning_run(
    kappa: float,
    c: float,
    C: float,
    learner: Optional[ActiveBisection] = None,
    horizons: Sequence[int] = (100, 300, 1000, 3000, 10000),
    trials: int = 200,
    seed: int = 0,
    jobs: int = 1,
) -> ActiveLearningResult:
    """
    Excess-risk decay of a label-query learner against thresholds drawn uniformly on [0, 1].

    Args:
        kappa: Noise exponent in [1, 2]
        c: Lower Tsybakov constant
        C: Upper Tsybakov constant, c < C < 1/2
        learner: Defaults to ActiveBisection with epochs growing by 2^(kappa-1)
        horizons: Increasing times t at which the risk of X_t is evaluated
        trials: Independent thresholds
        seed: Base seed; trial j uses the stream keyed by j
        jobs: Worker processes

    Returns:
        ActiveLearningResult with a log-log fit for kappa > 1 and a
        log-linear fit for kappa = 1
    """
    if not 1.0 <= kappa <= 2.0:
        raise ParameterOutOfRangeError("kappa", kappa, "1 <= kappa <= 2")
    oracle = OracleModel.bernoulli_label(kappa, c, C)
    if learner is None:
        learner = ActiveBisection(growth=2.0 ** (kappa - 1.0))
    horizons = tuple(int(T) for T in horizons)
    tasks = [(oracle, learner, horizons, seed, trial, kappa, C) for trial in range(trials)]
    if jobs <= 1:
        risks = [_run_active(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(_run_active, task): task[4] for task in tasks}
            risks = [future.result() for future in as_completed(futures)]
    risks.sort(key=lambda item: item[0])
    table = np.array([risk for _, risk in risks])
    mean_risk = table.mean(axis=0)
    risk_se = _stderr(table) if trials > 1 else np.zeros_like(mean_risk)

    times = np.array(horizons)
    positive = [(t, m) for t, m in zip(times, mean_risk) if m > 0]
    fit = None
    exponential = kappa == 1.0
    if len(positive) >= 4:
        fit = fit_exponential(positive) if exponential else fit_exponent(positive)
    return ActiveLearningResult(kappa, times, mean_risk, risk_se, fit, exponential)
