"""
Experiment configuration files.

A config is INI text with the sections [ensemble], [oracle], [algorithm] and
[sweep], plus an optional [bound] naming a closed-form bound to report next
to the run. Keys are lowercase snake case and numbers are decimal; lists are
comma separated.
"""

import configparser
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.algorithms import StepRule
from src.errors import ConfigError, OracleBoundsError
from src.geometry import Domain, DomainKind
from src.harness import (
    AlgorithmKind,
    AlgorithmSpec,
    CriterionKind,
    EnsembleSpec,
    ExperimentConfig,
    OracleSpec,
    SuccessCriterion,
)
from src.infobounds import BoundReport, TheoremBound, thm_lower
from src.instances import EnsembleKind
from src.oracles import OracleKind, check_compatible

logger = logging.getLogger(__name__)


class RunMode(str, Enum):
    EXPERIMENT = "experiment"
    COMPLEXITY = "complexity"
    DIMINISHING_RETURNS = "diminishing_returns"
    ACTIVE_LEARNING = "active_learning"


@dataclass(frozen=True)
class BoundRequest:
    which: TheoremBound
    params: Tuple[Tuple[str, Any], ...] = ()

    def evaluate(self) -> BoundReport:
        return thm_lower(self.which, **dict(self.params))


@dataclass(frozen=True)
class RunConfig:
    """A parsed config file: the experiment plus what to do with it."""

    experiment: ExperimentConfig
    mode: RunMode = RunMode.EXPERIMENT
    bound: Optional[BoundRequest] = None
    lipschitz_ratio: float = 1.0
    burn_in: int = 10
    growth: Optional[float] = None

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, experiment=self.experiment.with_seed(seed))


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
        raise ValueError(text)
    return configparser.ConfigParser.BOOLEAN_STATES[lowered]


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.split(",") if item.strip())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in text.split(",") if item.strip())


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


_SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "ensemble": {
        "kind": str,
        "domain": str,
        "lo": float,
        "hi": float,
        "radius": float,
        "dim": int,
        "center": _floats,
        "eps": float,
        "r": float,
        "seed": int,
        "degree": int,
        "lipschitz": float,
        "alpha": float,
    },
    "oracle": {
        "kind": str,
        "sigma": float,
        "total_variance": _bool,
        "alpha": float,
        "moment_c": float,
        "lipschitz": float,
        "kappa": float,
        "c_low": float,
        "c_high": float,
    },
    "algorithm": {
        "kind": str,
        "step_rule": str,
        "step_scale": float,
        "x1": _floats,
        "grid_points": int,
        "k": float,
        "eps_target": float,
        "growth": float,
    },
    "sweep": {
        "mode": str,
        "name": str,
        "horizons": _ints,
        "trials": int,
        "seed": int,
        "criterion": str,
        "eps": float,
        "delta": float,
        "r": float,
        "targets": _floats,
        "lipschitz_ratio": float,
        "burn_in": int,
    },
}

_REQUIRED = {
    "ensemble": ("kind",),
    "oracle": ("kind",),
    "sweep": ("horizons", "trials"),
}
_ACTIVE_ENSEMBLE = {"kind": "threshold_lattice", "domain": "interval", "lo": 0.0, "hi": 1.0}


@dataclass
class _Reader:
    """Typed section values plus every problem met while reading them."""

    values: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def enum(self, enum_cls, section: str, key: str, default=None):
        raw = self.get(section, key, default)
        if raw is None:
            return None
        try:
            return enum_cls(raw)
        except ValueError:
            allowed = ", ".join(item.value for item in enum_cls)
            self.violations.append(f"[{section}] {key}={raw!r} is not one of: {allowed}")
            return None


def _read(parser: configparser.ConfigParser) -> _Reader:
    reader = _Reader()
    for section in parser.sections():
        if section == "bound":
            continue
        schema = _SCHEMA.get(section)
        if schema is None:
            reader.violations.append(f"unknown section [{section}]")
            continue
        typed = reader.values.setdefault(section, {})
        for key, raw in parser[section].items():
            if key not in schema:
                reader.violations.append(f"unknown key '{key}' in section [{section}]")
                continue
            try:
                typed[key] = schema[key](raw)
            except ValueError:
                reader.violations.append(f"[{section}] {key}={raw!r} cannot be parsed")
    return reader


def _domain(reader: _Reader) -> Optional[Domain]:
    shape = reader.get("ensemble", "domain", "box")
    try:
        if shape == "interval":
            lo = reader.get("ensemble", "lo", 0.0)
            return Domain.interval(lo, reader.get("ensemble", "hi", 1.0))
        if shape in ("box", "ball"):
            factory = Domain.box if shape == "box" else Domain.ball
            return factory(
                reader.get("ensemble", "radius", 1.0),
                reader.get("ensemble", "dim", 1),
                reader.get("ensemble", "center"),
            )
    except OracleBoundsError as exc:
        reader.violations.append(f"[ensemble] {exc}")
        return None
    reader.violations.append(f"[ensemble] domain={shape!r} is not one of: interval, box, ball")
    return None


def _bound(parser: configparser.ConfigParser, violations: List[str]) -> Optional[BoundRequest]:
    if not parser.has_section("bound"):
        return None
    section = dict(parser["bound"])
    raw_which = section.pop("which", None)
    if raw_which is None:
        violations.append("missing key 'which' in section [bound]")
        return None
    try:
        which = TheoremBound(raw_which)
    except ValueError:
        allowed = ", ".join(item.value for item in TheoremBound)
        violations.append(f"[bound] which={raw_which!r} is not one of: {allowed}")
        return None
    params = {}
    for key, raw in section.items():
        try:
            params[key] = _number(raw)
        except ValueError:
            violations.append(f"[bound] {key}={raw!r} cannot be parsed")
    request = BoundRequest(which, tuple(sorted(params.items())))
    try:
        request.evaluate()
    except TypeError as exc:
        violations.append(f"[bound] {which.value}: {exc}")
    except OracleBoundsError as exc:
        violations.append(f"[bound] {exc}")
    return request


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a config text.

    Args:
        text: INI text in the documented schema

    Returns:
        RunConfig holding a validated ExperimentConfig

    Raises:
        ConfigError: Listing every violation found, not only the first
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc

    reader = _read(parser)
    violations = reader.violations
    mode = reader.enum(RunMode, "sweep", "mode", RunMode.EXPERIMENT.value)
    if mode is RunMode.ACTIVE_LEARNING and "ensemble" not in reader.values:
        reader.values["ensemble"] = dict(_ACTIVE_ENSEMBLE)
    for section, required in _REQUIRED.items():
        for key in required:
            if reader.get(section, key) is None:
                violations.append(f"missing key '{key}' in section [{section}]")

    domain = _domain(reader)
    ensemble_kind = reader.enum(EnsembleKind, "ensemble", "kind")
    oracle_kind = reader.enum(OracleKind, "oracle", "kind")
    algorithm_kind = reader.enum(AlgorithmKind, "algorithm", "kind", AlgorithmKind.SGD.value)
    step_rule = reader.enum(StepRule, "algorithm", "step_rule", StepRule.INV_T.value)
    criterion_kind = reader.enum(
        CriterionKind, "sweep", "criterion", CriterionKind.PROBABILITY.value
    )
    bound = _bound(parser, violations)
    if mode is RunMode.ACTIVE_LEARNING and oracle_kind not in (None, OracleKind.BERNOULLI_LABEL):
        violations.append("[oracle] active_learning runs need kind=label")
    if violations or None in (domain, ensemble_kind, oracle_kind, algorithm_kind, mode):
        raise ConfigError(violations)

    get = reader.get
    defaults = OracleSpec(oracle_kind)
    cfg = ExperimentConfig(
        ensemble=EnsembleSpec(
            ensemble_kind,
            domain,
            eps=get("ensemble", "eps"),
            r=get("ensemble", "r", 1.0),
            seed=get("ensemble", "seed", 0),
            degree=get("ensemble", "degree", 2),
            lipschitz=get("ensemble", "lipschitz"),
            alpha=get("ensemble", "alpha"),
        ),
        oracle=OracleSpec(
            oracle_kind,
            sigma=get("oracle", "sigma", defaults.sigma),
            total_variance=get("oracle", "total_variance", False),
            alpha=get("oracle", "alpha", defaults.alpha),
            moment_c=get("oracle", "moment_c"),
            lipschitz=get("oracle", "lipschitz", defaults.lipschitz),
            kappa=get("oracle", "kappa", defaults.kappa),
            c_low=get("oracle", "c_low", defaults.c_low),
            c_high=get("oracle", "c_high", defaults.c_high),
        ),
        algorithm=AlgorithmSpec(
            algorithm_kind,
            step_rule=step_rule,
            step_scale=get("algorithm", "step_scale"),
            x1=get("algorithm", "x1"),
            grid_points=get("algorithm", "grid_points"),
            k=get("algorithm", "k", AlgorithmSpec.k),
            eps_target=get("algorithm", "eps_target", AlgorithmSpec.eps_target),
            growth=get("algorithm", "growth", AlgorithmSpec.growth),
        ),
        horizons=get("sweep", "horizons"),
        trials=get("sweep", "trials"),
        base_seed=get("sweep", "seed", 0),
        criterion=SuccessCriterion(
            criterion_kind,
            eps=get("sweep", "eps", SuccessCriterion.eps),
            delta=get("sweep", "delta", SuccessCriterion.delta),
            r=get("sweep", "r", SuccessCriterion.r),
        ),
        targets=get("sweep", "targets", ()),
        name=get("sweep", "name", "experiment"),
    )
    violations.extend(cfg.violations())
    if not violations and mode is not RunMode.ACTIVE_LEARNING:
        violations.extend(_build_violations(cfg))
    if violations:
        raise ConfigError(violations)
    logger.debug("Parsed %s config %s", mode.value, cfg.name)
    return RunConfig(
        experiment=cfg,
        mode=mode,
        bound=bound,
        lipschitz_ratio=get("sweep", "lipschitz_ratio", 1.0),
        burn_in=get("sweep", "burn_in", 10),
        growth=get("algorithm", "growth"),
    )


def _build_violations(cfg: ExperimentConfig) -> List[str]:
    """Construct the ensemble, oracle and algorithm once so range errors surface at parse time."""
    found = []
    for eps in cfg.targets or (cfg.criterion.eps,):
        try:
            ensemble = cfg.ensemble.build(eps)
            oracle = cfg.oracle.build(ensemble.meta["eps"])
            for inst in ensemble.instances:
                check_compatible(oracle, inst)
        except OracleBoundsError as exc:
            found.append(f"eps={eps!r}: {exc}")
    try:
        cfg.algorithm.build()
    except OracleBoundsError as exc:
        found.append(f"[algorithm] {exc}")
    return found


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(_fmt(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(run_config: RunConfig) -> str:
    """
    Normal form of a config: every key spelled out, fixed order, shortest
    round-tripping floats. parse_config(format_config(c)) == c.
    """
    cfg = run_config.experiment
    ens, orc, alg, crit = cfg.ensemble, cfg.oracle, cfg.algorithm, cfg.criterion
    domain = ens.domain
    sections = {
        "ensemble": {
            "kind": ens.kind,
            "domain": "box" if domain.kind is DomainKind.BOX_INF else "ball",
            "radius": domain.radius,
            "dim": domain.dim,
            "center": domain.center,
            "eps": ens.eps,
            "r": ens.r,
            "seed": ens.seed,
            "degree": ens.degree,
            "lipschitz": ens.lipschitz,
            "alpha": ens.alpha,
        },
        "oracle": {
            "kind": orc.kind,
            "sigma": orc.sigma,
            "total_variance": orc.total_variance,
            "alpha": orc.alpha,
            "moment_c": orc.moment_c,
            "lipschitz": orc.lipschitz,
            "kappa": orc.kappa,
            "c_low": orc.c_low,
            "c_high": orc.c_high,
        },
        "algorithm": {
            "kind": alg.kind,
            "step_rule": alg.step_rule,
            "step_scale": alg.step_scale,
            "x1": alg.x1,
            "grid_points": alg.grid_points,
            "k": alg.k,
            "eps_target": alg.eps_target,
            "growth": run_config.growth,
        },
        "sweep": {
            "mode": run_config.mode,
            "name": cfg.name,
            "horizons": cfg.horizons,
            "trials": cfg.trials,
            "seed": cfg.base_seed,
            "criterion": crit.kind,
            "eps": crit.eps,
            "delta": crit.delta,
            "r": crit.r,
            "targets": cfg.targets or None,
            "lipschitz_ratio": run_config.lipschitz_ratio,
            "burn_in": run_config.burn_in,
        },
    }
    if run_config.bound is not None:
        sections["bound"] = {"which": run_config.bound.which, **dict(run_config.bound.params)}

    lines = []
    for section, values in sections.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)
