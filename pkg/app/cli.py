"""
Command-line front end.

    python -m app --repro sec41 --seed 7 --out results
    python -m app --config my_run.ini --format both --jobs 4
    python -m app --bound thm3_fog --param n=16 --param delta=0.3333 --param eps=0.01

Exit codes: 0 when every emitted bound report holds its preconditions,
1 when some report is outside its range, 2 on a configuration or domain
error and 3 on an IO failure.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.config import RunConfig, RunMode, format_config, parse_config
from src.algorithms import ActiveBisection
from src.errors import ConfigError, OracleBoundsError
from src.harness import (
    ExponentFit,
    active_learning_run,
    diminishing_returns,
    estimate_complexity,
    hypothesis_test,
)
from src.infobounds import BoundReport, TheoremBound, fano_report, thm_lower
from src.record import RunRecord
from src.registry import RunRegistry
from src.repositories.mongo_repository import MongoRunRepository

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).resolve().parent / "presets"
PRESETS = ("sec41", "thm2", "thm3", "thm4", "thm5", "thm6", "thm7", "thm8")
BOUND_NAMES = tuple(item.value for item in TheoremBound) + ("fano_lower",)

CSV_FIELDS = (
    "horizon",
    "mean_err",
    "max_err",
    "p_err",
    "p_mismatch",
    "mi_nats",
    "mi_lo",
    "mi_hi",
    "ir_upper_nats",
    "fano_lower_nats",
)
COMPLEXITY_FIELDS = ("eps", "t_hat", "last_fail", "first_pass", "resolved")
TRACE_FIELDS = ("t", "err_mean", "err_se", "err_r_mean", "lf_mean", "lf_se")
RISK_FIELDS = ("t", "mean_risk", "risk_se")

ALLOWED_ARCHIVE_OVERRIDE_KEYS = {"connection_string", "database_name", "collection_name"}


@dataclass
class RunOutput:
    """Everything one run emits: the CSV table and the JSON document."""

    stem: str
    seed: int
    mode: RunMode
    config_text: str
    header: Sequence[str]
    rows: List[tuple] = field(default_factory=list)
    reports: List[BoundReport] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def run_key(self) -> str:
        return f"{self.stem}_{self.seed}"

    @property
    def quotable(self) -> bool:
        return all(report.quotable for report in self.reports)

    def to_json_dict(self, bits: bool = False) -> dict:
        return {
            "name": self.stem,
            "seed": self.seed,
            "mode": self.mode.value,
            "config": self.config_text,
            "bounds": [report.to_json_dict(bits) for report in self.reports],
            **self.extra,
        }

    def to_record(self) -> RunRecord:
        return RunRecord(
            stem=self.stem,
            seed=self.seed,
            mode=self.mode.value,
            config_text=self.config_text,
            header=list(self.header),
            rows=[[_plain(value) for value in row] for row in self.rows],
            reports=[report.to_json_dict() for report in self.reports],
        )


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def _json_default(value):
    plain = _plain(value)
    if plain is value:
        raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
    return plain


def _fit_dict(fit: Optional[ExponentFit]) -> Optional[dict]:
    if fit is None:
        return None
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "stderr": fit.stderr,
        "ci": list(fit.ci),
        "r_squared": fit.r_squared,
        "points": fit.points,
    }


def _cell(value) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _run_experiment(run_config: RunConfig, output: RunOutput, jobs: int) -> None:
    result = hypothesis_test(run_config.experiment, jobs=jobs)
    output.rows = [tuple(getattr(row, name) for name in CSV_FIELDS) for row in result.rows]
    output.reports.extend(result.reports)
    output.extra.update(
        fit=_fit_dict(result.fit),
        meta=result.meta,
        horizons=[
            {
                "horizon": row.horizon,
                "confusion": row.confusion,
                "per_hypothesis_mismatch": row.per_hypothesis_mismatch,
                "per_hypothesis_p_err": row.per_hypothesis_p_err,
                "miller_madow_nats": row.miller_madow,
                "lf_upper_nats": row.lf_upper_nats,
                "sandwich_holds": row.sandwich_holds(),
            }
            for row in result.rows
        ],
    )


def _run_complexity(run_config: RunConfig, output: RunOutput, jobs: int) -> None:
    estimate = estimate_complexity(run_config.experiment, jobs=jobs)
    output.rows = [
        (item.eps, item.horizon, item.bracket[0], item.bracket[1], item.resolved)
        for item in estimate.targets
    ]
    output.extra.update(fit=_fit_dict(estimate.fit))


def _run_diminishing_returns(run_config: RunConfig, output: RunOutput, jobs: int) -> None:
    report = diminishing_returns(
        run_config.experiment,
        lipschitz_ratio=run_config.lipschitz_ratio,
        burn_in=run_config.burn_in,
        jobs=jobs,
    )
    output.rows = list(
        zip(
            report.times,
            report.err_mean,
            report.err_se,
            report.err_r_mean,
            report.lf_mean,
            report.lf_se,
        )
    )
    output.extra.update(
        constant=report.constant,
        bound_holds=report.bound_holds,
        violation_times=report.violations,
        err_fit=_fit_dict(report.err_fit),
        lf_fit=_fit_dict(report.lf_fit),
        slope_ratio=report.slope_ratio,
        slopes_agree=report.slopes_agree,
    )


def _run_active_learning(run_config: RunConfig, output: RunOutput, jobs: int) -> None:
    cfg = run_config.experiment
    learner = None
    if run_config.growth is not None:
        learner = ActiveBisection(cfg.algorithm.k, cfg.algorithm.eps_target, run_config.growth)
    result = active_learning_run(
        cfg.oracle.kappa,
        cfg.oracle.c_low,
        cfg.oracle.c_high,
        learner=learner,
        horizons=cfg.horizons,
        trials=cfg.trials,
        seed=cfg.base_seed,
        jobs=jobs,
    )
    output.rows = list(zip(result.horizons, result.mean_risk, result.risk_se))
    output.extra.update(
        fit=_fit_dict(result.fit),
        exponential=result.exponential,
        expected_slope=result.expected_slope,
    )


_RUNNERS = {
    RunMode.EXPERIMENT: (CSV_FIELDS, _run_experiment),
    RunMode.COMPLEXITY: (COMPLEXITY_FIELDS, _run_complexity),
    RunMode.DIMINISHING_RETURNS: (TRACE_FIELDS, _run_diminishing_returns),
    RunMode.ACTIVE_LEARNING: (RISK_FIELDS, _run_active_learning),
}


def execute(run_config: RunConfig, stem: str, jobs: int = 1) -> RunOutput:
    """
    Run one parsed config and collect its output.

    Args:
        run_config: Parsed config
        stem: Preset name or config file stem, used in file names and run keys
        jobs: Worker processes handed to the harness

    Returns:
        RunOutput with the CSV rows, bound reports and mode-specific extras
    """
    header, runner = _RUNNERS[run_config.mode]
    output = RunOutput(
        stem=stem,
        seed=run_config.experiment.base_seed,
        mode=run_config.mode,
        config_text=format_config(run_config),
        header=header,
    )
    runner(run_config, output, jobs)
    if run_config.bound is not None:
        output.reports.append(run_config.bound.evaluate())
    logger.info("%s finished with %d rows", output.run_key, len(output.rows))
    return output


def csv_text(header: Sequence[str], rows: Sequence[tuple]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def emit(output: RunOutput, out_dir: Path, fmt: str = "both", bits: bool = False) -> List[Path]:
    """
    Write {stem}_{seed}.csv and/or {stem}_{seed}.json into out_dir.

    Raises:
        OSError: With the offending path in the message
    """
    out_dir = Path(out_dir)
    written = []
    documents = []
    if fmt in ("csv", "both"):
        text = csv_text(output.header, output.rows)
        documents.append((out_dir / f"{output.run_key}.csv", text))
    if fmt in ("json", "both"):
        text = json_text(output.to_json_dict(bits))
        documents.append((out_dir / f"{output.run_key}.json", text))
    for path, text in documents:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        written.append(path)
        logger.debug("Wrote %s", path)
    return written


def _build_archive_config(overrides: Optional[dict] = None) -> dict:
    """Archive settings from the environment, with explicit overrides on top."""
    config = {
        "connection_string": os.getenv("MONGO_URI", "mongodb://localhost:27017/"),
        "database_name": os.getenv("MONGO_DB_NAME", "oracle_complexity"),
        "collection_name": os.getenv("MONGO_COLLECTION_NAME", "runs"),
    }
    if overrides:
        config.update(
            {key: overrides[key] for key in ALLOWED_ARCHIVE_OVERRIDE_KEYS if key in overrides}
        )
    return config


@contextmanager
def archive_repository(
    overrides: Optional[dict] = None,
    factory: Optional[Callable[..., MongoRunRepository]] = None,
):
    """Yield a Mongo-backed run repository and close it afterwards unless a factory supplied it."""
    config = _build_archive_config(overrides)
    repo = (factory or MongoRunRepository)(**config)
    try:
        yield repo
    finally:
        if factory is None:
            repo.close()


def archive(output: RunOutput, factory: Optional[Callable[..., MongoRunRepository]] = None) -> None:
    with archive_repository(factory=factory) as repo:
        RunRegistry(repo).add_run(output.to_record())


def _parse_params(pairs: Sequence[str]) -> dict:
    params = {}
    violations = []
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            violations.append(f"--param {pair!r} is not key=value")
            continue
        try:
            params[key.strip()] = int(raw)
        except ValueError:
            try:
                params[key.strip()] = float(raw)
            except ValueError:
                violations.append(f"--param {key}={raw!r} is not a number")
    if violations:
        raise ConfigError(violations)
    return params


def evaluate_bound(name: str, params: dict) -> BoundReport:
    """Evaluate a named formula; fano_lower takes N and delta."""
    try:
        if name == "fano_lower":
            return fano_report(params["N"], params["delta"])
        return thm_lower(TheoremBound(name), **params)
    except (KeyError, TypeError) as exc:
        raise ConfigError([f"{name}: bad or missing parameter {exc}"]) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Oracle complexity lower bounds: formula evaluation and Monte Carlo checks.",
    )
    command = parser.add_mutually_exclusive_group(required=True)
    command.add_argument("--config", type=Path, help="Run an experiment config file")
    command.add_argument("--repro", choices=PRESETS, help="Run a shipped preset")
    command.add_argument("--bound", choices=BOUND_NAMES, help="Evaluate a closed-form bound")
    parser.add_argument("--param", action="append", default=[], help="Bound input as key=value")
    parser.add_argument("--seed", type=int, help="Override the config's base seed")
    parser.add_argument("--out", type=Path, default=Path("results"), help="Output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument(
        "--jobs",
        type=int,
        default=int(os.getenv("ORACLE_BOUNDS_JOBS", "1")),
        help="Worker processes (default: ORACLE_BOUNDS_JOBS or 1)",
    )
    parser.add_argument("--bits", action="store_true", help="Also report nats in bits")
    parser.add_argument("--archive", action="store_true", help="Store the run in the run archive")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        name = os.getenv("ORACLE_BOUNDS_LOG_LEVEL", "WARNING").upper()
        level = getattr(logging, name, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def load_run_config(args: argparse.Namespace):
    """Read the config named by --config or --repro; returns (RunConfig, stem)."""
    path = args.config if args.config is not None else PRESET_DIR / f"{args.repro}.ini"
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(text), Path(path).stem


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        if args.bound is not None:
            report = evaluate_bound(args.bound, _parse_params(args.param))
            print(json_text(report.to_json_dict(args.bits)), end="")
            return 0 if report.quotable else 1

        run_config, stem = load_run_config(args)
        if args.seed is not None:
            run_config = run_config.with_seed(args.seed)
            run_config.experiment.validate()
        output = execute(run_config, stem, jobs=max(1, args.jobs))
        for path in emit(output, args.out, args.format, args.bits):
            print(path)
        if args.archive:
            archive(output)
    except OracleBoundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if not output.quotable:
        for report in output.reports:
            for violation in report.violations():
                logger.warning("%s outside its range: %s", report.name, violation)
        return 1
    return 0
