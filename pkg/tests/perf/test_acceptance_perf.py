"""
Acceptance checks for the shipped presets.
Each check asserts its statistical outcome and that it finishes within its time limit.
"""

import math
import os
import time

import numpy as np
import pytest

from app.cli import PRESET_DIR, csv_text, execute, json_text
from app.config import parse_config
from src.geometry import Domain
from src.harness import active_learning_run, diminishing_returns, estimate_complexity, hypothesis_test
from src.infobounds import TheoremBound, fano_lower, ir_upper, recurrence_check, thm_lower
from src.instances import EnsembleKind, Instance, build_ensemble
from src.oracles import OracleModel, sample
from src.streams import make_stream

JOBS = int(os.getenv("ORACLE_BOUNDS_JOBS", "1"))


def load_preset(name):
    return parse_config((PRESET_DIR / f"{name}.ini").read_text(encoding="utf-8"))


def timed(call, *args, **kwargs):
    start_time = time.perf_counter()
    result = call(*args, **kwargs)
    return result, time.perf_counter() - start_time


def test_worked_example_information_radius():
    """Quadratic pair at eps 0.02, sigma 1: 0.1 nats per query, matched by a 10^4 point grid."""
    domain = Domain.interval(0.0, 1.0)
    ensemble = build_ensemble(EnsembleKind.QUADRATIC_PAIR, domain, 0.02)

    report, elapsed = timed(ir_upper, ensemble, OracleModel.fog(1.0), 1, domain.grid(10**4))

    assert report.value == pytest.approx(0.1, abs=1e-12)
    assert report.inputs["sup_method"] == "closed_form"
    assert abs(report.inputs["grid_sup_nats"] - report.value) <= 1e-9
    assert elapsed < 1.0, f"IR evaluation took {elapsed:.3f}s"


def test_fano_information_sandwich():
    """Measured MI sits between the Fano floor and T * 0.1 nats at every informative horizon."""
    cfg = load_preset("sec41").experiment

    result, elapsed = timed(hypothesis_test, cfg, jobs=JOBS)

    assert [row.horizon for row in result.rows] == [1, 10, 100, 1000]
    for row in result.rows:
        assert row.ir_upper_nats == pytest.approx(0.1 * row.horizon)
        if row.p_mismatch < 0.5:
            assert fano_lower(2, row.p_mismatch) <= row.mi_hi
            assert row.mi_lo <= row.ir_upper_nats
    assert elapsed < 120, f"Sandwich experiment took {elapsed:.1f}s"


def test_strongly_convex_rate():
    """T_hat grows like 1/eps for SGD with 1/t steps on the quadratic pair."""
    cfg = load_preset("thm3").experiment

    estimate, elapsed = timed(estimate_complexity, cfg, jobs=JOBS)

    assert all(item.resolved for item in estimate.targets)
    assert estimate.fit.slope == pytest.approx(1.0, abs=0.2)
    assert elapsed < 600, f"Complexity scan took {elapsed:.1f}s"


def test_lipschitz_rate():
    """T_hat grows like eps^-2 for SGD with 1/sqrt(t) steps under subgradient noise."""
    cfg = load_preset("thm2").experiment

    estimate, elapsed = timed(estimate_complexity, cfg, jobs=JOBS)

    assert all(item.resolved for item in estimate.targets)
    assert estimate.fit.slope == pytest.approx(2.0, abs=0.3)
    assert elapsed < 600, f"Complexity scan took {elapsed:.1f}s"


def test_diminishing_returns():
    run_config = load_preset("thm5")

    report, elapsed = timed(
        diminishing_returns,
        run_config.experiment,
        lipschitz_ratio=run_config.lipschitz_ratio,
        burn_in=run_config.burn_in,
        jobs=JOBS,
    )

    assert report.constant == pytest.approx(2.0)
    assert report.bound_holds, f"LF trace above bound at t={report.violations[:10].tolist()}"
    assert report.slopes_agree
    assert elapsed < 300, f"Trace experiment took {elapsed:.1f}s"


def test_even_power_slope_gap():
    """For m = 4 the LF trace decays at 3/4 of the squared-error slope."""
    run_config = load_preset("thm7")

    report, elapsed = timed(
        diminishing_returns,
        run_config.experiment,
        lipschitz_ratio=run_config.lipschitz_ratio,
        burn_in=run_config.burn_in,
        jobs=JOBS,
    )

    assert report.slope_ratio == pytest.approx(0.75, abs=0.15)
    assert elapsed < 300, f"Trace experiment took {elapsed:.1f}s"


def test_active_learning_polynomial_rate():
    horizons = np.unique(np.geomspace(100, 10**4, 20).astype(int))

    result, elapsed = timed(
        active_learning_run, 2.0, 0.2, 0.4, horizons=horizons, trials=200, seed=8, jobs=JOBS
    )

    assert result.expected_slope == pytest.approx(-1.0)
    assert result.fit.slope == pytest.approx(-1.0, abs=0.2)
    assert elapsed < 300, f"Active learning run took {elapsed:.1f}s"


def test_active_learning_exponential_rate():
    horizons = np.linspace(20, 400, 20).astype(int)

    result, elapsed = timed(
        active_learning_run, 1.0, 0.2, 0.4, horizons=horizons, trials=200, seed=9, jobs=JOBS
    )

    assert result.exponential
    assert result.fit.slope < 0
    assert result.fit.r_squared > 0.9
    assert elapsed < 300, f"Active learning run took {elapsed:.1f}s"


def test_moment_bounded_oracle_conditions():
    """Sparse responses are unbiased and keep their alpha-th central moment under L^alpha."""
    domain = Domain.box(1.0, 1)
    ensemble = build_ensemble(
        EnsembleKind.LINEAR_PAIR, domain, 0.1, lipschitz=1.0, alpha=2.0
    )
    oracle = OracleModel.moment_bounded(2.0, 0.1, 1.0, c=4.0)
    rng = make_stream(4)
    moment_bound = oracle.lipschitz**oracle.alpha
    draws = 20000
    start_time = time.perf_counter()

    for inst in ensemble.instances:
        for x in domain.sample(rng, 10):
            responses = [sample(oracle, inst, x, rng) for _ in range(draws)]
            values = np.array([response.value for response in responses])
            grads = np.array([response.grad[0] for response in responses])
            f, g = inst.value(x), inst.gradient(x)[0]

            assert abs(values.mean() - f) <= 3 * values.std(ddof=1) / math.sqrt(draws) + 1e-12
            assert abs(grads.mean() - g) <= 3 * grads.std(ddof=1) / math.sqrt(draws) + 1e-12
            assert np.mean(np.abs(values - f) ** oracle.alpha) <= moment_bound
            assert np.mean(np.abs(grads - g) ** oracle.alpha) <= moment_bound
    elapsed = time.perf_counter() - start_time
    assert elapsed < 60, f"Moment checks took {elapsed:.1f}s"


def test_formula_evaluators():
    start_time = time.perf_counter()

    assert fano_lower(32, 0.1) == pytest.approx(2.4260, abs=1e-4)
    strongly_convex = thm_lower(TheoremBound.THM3_FOG, n=16, delta=1 / 3, eps=0.01)
    assert strongly_convex.value == pytest.approx(0.0111081, abs=1e-6)
    moment = thm_lower(TheoremBound.THM4, alpha=2.0, delta=0.25, eps=0.1, c=1.0)
    assert moment.value == pytest.approx(18.8722, abs=1e-3)
    assert not moment.quotable

    eps = 0.5 / np.arange(1, 10**6 + 1)
    report = recurrence_check(1.0, 0.0, 1.0, eps)
    assert report.first_violation is not None
    assert report.first_violation < 10**6

    elapsed = time.perf_counter() - start_time
    assert elapsed < 1.0, f"Formula evaluation took {elapsed:.3f}s"


@pytest.mark.parametrize("preset", ["sec41", "thm4", "thm6"])
def test_same_seed_is_bit_identical(preset):
    run_config = load_preset(preset)

    first = execute(run_config, preset, jobs=JOBS)
    second = execute(run_config, preset, jobs=max(2, JOBS))

    assert csv_text(first.header, first.rows) == csv_text(second.header, second.rows)
    assert json_text(first.to_json_dict()) == json_text(second.to_json_dict())


def test_instance_point_queries_are_fast():
    """One million point evaluations of a quadratic stay well under a second."""
    inst = Instance.quadratic(Domain.interval(0.0, 1.0), 0.3)
    points = np.linspace(0.0, 1.0, 10**6)[:, None]

    values, elapsed = timed(inst.values, points)

    assert values.shape == (10**6,)
    assert elapsed < 1.0, f"Vectorized evaluation took {elapsed:.3f}s"
