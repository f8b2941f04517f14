import math
from dataclasses import replace

import numpy as np
import pytest

from src.algorithms import StepRule
from src.errors import ConfigError, ParameterOutOfRangeError
from src.geometry import Domain
from src.harness import (
    AlgorithmKind,
    AlgorithmSpec,
    CriterionKind,
    EnsembleSpec,
    ExperimentConfig,
    OracleSpec,
    SuccessCriterion,
    active_learning_run,
    diminishing_returns,
    estimate_complexity,
    excess_risk,
    fit_exponent,
    fit_exponential,
    hypothesis_test,
)
from src.infobounds import LN2
from src.instances import EnsembleKind
from src.oracles import OracleKind


@pytest.fixture
def quadratic_config():
    return ExperimentConfig(
        ensemble=EnsembleSpec(EnsembleKind.QUADRATIC_PAIR, Domain.interval(0.0, 1.0), eps=0.02),
        oracle=OracleSpec(OracleKind.FOG, sigma=1.0),
        algorithm=AlgorithmSpec(AlgorithmKind.SGD, StepRule.INV_T),
        horizons=(1, 10, 100),
        trials=40,
        base_seed=1,
        criterion=SuccessCriterion(CriterionKind.PROBABILITY, eps=0.02, delta=0.1),
        name="quadratic",
    )


class TestExperimentConfig:
    def test_valid_config_has_no_violations(self, quadratic_config):
        assert quadratic_config.violations() == []
        quadratic_config.validate()

    def test_too_few_trials(self, quadratic_config):
        found = replace(quadratic_config, trials=10).violations()

        assert any("minimum 30 trials" in item for item in found)

    def test_delta_outside_half(self, quadratic_config):
        cfg = replace(quadratic_config, criterion=SuccessCriterion(delta=0.7))

        with pytest.raises(ConfigError) as exc_info:
            cfg.validate()
        assert any("δ ∈ (0,1/2)" in item for item in exc_info.value.violations)

    def test_every_violation_is_reported(self, quadratic_config):
        cfg = replace(
            quadratic_config,
            trials=5,
            horizons=(10, 5),
            criterion=SuccessCriterion(eps=0.0, delta=0.6),
        )

        assert len(cfg.violations()) == 4

    def test_with_seed(self, quadratic_config):
        assert quadratic_config.with_seed(9).base_seed == 9
        assert quadratic_config.base_seed == 1


class TestSuccessCriterion:
    def test_mean_error(self):
        criterion = SuccessCriterion(CriterionKind.MEAN_ERROR, eps=0.02)

        assert criterion.passes(np.array([[0.01, 0.01], [0.03, 0.0]]))
        assert not criterion.passes(np.array([[0.01, 0.01], [0.05, 0.0]]))

    def test_probability(self):
        criterion = SuccessCriterion(CriterionKind.PROBABILITY, eps=0.02, delta=0.1)

        assert not criterion.passes(np.array([[0.0, 0.0], [0.03, 0.0]]))
        assert criterion.passes(np.zeros((2, 10)))


class TestHypothesisTest:
    def test_rows_and_reports(self, quadratic_config):
        result = hypothesis_test(quadratic_config)

        assert [row.horizon for row in result.rows] == [1, 10, 100]
        assert result.meta["N"] == 2
        ir = [report for report in result.reports if report.name == "ir_upper"]
        assert [report.value for report in ir] == pytest.approx([0.1, 1.0, 10.0])
        for row in result.rows:
            assert row.confusion.sum(axis=1).tolist() == [40, 40]
            assert row.ir_upper_nats == pytest.approx(0.1 * row.horizon)
            assert 0.0 <= row.mi_lo <= row.mi_nats <= row.mi_hi
            assert math.isfinite(row.lf_upper_nats)

    def test_identification_improves_with_horizon(self, quadratic_config):
        rows = hypothesis_test(quadratic_config).rows

        assert rows[-1].p_mismatch < rows[0].p_mismatch

    def test_sandwich_once_information_allows(self, quadratic_config):
        result = hypothesis_test(quadratic_config)

        for row in result.rows[1:]:
            assert row.sandwich_holds()
            if not math.isnan(row.fano_lower_nats):
                assert row.fano_lower_nats <= row.mi_nats + 1e-12

    def test_same_seed_same_result(self, quadratic_config):
        first = hypothesis_test(quadratic_config)
        second = hypothesis_test(quadratic_config)

        for a, b in zip(first.rows, second.rows):
            assert a.mean_err == b.mean_err
            np.testing.assert_array_equal(a.confusion, b.confusion)

    def test_job_count_does_not_change_results(self, quadratic_config):
        serial = hypothesis_test(quadratic_config, jobs=1)
        parallel = hypothesis_test(quadratic_config, jobs=2)

        for a, b in zip(serial.rows, parallel.rows):
            assert a.mean_err == b.mean_err
            assert a.mi_nats == b.mi_nats
            np.testing.assert_array_equal(a.confusion, b.confusion)

    def test_other_seed_changes_result(self, quadratic_config):
        first = hypothesis_test(quadratic_config)
        other = hypothesis_test(quadratic_config.with_seed(2))

        assert first.rows[-1].mean_err != other.rows[-1].mean_err

    def test_empty_horizons(self, quadratic_config):
        result = hypothesis_test(replace(quadratic_config, horizons=()))

        assert result.rows == ()
        assert result.fit is None

    def test_fit_needs_four_horizons(self, quadratic_config):
        short = hypothesis_test(quadratic_config)
        long = hypothesis_test(replace(quadratic_config, horizons=(2, 4, 8, 16, 32)))

        assert short.fit is None
        assert long.fit is not None
        assert long.fit.slope < 0.0

    def test_moment_bounded_information(self):
        cfg = ExperimentConfig(
            ensemble=EnsembleSpec(
                EnsembleKind.LINEAR_PAIR, Domain.box(1.0, 1), eps=0.1, lipschitz=1.0, alpha=2.0
            ),
            oracle=OracleSpec(OracleKind.MOMENT_BOUNDED, alpha=2.0, moment_c=4.0),
            algorithm=AlgorithmSpec(AlgorithmKind.SGD, StepRule.INV_SQRT_T, step_scale=0.1),
            horizons=(5, 10),
            trials=30,
            base_seed=3,
            criterion=SuccessCriterion(eps=0.1, delta=0.25),
        )
        result = hypothesis_test(cfg)

        assert [row.ir_upper_nats for row in result.rows] == pytest.approx(
            [5 * 0.04 * LN2, 10 * 0.04 * LN2]
        )
        assert all(math.isnan(row.lf_upper_nats) for row in result.rows)


class TestComplexity:
    def test_scan_brackets_the_passing_horizon(self, quadratic_config):
        cfg = replace(
            quadratic_config,
            horizons=(1, 2, 4, 8, 16, 32, 64),
            criterion=SuccessCriterion(CriterionKind.MEAN_ERROR, eps=0.05),
            targets=(0.05, 1e-4),
        )
        estimate = estimate_complexity(cfg)
        resolved, unresolved = estimate.targets

        assert resolved.resolved
        assert resolved.horizon in (8, 16, 32)
        assert resolved.bracket[1] == resolved.horizon
        assert resolved.bracket[0] == resolved.horizon // 2
        assert not unresolved.resolved
        assert unresolved.bracket == (64, None)
        assert estimate.as_map()[1e-4] is None
        assert estimate.fit is None

    def test_fit_over_targets(self, quadratic_config):
        cfg = replace(
            quadratic_config,
            horizons=tuple(2**k for k in range(9)),
            criterion=SuccessCriterion(CriterionKind.MEAN_ERROR, eps=0.05),
            targets=(0.1, 0.05, 0.025, 0.0125),
        )
        estimate = estimate_complexity(cfg)

        assert all(item.resolved for item in estimate.targets)
        assert estimate.fit is not None
        assert 0.4 < estimate.fit.slope < 1.6


class TestFits:
    def test_exact_power_law(self):
        fit = fit_exponent([(x, 3.0 * x**-2.0) for x in range(1, 9)])

        assert fit.slope == pytest.approx(-2.0)
        assert fit.intercept == pytest.approx(math.log(3.0))
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.ci[0] == pytest.approx(-2.0, abs=1e-9)
        assert fit.points == 8

    def test_exact_exponential(self):
        fit = fit_exponential([(t, 2.0 * math.exp(-0.5 * t)) for t in range(6)])

        assert fit.slope == pytest.approx(-0.5)

    def test_too_few_points(self):
        with pytest.raises(ParameterOutOfRangeError):
            fit_exponent([(1, 1.0), (2, 0.5), (4, 0.25)])

    def test_nonpositive_values(self):
        with pytest.raises(ParameterOutOfRangeError):
            fit_exponent([(1, 1.0), (2, 0.5), (4, 0.0), (8, 0.1)])


class TestDiminishingReturns:
    def test_quadratic_traces(self, quadratic_config):
        cfg = replace(quadratic_config, horizons=(200,))
        report = diminishing_returns(cfg, burn_in=10)

        assert report.times.shape == (200,)
        assert report.constant == pytest.approx(2.0)
        assert report.bound_holds
        assert report.slope_ratio == pytest.approx(1.0, abs=0.1)
        assert report.slopes_agree
        assert report.err_fit.slope < 0.0

    def test_needs_gaussian_oracle(self):
        cfg = ExperimentConfig(
            ensemble=EnsembleSpec(
                EnsembleKind.THRESHOLD_LATTICE, Domain.interval(0.0, 1.0), eps=0.25
            ),
            oracle=OracleSpec(OracleKind.BERNOULLI_LABEL, kappa=2.0),
            algorithm=AlgorithmSpec(AlgorithmKind.ACTIVE_BISECTION),
            horizons=(100,),
            trials=30,
            base_seed=0,
        )

        with pytest.raises(ParameterOutOfRangeError):
            diminishing_returns(cfg)

    def test_needs_anytime_algorithm(self, quadratic_config):
        cfg = replace(
            quadratic_config,
            horizons=(100,),
            algorithm=AlgorithmSpec(AlgorithmKind.GRID_SEARCH),
        )

        with pytest.raises(ParameterOutOfRangeError):
            diminishing_returns(cfg)


class TestActiveLearning:
    def test_excess_risk_profile(self):
        assert excess_risk(2.0, 0.4, 0.1) == pytest.approx(0.004)
        assert excess_risk(1.0, 0.4, 0.1) == pytest.approx(0.08)
        assert excess_risk(2.0, 0.4, -0.1) == pytest.approx(0.004)
        assert excess_risk(2.0, 0.4, 2.0) == pytest.approx(0.625 + 0.75)

    def test_risk_decays(self):
        result = active_learning_run(
            2.0, 0.2, 0.4, horizons=(50, 100, 200, 400, 800), trials=30, seed=0
        )

        assert result.mean_risk.shape == (5,)
        assert result.mean_risk[-1] < result.mean_risk[0]
        assert result.expected_slope == pytest.approx(-1.0)
        assert result.fit is not None
        assert not result.exponential

    def test_kappa_one_uses_exponential_fit(self):
        result = active_learning_run(
            1.0, 0.1, 0.3, horizons=(50, 100, 150, 200), trials=30, seed=1
        )

        assert result.exponential
        assert result.expected_slope is None

    def test_job_count_does_not_change_risk(self):
        kwargs = dict(horizons=(50, 100), trials=30, seed=4)
        serial = active_learning_run(2.0, 0.2, 0.4, jobs=1, **kwargs)
        parallel = active_learning_run(2.0, 0.2, 0.4, jobs=2, **kwargs)

        np.testing.assert_array_equal(serial.mean_risk, parallel.mean_risk)

    def test_kappa_out_of_range(self):
        with pytest.raises(ParameterOutOfRangeError):
            active_learning_run(2.5, 0.2, 0.4, trials=30)
