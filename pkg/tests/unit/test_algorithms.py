import math

import numpy as np
import pytest

from src.algorithms import (
    ActiveBisection,
    Bisection,
    GridSearch,
    ProjectedSGD,
    StepRule,
    Transcript,
    canonical_estimate,
    replay,
    run,
)
from src.errors import (
    DomainViolationError,
    IncompatibleOracleError,
    ParameterOutOfRangeError,
)
from src.geometry import Domain
from src.instances import EnsembleKind, Instance, build_ensemble
from src.oracles import OracleKind, OracleModel, OracleResponse, ResponseKind
from src.streams import make_stream


@pytest.fixture
def unit_interval():
    return Domain.interval(0.0, 1.0)


@pytest.fixture
def quadratic(unit_interval):
    return Instance.quadratic(unit_interval, 0.3)


def label(value: int) -> OracleResponse:
    return OracleResponse(ResponseKind.LABEL, label=value)


class TestRun:
    def test_transcript_shapes(self, quadratic):
        transcript = run(ProjectedSGD(), OracleModel.fog(1.0), quadratic, 25, make_stream(1))

        assert isinstance(transcript, Transcript)
        assert transcript.horizon == 25
        assert transcript.queries.shape == (25, 1)
        assert len(transcript.responses) == 25
        assert transcript.err_trace.shape == (26,)
        assert np.all(transcript.err_trace >= 0.0)

    def test_runs_are_reproducible(self, quadratic):
        oracle = OracleModel.fog(1.0)
        first = run(ProjectedSGD(), oracle, quadratic, 50, make_stream(3, 0, 0))
        second = run(ProjectedSGD(), oracle, quadratic, 50, make_stream(3, 0, 0))

        np.testing.assert_array_equal(first.queries, second.queries)
        np.testing.assert_array_equal(first.final, second.final)

    def test_replay_recovers_queries_from_responses(self, quadratic, unit_interval):
        transcript = run(ProjectedSGD(), OracleModel.fog(1.0), quadratic, 40, make_stream(2))
        queries, final = replay(ProjectedSGD(), unit_interval, transcript.responses)

        np.testing.assert_array_equal(queries, transcript.queries)
        np.testing.assert_array_equal(final, transcript.final)

    def test_zero_horizon_raises(self, quadratic):
        with pytest.raises(ParameterOutOfRangeError):
            run(ProjectedSGD(), OracleModel.fog(1.0), quadratic, 0, make_stream(0))

    def test_incompatible_oracle_raises(self, quadratic):
        with pytest.raises(IncompatibleOracleError):
            run(Bisection(), OracleModel.bernoulli_label(2.0, 0.1, 0.2), quadratic, 5, make_stream(0))

    def test_point_at_follows_queries(self, quadratic):
        transcript = run(ProjectedSGD(), OracleModel.fog(1.0), quadratic, 10, make_stream(4))

        np.testing.assert_array_equal(transcript.point_at(3), transcript.queries[3])
        np.testing.assert_array_equal(transcript.point_at(10), transcript.final)


class TestProjectedSGD:
    def test_noiseless_inv_t_reaches_minimizer(self, quadratic):
        transcript = run(ProjectedSGD(), OracleModel.noiseless(), quadratic, 5, make_stream(0))

        # step 1/1 on a unit-curvature quadratic lands on the center at once
        assert transcript.queries[1, 0] == pytest.approx(0.3)
        assert transcript.err_trace[-1] == pytest.approx(0.0)

    def test_iterates_stay_in_domain(self, unit_interval):
        inst = Instance.quadratic(unit_interval, 1.0)
        transcript = run(
            ProjectedSGD(StepRule.INV_SQRT_T, 5.0), OracleModel.fog(3.0), inst, 100, make_stream(8)
        )

        assert np.all(transcript.queries >= 0.0)
        assert np.all(transcript.queries <= 1.0)

    def test_horizon_dependent_scale(self, unit_interval):
        sgd = ProjectedSGD(StepRule.INV_SQRT_T)

        assert not sgd.horizon_free
        assert sgd.step_scale(unit_interval, 100) == pytest.approx(0.1)
        assert ProjectedSGD(StepRule.INV_SQRT_T, 0.5).horizon_free

    def test_start_outside_domain_raises(self, quadratic):
        with pytest.raises(DomainViolationError):
            run(ProjectedSGD(x1=(2.0,)), OracleModel.fog(1.0), quadratic, 3, make_stream(0))

    def test_nonpositive_scale_raises(self):
        with pytest.raises(ParameterOutOfRangeError):
            ProjectedSGD(scale=0.0)


class TestBisection:
    def test_noiseless_bisection_halves_error(self, unit_interval):
        inst = Instance.threshold(unit_interval, 0.3)
        transcript = run(Bisection(), OracleModel.noiseless(), inst, 20, make_stream(0))

        assert abs(transcript.final[0] - 0.3) <= 2.0**-20

    def test_bisection_needs_one_dimension(self):
        inst = Instance.quadratic(Domain.box(1.0, 2), [0.0, 0.0])

        with pytest.raises(ParameterOutOfRangeError):
            run(Bisection(), OracleModel.noiseless(), inst, 3, make_stream(0))


class TestGridSearch:
    def test_grid_search_picks_lowest_mean(self, unit_interval):
        inst = Instance.quadratic(unit_interval, 0.5)
        transcript = run(GridSearch(5), OracleModel.noiseless(), inst, 10, make_stream(0))

        assert transcript.final[0] == pytest.approx(0.5)
        assert not GridSearch().horizon_free

    def test_grid_search_needs_values(self, unit_interval):
        inst = Instance.quadratic(unit_interval, 0.5)

        with pytest.raises(IncompatibleOracleError):
            run(GridSearch(5), OracleModel.sog(1.0), inst, 10, make_stream(0))


class TestActiveBisection:
    def test_epoch_lengths_are_odd_and_grow(self):
        learner = ActiveBisection(k=8.0, eps_target=0.01, growth=2.0)

        first = learner.epoch_length(0)
        assert first == 37
        assert learner.epoch_length(1) == 75
        assert all(learner.epoch_length(j) % 2 == 1 for j in range(6))

    def test_invalid_parameters_raise(self):
        with pytest.raises(ParameterOutOfRangeError):
            ActiveBisection(k=0.0)
        with pytest.raises(ParameterOutOfRangeError):
            ActiveBisection(eps_target=1.5)
        with pytest.raises(ParameterOutOfRangeError):
            ActiveBisection(growth=0.5)

    def test_unanimous_epoch_halves_toward_majority(self, unit_interval):
        learner = ActiveBisection()
        length = learner.epoch_length(0)
        policy = learner.start(unit_interval, 100)

        for _ in range(length):
            policy.observe(label(1))
        assert policy.query()[0] == pytest.approx(0.25)
        for _ in range(length):
            policy.observe(label(-1))
        assert policy.query()[0] == pytest.approx(0.375)

    def test_narrow_majority_stays_put(self, unit_interval):
        learner = ActiveBisection(k=8.0, eps_target=0.01)
        length = learner.epoch_length(0)
        policy = learner.start(unit_interval, 1000)

        votes = [1] * (length // 2 + 1) + [-1] * (length // 2)
        for value in votes:
            policy.observe(label(value))
        assert abs(sum(votes)) < learner.margin(length)
        assert policy.query()[0] == pytest.approx(0.5)

    def test_learner_needs_labels(self, unit_interval):
        policy = ActiveBisection().start(unit_interval, 10)

        with pytest.raises(IncompatibleOracleError):
            policy.observe(OracleResponse(ResponseKind.GRAD_ONLY, grad=np.array([1.0])))

    def test_locates_threshold_from_noisy_labels(self, unit_interval):
        inst = Instance.threshold(unit_interval, 0.37)
        oracle = OracleModel.bernoulli_label(1.0, 0.1, 0.3)
        transcript = run(ActiveBisection(), oracle, inst, 2000, make_stream(6))

        assert abs(transcript.final[0] - 0.37) < 0.05


class TestCanonicalEstimate:
    def test_nearest_member_wins(self, unit_interval):
        ensemble = build_ensemble(EnsembleKind.QUADRATIC_PAIR, unit_interval, 0.02)

        assert canonical_estimate(ensemble, np.array([0.32])) == 0
        assert canonical_estimate(ensemble, np.array([0.69])) == 1

    def test_ties_go_to_lowest_index(self, unit_interval):
        ensemble = build_ensemble(EnsembleKind.QUADRATIC_PAIR, unit_interval, 0.02)

        assert canonical_estimate(ensemble, np.array([0.5])) == 0

    def test_oracle_kind_enum_values(self):
        assert OracleKind("label") is OracleKind.BERNOULLI_LABEL
        assert math.isclose(ActiveBisection().margin(37), math.sqrt(74 * math.log(100)))
