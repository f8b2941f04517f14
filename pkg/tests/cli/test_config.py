import pytest

from app.cli import PRESET_DIR, PRESETS
from app.config import RunMode, format_config, parse_config
from src.errors import ConfigError
from src.geometry import Domain
from src.harness import CriterionKind
from src.infobounds import TheoremBound
from src.instances import EnsembleKind
from src.oracles import OracleKind

BASE = """
[ensemble]
kind = quadratic_pair
domain = interval
lo = 0.0
hi = 1.0
eps = 0.02

[oracle]
kind = fog
sigma = 1.0

[algorithm]
kind = sgd

[sweep]
horizons = 1, 10
trials = {trials}
delta = {delta}
"""


def config_text(trials=30, delta=0.1, extra=""):
    return BASE.format(trials=trials, delta=delta) + extra


def violations_of(text):
    with pytest.raises(ConfigError) as exc_info:
        parse_config(text)
    return exc_info.value.violations


class TestParseConfig:
    def test_minimal_config(self):
        run_config = parse_config(config_text())
        cfg = run_config.experiment

        assert run_config.mode is RunMode.EXPERIMENT
        assert run_config.bound is None
        assert cfg.ensemble.kind is EnsembleKind.QUADRATIC_PAIR
        assert cfg.ensemble.domain == Domain.interval(0.0, 1.0)
        assert cfg.oracle.kind is OracleKind.FOG
        assert cfg.horizons == (1, 10)
        assert cfg.criterion.kind is CriterionKind.PROBABILITY
        assert cfg.base_seed == 0

    def test_delta_above_half_is_rejected(self):
        found = violations_of(config_text(delta=0.7))

        assert any("δ ∈ (0,1/2)" in item for item in found)

    def test_too_few_trials_is_rejected(self):
        found = violations_of(config_text(trials=10))

        assert any("minimum 30 trials" in item for item in found)

    def test_every_violation_is_listed(self):
        found = violations_of(config_text(trials=10, delta=0.7))

        assert len(found) == 2

    def test_unknown_key(self):
        found = violations_of(config_text().replace("sigma = 1.0", "sigma = 1.0\nnoise = 2"))

        assert "unknown key 'noise' in section [oracle]" in found

    def test_unknown_section(self):
        found = violations_of(config_text(extra="\n[plots]\nwidth = 3\n"))

        assert "unknown section [plots]" in found

    def test_missing_oracle(self):
        text = config_text().replace("[oracle]\nkind = fog\nsigma = 1.0\n", "")

        assert "missing key 'kind' in section [oracle]" in violations_of(text)

    def test_bad_enum_value(self):
        text = config_text().replace("kind = sgd", "kind = newton")

        found = violations_of(text)
        assert any(item.startswith("[algorithm] kind='newton' is not one of") for item in found)

    def test_unparseable_number(self):
        text = config_text().replace("sigma = 1.0", "sigma = lots")

        assert "[oracle] sigma='lots' cannot be parsed" in violations_of(text)

    def test_construction_range_errors_surface(self):
        text = config_text().replace("kind = quadratic_pair", "kind = lipschitz_pair")
        text = text.replace("eps = 0.02\n", "eps = 0.5\n")

        found = violations_of(text)
        assert any(item.startswith("eps=") for item in found)

    def test_bound_with_missing_input(self):
        found = violations_of(config_text(extra="\n[bound]\nwhich = thm3_fog\nn = 16\n"))

        assert any(item.startswith("[bound] thm3_fog:") for item in found)

    def test_unknown_bound(self):
        found = violations_of(config_text(extra="\n[bound]\nwhich = thm9\n"))

        assert any(item.startswith("[bound] which='thm9'") for item in found)

    def test_bound_is_parsed(self):
        extra = "\n[bound]\nwhich = thm3_fog\nn = 16\ndelta = 0.25\neps = 0.01\n"
        run_config = parse_config(config_text(extra=extra))

        assert run_config.bound.which is TheoremBound.THM3_FOG
        assert dict(run_config.bound.params) == {"n": 16, "delta": 0.25, "eps": 0.01}
        assert run_config.bound.evaluate().quotable

    def test_active_learning_needs_labels(self):
        text = config_text() + "mode = active_learning\n"

        assert "[oracle] active_learning runs need kind=label" in violations_of(text)

    def test_active_learning_defaults_the_ensemble(self):
        text = (
            "[oracle]\nkind = label\nkappa = 2.0\nc_low = 0.2\nc_high = 0.4\n"
            "[algorithm]\nkind = active_bisection\n"
            "[sweep]\nmode = active_learning\nhorizons = 100, 200\ntrials = 30\n"
        )
        run_config = parse_config(text)

        assert run_config.mode is RunMode.ACTIVE_LEARNING
        assert run_config.experiment.ensemble.kind is EnsembleKind.THRESHOLD_LATTICE

    def test_malformed_text(self):
        found = violations_of("kind = fog\n")

        assert found[0].startswith("malformed config")

    def test_with_seed(self):
        run_config = parse_config(config_text()).with_seed(12)

        assert run_config.experiment.base_seed == 12


class TestFormatConfig:
    @pytest.mark.parametrize("preset", PRESETS)
    def test_presets_round_trip(self, preset):
        text = (PRESET_DIR / f"{preset}.ini").read_text(encoding="utf-8")
        run_config = parse_config(text)

        assert parse_config(format_config(run_config)) == run_config

    def test_normal_form_is_stable(self):
        run_config = parse_config(config_text())
        once = format_config(run_config)

        assert format_config(parse_config(once)) == once

    def test_floats_keep_full_precision(self):
        run_config = parse_config(config_text().replace("sigma = 1.0", "sigma = 0.1234567890123"))

        assert "sigma = 0.1234567890123" in format_config(run_config)
