import csv
import tempfile
from dataclasses import replace
from pathlib import Path

from behave import *

from app.cli import PRESET_DIR, archive, emit, execute
from app.config import format_config, parse_config
from src.errors import DuplicateRunError
from src.repositories.mongo_repository import MongoRunRepository


@given('the preset "{preset}" is loaded')
def load_preset(context, preset):
    context.preset = preset
    text = (PRESET_DIR / f"{preset}.ini").read_text(encoding="utf-8")
    context.run_config = parse_config(text)


@given('the sweep is shortened to horizons "{horizons}" with "{trials}" trials')
def shorten_sweep(context, horizons, trials):
    experiment = replace(
        context.run_config.experiment,
        horizons=tuple(int(item) for item in horizons.split(",")),
        trials=int(trials),
    )
    context.run_config = replace(context.run_config, experiment=experiment)


@given("the run archive is empty")
def empty_archive(context):
    context.repository = MongoRunRepository(
        connection_string="mongomock://localhost",
        database_name="oracle_complexity_features",
    )
    context.repository.collection.delete_many({})


@then('the preset runs in "{mode}" mode')
def check_mode(context, mode):
    assert context.run_config.mode.value == mode, (
        f"Expected {mode}, got {context.run_config.mode.value}"
    )


@then("its normal form parses back to the same config")
def check_normal_form(context):
    assert parse_config(format_config(context.run_config)) == context.run_config


@when('I run it with seed "{seed}" into a temporary directory')
def run_preset(context, seed):
    context.out_dir = Path(tempfile.mkdtemp(prefix="oracle_bounds_"))
    context.output = execute(context.run_config.with_seed(int(seed)), context.preset)
    context.written = emit(context.output, context.out_dir)


@when("I archive the run")
def archive_run(context):
    archive(context.output, factory=lambda **_config: context.repository)


@then('the files "{csv_name}" and "{json_name}" are written')
def check_files(context, csv_name, json_name):
    assert [path.name for path in context.written] == [csv_name, json_name]
    for path in context.written:
        assert path.exists(), f"{path} is missing"


@then('the CSV column "{column}" reads "{values}"')
def check_column(context, column, values):
    with open(context.written[0], newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    actual = [float(row[column]) for row in rows]
    expected = [float(item) for item in values.split(",")]
    assert len(actual) == len(expected)
    for got, want in zip(actual, expected):
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want)), f"{column}: {actual}"


@then('the run archive holds "{count}" run')
def check_archive_count(context, count):
    assert context.repository.collection.count_documents({}) == int(count)


@then("archiving the run again fails")
def check_duplicate(context):
    try:
        archive(context.output, factory=lambda **_config: context.repository)
    except DuplicateRunError as exc:
        assert exc.run_key == context.output.run_key
    else:
        raise AssertionError("Second archive of the same run should fail")
