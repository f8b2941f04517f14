import math

from behave import *

from app.cli import _parse_params, evaluate_bound
from src.errors import ConfigError


def parse_inputs(text):
    return _parse_params([item.strip() for item in text.split(",") if item.strip()])


@when('I evaluate "{name}" with "{inputs}"')
def evaluate(context, name, inputs):
    context.report = evaluate_bound(name, parse_inputs(inputs))


@when('I try to evaluate "{name}" with "{inputs}"')
def try_evaluate(context, name, inputs):
    context.error = None
    try:
        evaluate_bound(name, parse_inputs(inputs))
    except ConfigError as exc:
        context.error = exc


@then('the bound value is "{expected}" within "{tolerance}"')
def check_value(context, expected, tolerance):
    actual = context.report.value
    assert math.isclose(actual, float(expected), abs_tol=float(tolerance)), (
        f"Expected {expected} +- {tolerance}, got {actual}"
    )


@then("the bound is quotable")
def check_quotable(context):
    assert context.report.quotable, f"Violated: {context.report.violations()}"


@then('the bound is not quotable because of "{condition}"')
def check_not_quotable(context, condition):
    assert not context.report.quotable
    assert condition in context.report.violations(), context.report.violations()


@then("the evaluation fails with a configuration error")
def check_failure(context):
    assert context.error is not None, "Evaluation should have failed"
    assert context.error.violations
