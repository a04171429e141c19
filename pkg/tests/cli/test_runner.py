import csv
import io
import json
import math

import pytest

from src.cli.runner import (
    ExitCode,
    Mode,
    OutputFormat,
    RunConfig,
    RunOutcome,
    finite_or_none,
    run,
)
from src.expression.parser import parse_expression


def test_integrate_square():
    """Test that integrating x^2 over [0, 1] exits cleanly with 1/3"""
    outcome = run(RunConfig(mode=Mode.INTEGRATE, tol=1e-8), parse_expression("x^2"))

    assert outcome.exit_code == ExitCode.OK
    assert outcome.payload["status"] == "converged"
    assert outcome.payload["value"] == pytest.approx(1 / 3, abs=1e-8)
    assert set(outcome.payload) >= {"err_estimate", "items", "evaluations", "elapsed_ms"}


def test_rounds_are_reported():
    """Test that the round callback sees every refinement"""
    records = []

    outcome = run(
        RunConfig(mode=Mode.INTEGRATE, tol=1e-6),
        parse_expression("exp(x)"),
        on_round=records.append,
    )

    assert outcome.exit_code == ExitCode.OK
    assert len(records) == outcome.payload["refinements"] + 1
    assert records[0].refinement == 0


def test_reciprocal_is_not_improperly_integrable():
    """Test that 1/x across zero exits as non-integrable"""
    cfg = RunConfig(mode=Mode.IMPROPER, domain=(-1.0, 1.0), tol=1e-6, singular=(0.0,))

    outcome = run(cfg, parse_expression("1/x"))

    assert outcome.exit_code == ExitCode.NONINTEGRABLE
    assert outcome.payload["status"] == "nonintegrable"
    assert outcome.payload["value"] is None
    assert outcome.payload["detail"]


def test_improper_inverse_square_root():
    """Test that x^(-1/2) over [0, 1] integrates to 2 with the singularity declared"""
    cfg = RunConfig(mode=Mode.IMPROPER, tol=1e-6, singular=(0.0,))

    outcome = run(cfg, parse_expression("x^(-0.5)"))

    assert outcome.exit_code == ExitCode.OK
    assert outcome.payload["value"] == pytest.approx(2.0, abs=1e-5)


def test_stieltjes_mode():
    """Test that the weight expression drives a Stieltjes integral"""
    cfg = RunConfig(mode=Mode.STIELTJES, tol=1e-6, weight="x^2")

    outcome = run(cfg, parse_expression("x"))

    assert outcome.exit_code == ExitCode.OK
    assert outcome.payload["value"] == pytest.approx(2 / 3, abs=1e-5)


def test_fubini_mode_reports_iterated_values():
    """Test that fubini mode adds both iterated integrals"""
    cfg = RunConfig(mode=Mode.FUBINI, domain=(0.0, 1.0, 0.0, 1.0), tol=1e-6)

    outcome = run(cfg, parse_expression("x*y", 2))

    assert outcome.exit_code == ExitCode.OK
    assert outcome.payload["consistent"] is True
    assert outcome.payload["iterated_xy"] == pytest.approx(0.25, abs=1e-6)


def test_check_mode_with_selected_checks():
    """Test that check mode runs only the requested checks"""
    cfg = RunConfig(mode=Mode.CHECK, checks=("henstock",))

    outcome = run(cfg, None)

    assert outcome.exit_code == ExitCode.OK
    assert outcome.payload["status"] == "passed"
    assert {row["check"] for row in outcome.rows} == {"henstock"}
    assert outcome.payload["summary"]["failed"] == 0


def test_check_rows_as_csv():
    """Test that check rows serialize with one CSV record each"""
    outcome = run(RunConfig(mode=Mode.CHECK, checks=("holder",)), None)

    records = list(csv.DictReader(io.StringIO(outcome.serialize(OutputFormat.CSV))))

    assert len(records) == len(outcome.rows)
    assert list(records[0])[:7] == ["check", "entry", "verdict", "lhs", "rhs", "margin", "tolerance"]


def test_result_as_csv():
    """Test that a single result serializes as a header and one record"""
    outcome = run(RunConfig(mode=Mode.INTEGRATE, tol=1e-6), parse_expression("x"))

    lines = outcome.serialize(OutputFormat.CSV).strip().splitlines()

    assert lines[0].split(",") == [
        "value",
        "err_estimate",
        "status",
        "refinements",
        "items",
        "evaluations",
        "elapsed_ms",
    ]
    assert len(lines) == 2


def test_json_writes_non_finite_as_null():
    """Test that infinities and NaN become JSON nulls"""
    outcome = RunOutcome(ExitCode.OK, {"lower": 1.0, "upper": math.inf, "rows": [math.nan]})

    data = json.loads(outcome.serialize(OutputFormat.JSON))

    assert data == {"lower": 1.0, "upper": None, "rows": [None]}


def test_missing_expression_is_a_usage_error():
    """Test that integration without an expression exits with the usage code"""
    outcome = run(RunConfig(mode=Mode.INTEGRATE), None)

    assert outcome.exit_code == ExitCode.USAGE


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mode": "integrate", "tol": 0.0},
        {"mode": "integrate", "domain": (0.0, 1.0, 2.0)},
        {"mode": "integrate", "domain": (0.0, math.inf)},
        {"mode": "stieltjes"},
        {"mode": "improper", "domain": (0.0, 1.0, 0.0, 1.0)},
        {"mode": "fubini"},
        {"mode": "check", "suite": "nightly"},
        {"mode": "check", "checks": ("no_such_check",)},
        {"mode": "nope"},
    ],
)
def test_invalid_run_configs(kwargs):
    """Test that inconsistent options are rejected before running"""
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


def test_finite_or_none():
    """Test that only finite numbers survive as floats"""
    assert finite_or_none(2) == 2.0
    assert finite_or_none(0.5) == 0.5
    assert finite_or_none(math.inf) is None
    assert finite_or_none(math.nan) is None
    assert finite_or_none(None) is None
    assert finite_or_none("1") is None
