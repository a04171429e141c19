import json

from src.cli.main import build_parser, main
from src.cli.runner import ExitCode


def test_integrate_prints_json(capsys):
    """Test that the integrate command prints a JSON result"""
    code = main(["integrate", "x^2", "--tol", "1e-6"])

    assert code == ExitCode.OK
    data = json.loads(capsys.readouterr().out)
    assert abs(data["value"] - 1 / 3) < 1e-5


def test_parse_error_is_a_usage_error(capsys):
    """Test that a malformed expression exits with code 1"""
    code = main(["integrate", "x +"])

    assert code == ExitCode.USAGE
    assert "hkquad: error" in capsys.readouterr().err


def test_unknown_mode_is_a_usage_error(capsys):
    """Test that argument errors exit with code 1 instead of raising SystemExit"""
    assert main(["differentiate", "x"]) == ExitCode.USAGE


def test_non_integrable_exit_code(capsys):
    """Test that 1/x across zero exits with code 2"""
    code = main(["improper", "1/x", "--domain=-1,1", "--singular", "0", "--tol", "1e-6"])

    assert code == ExitCode.NONINTEGRABLE
    assert json.loads(capsys.readouterr().out)["status"] == "nonintegrable"


def test_check_subset_as_csv(capsys):
    """Test that --checks limits the suite and --format csv prints rows"""
    code = main(["check", "--checks", "henstock", "--format", "csv"])

    assert code == ExitCode.OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("check,entry,verdict")
    assert all(line.startswith("henstock,") for line in lines[1:])


def test_option_parsing():
    """Test that list-valued options are split on commas and semicolons"""
    args = build_parser().parse_args(
        ["integrate", "x", "--domain", "0,2", "--gaps", "(0.5,1);(1.25,1.5)", "--checks", "levi, fatou"]
    )

    assert args.domain == (0.0, 2.0)
    assert args.gaps == ((0.5, 1.0), (1.25, 1.5))
    assert args.checks == ("levi", "fatou")


def test_negative_domain_as_a_separate_argument(capsys):
    """Test that --domain -1,1 is read as a value, not as an option"""
    code = main(["improper", "1/x", "--domain", "-1,1", "--singular", "0", "--tol", "1e-6"])

    assert code == ExitCode.NONINTEGRABLE
    assert json.loads(capsys.readouterr().out)["status"] == "nonintegrable"


def test_negative_number_lists_parse():
    """Test that number lists starting with a minus sign reach their options"""
    args = build_parser().parse_args(
        ["infinite", "exp(-x^2)", "--cutoffs", "-2.5,3", "--domain", "-1e-1,-0.5,1,2"]
    )

    assert args.cutoffs == (-2.5, 3.0)
    assert args.domain == (-0.1, -0.5, 1.0, 2.0)


def test_default_suite_passes(capsys):
    """Test that the full default check suite exits 0 with every row passing or skipped"""
    code = main(["check", "--suite", "default"])

    assert code == ExitCode.OK
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert rows
    assert all(row["verdict"] in ("pass", "skipped") for row in rows)
    assert any(row["verdict"] == "pass" for row in rows)
