import argparse
import re
import sys
from typing import Optional, Sequence, Tuple

from ..errors import ExpressionError
from ..expression.parser import parse_expression
from ..settings import Settings, configure_logging
from .runner import ExitCode, Mode, OutputFormat, RunConfig, run

SERVE = "serve"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises UsageError; comma-separated number lists may start with a minus sign"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(
            r"^-\d*\.?\d+(?:[eE][-+]?\d+)?(?:,\s*[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)*$"
        )

    def error(self, message: str):
        raise UsageError(message)


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pair(text: str) -> Tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers a,b, got {text!r}")
    return values


def _names(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _gaps(text: str) -> Tuple[Tuple[float, float], ...]:
    gaps = []
    for chunk in text.split(";"):
        match = re.fullmatch(r"\s*\(?\s*([^,()]+)\s*,\s*([^,()]+)\s*\)?\s*", chunk)
        if match is None:
            raise argparse.ArgumentTypeError(f"expected (a,b);(c,d), got {text!r}")
        gaps.append(_pair(f"{match.group(1)},{match.group(2)}"))
    return tuple(gaps)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hkquad",
        description="Gauge (Henstock-Kurzweil) integration from the command line.",
    )
    parser.add_argument("mode", choices=[m.value for m in Mode] + [SERVE])
    parser.add_argument("expr", nargs="?", help="integrand in x (and y for 2D domains)")
    parser.add_argument("--domain", type=_floats, default=(0.0, 1.0), help="a,b or a,b,c,d")
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--singular", type=_floats, default=(), help="p1,p2,...")
    parser.add_argument("--weight", default=None, help="Stieltjes integrator g(x)")
    parser.add_argument("--gaps", type=_gaps, default=(), help="(a1,b1);(a2,b2)")
    parser.add_argument("--cutoffs", type=_pair, default=None, help="a,b")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default="json")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--max-depth", type=int, default=1100)
    parser.add_argument("--max-refinements", type=int, default=60)
    parser.add_argument("--suite", default="default")
    parser.add_argument("--checks", type=_names, default=(), help="subset of check ids, comma-separated")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    return parser


def _serve(host: str, port: int) -> int:
    import uvicorn

    uvicorn.run("src.main:app", host=host, port=port)
    return ExitCode.OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = Settings.from_env()
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level or settings.log_level)
        if args.mode == SERVE:
            return _serve(args.host, args.port)

        cfg = RunConfig(
            mode=args.mode,
            domain=args.domain,
            tol=args.tol if args.tol is not None else settings.default_tol,
            max_refinements=args.max_refinements,
            max_depth=args.max_depth,
            seed=args.seed,
            output_format=args.format,
            singular=args.singular,
            weight=args.weight,
            gaps=args.gaps,
            cutoffs=args.cutoffs,
            suite=args.suite,
            checks=args.checks,
        )
        expr = parse_expression(args.expr, cfg.dim) if args.expr is not None else None
    except (UsageError, ExpressionError, ValueError) as exc:
        print(f"hkquad: error: {exc}", file=sys.stderr)
        return ExitCode.USAGE

    outcome = run(cfg, expr)
    print(outcome.serialize(cfg.output_format))
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
