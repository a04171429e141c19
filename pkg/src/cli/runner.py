"""Dispatch of a validated run configuration to the library, with serialization."""

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from enum import IntEnum, StrEnum
from typing import Callable, Dict, List, Optional, Tuple

from ..core.brick import Brick
from ..core.division import BuilderConfig, ItemBudgetExceeded
from ..core.integrate import (
    IntegralResult,
    IntegrateConfig,
    PointIntegrand,
    RoundRecord,
    StieltjesWeight,
    denjoy_extension,
    fubini,
    integrate,
    integrate_improper,
    integrate_infinite,
    integrate_stieltjes,
)
from ..core.propcheck import (
    SUITES,
    CheckId,
    default_corpus,
    emit_report,
    report_failed,
    run_suite,
)
from ..core.variation import variation_bracket
from ..errors import (
    DepthExhaustedError,
    HKQuadError,
    NonFiniteIntegrandError,
    NonIntegrableError,
)
from ..expression.parser import Expression, parse_expression

logger = logging.getLogger(__name__)

RESULT_FIELDS = (
    "value",
    "err_estimate",
    "status",
    "refinements",
    "items",
    "evaluations",
    "elapsed_ms",
)


class Mode(StrEnum):
    INTEGRATE = "integrate"
    STIELTJES = "stieltjes"
    IMPROPER = "improper"
    INFINITE = "infinite"
    FUBINI = "fubini"
    VARIATION = "variation"
    CHECK = "check"


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1
    NONINTEGRABLE = 2
    EXHAUSTED = 3
    CHECK_FAILED = 4


class OutputFormat(StrEnum):
    JSON = "json"
    CSV = "csv"


@dataclass(frozen=True)
class RunConfig:
    mode: Mode
    domain: Tuple[float, ...] = (0.0, 1.0)
    tol: float = 1e-8
    max_refinements: int = 60
    max_depth: int = 1100
    seed: Optional[int] = None
    output_format: OutputFormat = OutputFormat.JSON
    singular: Tuple[float, ...] = ()
    weight: Optional[str] = None
    gaps: Tuple[Tuple[float, float], ...] = ()
    cutoffs: Optional[Tuple[float, float]] = None
    suite: str = "default"
    checks: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "output_format", OutputFormat(self.output_format))
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"Tolerance must be positive, got {self.tol}")
        if self.mode not in (Mode.INFINITE, Mode.CHECK):
            if len(self.domain) not in (2, 4):
                raise ValueError(f"Domain needs 2 or 4 bounds, got {len(self.domain)}")
            if not all(math.isfinite(b) for b in self.domain):
                raise ValueError(f"Domain bounds must be finite, got {self.domain}")
        if self.mode in (Mode.STIELTJES, Mode.IMPROPER) and len(self.domain) != 2:
            raise ValueError(f"Mode {self.mode} needs a 1D domain")
        if self.mode is Mode.FUBINI and len(self.domain) != 4:
            raise ValueError("Mode fubini needs a 2D domain a,b,c,d")
        if self.mode is Mode.STIELTJES and not self.weight:
            raise ValueError("Mode stieltjes needs --weight")
        if self.suite not in SUITES:
            raise ValueError(f"Unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        unknown = [c for c in self.checks if c not in set(CheckId)]
        if unknown:
            raise ValueError(f"Unknown checks {unknown}; choose from {[str(c) for c in CheckId]}")

    @property
    def dim(self) -> int:
        return len(self.domain) // 2 if self.mode is not Mode.INFINITE else 1

    def brick(self) -> Brick:
        return Brick.from_bounds(*zip(self.domain[::2], self.domain[1::2]))

    def integrate_config(
        self, on_round: Optional[Callable[[RoundRecord], None]] = None
    ) -> IntegrateConfig:
        return IntegrateConfig(
            max_refinements=self.max_refinements,
            builder=BuilderConfig(max_depth=self.max_depth, rng_seed=self.seed),
            on_round=on_round,
        )


@dataclass(frozen=True)
class RunOutcome:
    exit_code: ExitCode
    payload: Dict[str, object]
    rows: List[Dict[str, object]] = field(default_factory=list)

    def serialize(self, output_format: OutputFormat) -> str:
        if output_format is OutputFormat.JSON:
            return json.dumps(_jsonable(self.payload), indent=2)
        buffer = io.StringIO()
        if self.rows:
            columns = list(self.rows[0])
            writer = csv.DictWriter(buffer, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _csv_cell(row.get(k)) for k in columns})
        else:
            writer = csv.writer(buffer)
            writer.writerow(RESULT_FIELDS)
            writer.writerow([_csv_cell(self.payload.get(k)) for k in RESULT_FIELDS])
        return buffer.getvalue()


def finite_or_none(value: object) -> Optional[float]:
    """A finite number as float; None for anything else (NaN, ±inf, None)"""
    if isinstance(value, (int, float)) and math.isfinite(value):
        return float(value)
    return None


def _jsonable(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _csv_cell(value: object) -> object:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return ""
    if isinstance(value, (dict, list)):
        return json.dumps(_jsonable(value))
    return value


def _result_payload(result: IntegralResult, elapsed_ms: float) -> Dict[str, object]:
    payload = result.as_dict()
    payload["elapsed_ms"] = elapsed_ms
    return {k: payload[k] for k in RESULT_FIELDS}


def _failure_payload(status: str, elapsed_ms: float, detail: str) -> Dict[str, object]:
    return {
        "value": None,
        "err_estimate": None,
        "status": status,
        "refinements": 0,
        "items": 0,
        "evaluations": 0,
        "elapsed_ms": elapsed_ms,
        "detail": detail,
    }


def _exit_for(result: IntegralResult) -> ExitCode:
    return ExitCode.OK if result.converged else ExitCode.EXHAUSTED


def _integrand(cfg: RunConfig, expr: Expression, pinned: bool = True) -> PointIntegrand:
    singular = [(p,) for p in cfg.singular] if pinned and cfg.dim == 1 else []
    return PointIntegrand(expr.compile(), tuple(singular), vectorized=expr.compile_array())


def _run_integral(
    cfg: RunConfig,
    expr: Expression,
    on_round: Optional[Callable[[RoundRecord], None]],
) -> Tuple[IntegralResult, Dict[str, object]]:
    icfg = cfg.integrate_config(on_round)
    extra: Dict[str, object] = {}
    if cfg.mode is Mode.INTEGRATE:
        f = _integrand(cfg, expr)
        if cfg.gaps:
            result = denjoy_extension(f, cfg.brick(), cfg.gaps, cfg.tol, icfg)
        else:
            result = integrate(f, cfg.brick(), cfg.tol, icfg)
    elif cfg.mode is Mode.STIELTJES:
        weight = parse_expression(cfg.weight, 1).scalar()
        stieltjes_cfg = IntegrateConfig(
            max_refinements=icfg.max_refinements,
            builder=icfg.builder,
            breakpoints=tuple((p,) for p in cfg.singular),
            on_round=on_round,
        )
        f = _integrand(cfg, expr, pinned=False)
        result = integrate_stieltjes(f, StieltjesWeight(weight), cfg.brick(), cfg.tol, stieltjes_cfg)
    elif cfg.mode is Mode.IMPROPER:
        f = _integrand(cfg, expr)
        result = integrate_improper(f, cfg.brick(), cfg.singular, cfg.tol, icfg)
    elif cfg.mode is Mode.INFINITE:
        f = _integrand(cfg, expr)
        cutoffs = cfg.cutoffs or (-1.0, 1.0)
        result = integrate_infinite(f, cfg.tol, icfg, cutoffs=cutoffs)
    else:
        outer, inner = cfg.brick().split(1)
        f = PointIntegrand(expr.compile(), vectorized=expr.compile_array())
        fub = fubini(f, outer, inner, cfg.tol, icfg)
        result = fub.double
        extra = {
            "iterated_xy": fub.iterated_xy.value,
            "iterated_yx": fub.iterated_yx.value,
            "consistent": fub.consistent,
            "failing_tags": len(fub.failing_tags),
        }
        if all(r.converged for r in (fub.double, fub.iterated_xy, fub.iterated_yx)):
            extra["exit"] = ExitCode.OK if fub.consistent else ExitCode.NONINTEGRABLE
    return result, extra


def run(
    cfg: RunConfig,
    expr: Optional[Expression],
    on_round: Optional[Callable[[RoundRecord], None]] = None,
) -> RunOutcome:
    """Run one computation; errors are folded into the exit code and payload"""
    start = time.perf_counter()

    def elapsed() -> float:
        return round((time.perf_counter() - start) * 1000, 3)

    if cfg.mode is Mode.CHECK:
        suite = [c for c in SUITES[cfg.suite]() if not cfg.checks or c.id in cfg.checks]
        rows = run_suite(suite, default_corpus())
        report = emit_report(rows)
        report["elapsed_ms"] = elapsed()
        failed = report_failed(report)
        report["status"] = "failed" if failed else "passed"
        code = ExitCode.CHECK_FAILED if failed else ExitCode.OK
        return RunOutcome(code, report, report["rows"])
    if expr is None:
        return RunOutcome(ExitCode.USAGE, _failure_payload("usage", elapsed(), "missing expression"))

    try:
        if cfg.mode is Mode.VARIATION:
            f = _integrand(cfg, expr)
            estimate = variation_bracket(f, cfg.brick(), cfg.tol, cfg.integrate_config(on_round))
            payload = {
                **estimate.as_dict(),
                "status": "unbounded" if estimate.unbounded else "bounded",
                "elapsed_ms": elapsed(),
            }
            return RunOutcome(ExitCode.OK, payload)
        result, extra = _run_integral(cfg, expr, on_round)
    except (NonIntegrableError, NonFiniteIntegrandError) as exc:
        logger.info("Run failed: %s", exc)
        status = "non_finite" if isinstance(exc, NonFiniteIntegrandError) else "nonintegrable"
        return RunOutcome(ExitCode.NONINTEGRABLE, _failure_payload(status, elapsed(), str(exc)))
    except (DepthExhaustedError, ItemBudgetExceeded) as exc:
        logger.info("Run exhausted resources: %s", exc)
        return RunOutcome(
            ExitCode.EXHAUSTED, _failure_payload("depth_exhausted", elapsed(), str(exc))
        )
    except (HKQuadError, ValueError) as exc:
        return RunOutcome(ExitCode.USAGE, _failure_payload("usage", elapsed(), str(exc)))

    payload = _result_payload(result, elapsed())
    code = extra.pop("exit", _exit_for(result))
    payload.update(extra)
    return RunOutcome(code, payload)
