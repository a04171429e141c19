"""Convergence theorems and integral inequalities as numeric regression checks.

Each `TheoremCheck` runs over the corpus entries whose tags match its filter
and produces one `CheckRow` per entry. Verdicts come only from integrator
outputs; closed forms in the corpus are carried for reporting.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import HKQuadError
from ..expression.builtins import deriv_osc, deriv_osc_antiderivative
from ..settings import Settings
from .brick import Brick
from .integrate import (
    IntegrateConfig,
    PointIntegrand,
    by_parts,
    fubini,
    henstock_residual,
    integrate,
)

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


class CheckId(StrEnum):
    LEVI = "levi"
    FATOU = "fatou"
    DOMINATED = "dominated"
    HOLDER = "holder"
    MINKOWSKI = "minkowski"
    ADDITIVITY = "additivity"
    HENSTOCK = "henstock"
    FUBINI_CONSISTENCY = "fubini_consistency"
    BY_PARTS_IDENTITY = "by_parts_identity"


class Verdict(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"


@dataclass(frozen=True)
class TheoremCheck:
    id: CheckId
    corpus_filter: FrozenSet[str] = frozenset()
    tolerance: float = 1e-6
    samples: int = 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "id", CheckId(self.id))
        object.__setattr__(self, "corpus_filter", frozenset(self.corpus_filter))
        if not self.tolerance > 0:
            raise ValueError(f"Check tolerance must be positive, got {self.tolerance}")

    def selects(self, entry: "CorpusEntry") -> bool:
        return not self.corpus_filter or bool(self.corpus_filter & entry.tags)


@dataclass(frozen=True)
class CorpusEntry:
    """A named integrand, or a family f_r when `parameters` is set

    `build` takes the family parameter (or nothing). Optional fields supply
    what particular checks need: a pointwise limit, dominating bounds, a
    partner function and exponent, an antiderivative on sub-bricks, or the
    scalar pair and breakpoints of a Stieltjes integral.
    """

    name: str
    build: Callable[..., PointIntegrand]
    domain: Brick
    tags: FrozenSet[str]
    known_value: Optional[float] = None
    provenance: str = "closed-form"
    parameters: Tuple[float, ...] = ()
    limit: Optional[PointIntegrand] = None
    bounds: Optional[Tuple[PointIntegrand, PointIntegrand]] = None
    partner: Optional[PointIntegrand] = None
    exponent: float = 2.0
    antiderivative: Optional[Callable[[Brick], float]] = None
    pair: Optional[Tuple[Callable[[float], float], Callable[[float], float]]] = None
    breakpoints: Tuple[float, ...] = ()
    expect_identity: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))
        if self.provenance not in ("closed-form", "cited"):
            raise ValueError(f"Unknown provenance {self.provenance!r}")

    def members(self) -> List[PointIntegrand]:
        if self.parameters:
            return [self.build(r) for r in self.parameters]
        return [self.build()]


@dataclass(frozen=True)
class CheckRow:
    check: CheckId
    entry: str
    verdict: Verdict
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    margin: Optional[float] = None
    tolerance: float = 0.0
    note: str = ""
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            "check": str(self.check),
            "entry": self.entry,
            "verdict": str(self.verdict),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "note": self.note,
            "diagnostics": self.diagnostics,
        }


class _Skip(Exception):
    pass


def _value(f: PointIntegrand, domain: Brick, tol: float, cfg: IntegrateConfig) -> float:
    result = integrate(f, domain, tol, cfg)
    if not result.converged:
        raise HKQuadError(f"Integral over {domain} did not converge ({result.status})")
    return result.value


def _extrapolated(values: Sequence[float]) -> float:
    # families double their parameter and approach the limit like 1/r
    if len(values) < 2:
        return values[-1]
    return 2 * values[-1] - values[-2]


def _require(condition: object, message: str) -> None:
    if not condition:
        raise _Skip(message)


def _limit_swap(
    c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig, dominated: bool
) -> CheckRow:
    _require(entry.parameters and entry.limit is not None, "needs a family with a limit")
    members = entry.members()
    tol = c.tolerance / 8
    if dominated:
        _require(entry.bounds is not None, "needs dominating bounds")
        low, high = entry.bounds
        rng = np.random.default_rng(c.seed)
        points = entry.domain.lower + rng.random((64, entry.domain.dim)) * entry.domain.edges
        for p in map(tuple, points):
            for f in members:
                if not low(p) <= f(p) <= high(p):
                    raise _Skip(f"bounds do not dominate the family at {p}")
    values = [_value(f, entry.domain, tol, cfg) for f in members]
    estimate = _extrapolated(values)
    limit = _value(entry.limit, entry.domain, tol, cfg)
    margin = c.tolerance - abs(limit - estimate)
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= 0 else Verdict.FAIL,
        lhs=limit,
        rhs=estimate,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={"family_integrals": values},
    )


def _levi(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require("monotone" in entry.tags, "family is not monotone")
    return _limit_swap(c, entry, cfg, dominated=False)


def _dominated(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    return _limit_swap(c, entry, cfg, dominated=True)


def _fatou(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require(len(entry.parameters) >= 2, "needs a family")
    members = entry.members()
    tail = members[len(members) // 2 :]
    singular = tuple({p for f in tail for p in f.singular_points})
    liminf = PointIntegrand(lambda p: min(f(p) for f in tail), singular)
    tol = c.tolerance / 8
    lhs = _value(liminf, entry.domain, tol, cfg)
    rhs = min(_value(f, entry.domain, tol, cfg) for f in tail)
    margin = rhs + c.tolerance - lhs
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= 0 else Verdict.FAIL,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=c.tolerance,
    )


def _norm(f: PointIntegrand, p: float, domain: Brick, tol: float, cfg: IntegrateConfig) -> float:
    powered = PointIntegrand(lambda x: abs(f(x)) ** p, f.singular_points)
    return _value(powered, domain, tol, cfg) ** (1 / p)


def _holder(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require(entry.partner is not None, "needs a partner function")
    _require(entry.exponent > 1, "needs an exponent above 1")
    f, g = entry.build(), entry.partner
    p = entry.exponent
    q = p / (p - 1)
    tol = c.tolerance / 8
    product = PointIntegrand(
        lambda x: abs(f(x) * g(x)), f.singular_points + g.singular_points
    )
    lhs = _value(product, entry.domain, tol, cfg)
    rhs = _norm(f, p, entry.domain, tol, cfg) * _norm(g, q, entry.domain, tol, cfg)
    margin = rhs - lhs
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= -c.tolerance else Verdict.FAIL,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={"p": p, "q": q},
    )


def _minkowski(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require(entry.partner is not None, "needs a partner function")
    _require(entry.exponent >= 1, "needs an exponent of at least 1")
    f, g = entry.build(), entry.partner
    p = entry.exponent
    tol = c.tolerance / 8
    total = PointIntegrand(lambda x: f(x) + g(x), f.singular_points + g.singular_points)
    lhs = _norm(total, p, entry.domain, tol, cfg)
    rhs = _norm(f, p, entry.domain, tol, cfg) + _norm(g, p, entry.domain, tol, cfg)
    margin = rhs - lhs
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= -c.tolerance else Verdict.FAIL,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={"p": p},
    )


def _split(domain: Brick, at: float) -> Tuple[Brick, Brick]:
    left = Brick(domain.lower, (at,) + domain.upper[1:])
    right = Brick((at,) + domain.lower[1:], domain.upper)
    return left, right


def _additivity(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require(not entry.parameters and entry.partner is None, "needs a single integrand")
    f = entry.build()
    tol = c.tolerance / 8
    whole = integrate(f, entry.domain, tol, cfg)
    _require(whole.converged, f"whole-domain integral did not converge ({whole.status})")
    rng = np.random.default_rng(c.seed)
    lo, width = entry.domain.lower[0], entry.domain.edges[0]
    cuts = lo + width * (0.1 + 0.8 * rng.random(c.samples))
    margins = []
    defects = []
    for cut in cuts:
        left, right = (integrate(f, part, tol, cfg) for part in _split(entry.domain, float(cut)))
        if not (left.converged and right.converged):
            margins.append(-math.inf)
            continue
        defect = abs(whole.value - (left.value + right.value))
        allowed = whole.err_estimate + left.err_estimate + right.err_estimate + c.tolerance
        defects.append(defect)
        margins.append(allowed - defect)
    margin = min(margins)
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= 0 else Verdict.FAIL,
        lhs=whole.value,
        rhs=max(defects) if defects else None,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={"splits": [float(x) for x in cuts]},
    )


def _henstock(c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig) -> CheckRow:
    _require(entry.antiderivative is not None, "needs an antiderivative")
    f = entry.build()
    tol = c.tolerance / 8
    result = integrate(f, entry.domain, tol, cfg)
    _require(result.converged and result.division is not None, "run did not converge")
    residual = henstock_residual(f, entry.antiderivative, result.division)
    gap = result.err_estimate - tol / 2
    bound = 4 * gap + 4 * tol
    margin = bound - residual.abs_sum
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= 0 else Verdict.FAIL,
        lhs=residual.abs_sum,
        rhs=bound,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={"signed_max": residual.signed_max, "items": result.items},
    )


def _fubini_consistency(
    c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig
) -> CheckRow:
    _require(entry.domain.dim >= 2 and entry.domain.dim % 2 == 0, "needs a product brick")
    outer, inner = entry.domain.split(entry.domain.dim // 2)
    result = fubini(entry.build(), outer, inner, c.tolerance / 8, cfg, product_check=False)
    values = [result.double.value, result.iterated_xy.value, result.iterated_yx.value]
    spread = max(values) - min(values)
    converged = all(
        r.converged for r in (result.double, result.iterated_xy, result.iterated_yx)
    )
    margin = c.tolerance - spread if converged else -math.inf
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if margin >= 0 else Verdict.FAIL,
        lhs=result.double.value,
        rhs=result.iterated_xy.value,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={
            "iterated_yx": result.iterated_yx.value,
            "failing_tags": len(result.failing_tags),
        },
    )


def _by_parts_identity(
    c: TheoremCheck, entry: CorpusEntry, cfg: IntegrateConfig
) -> CheckRow:
    _require(entry.pair is not None, "needs a Stieltjes pair")
    _require("nonconvergent" not in entry.tags, "no closed form; known non-convergent")
    f, g = entry.pair
    tol = c.tolerance / 3
    stieltjes_cfg = IntegrateConfig(
        max_refinements=cfg.max_refinements,
        builder=cfg.builder,
        breakpoints=entry.breakpoints,
        max_items=cfg.max_items,
    )
    result = by_parts(f, g, entry.domain, tol, stieltjes_cfg)
    _require(not result.partial, "a Stieltjes integral did not converge")
    defect = abs(result.f_dg.value + result.g_df.value - result.boundary)
    if entry.expect_identity:
        margin = c.tolerance - defect
        passed = result.identity_holds
    else:
        # the defect is carried entirely by Σ|Δf Δg|
        margin = c.tolerance - abs(defect - result.residual)
        passed = not result.identity_holds and margin >= 0
    return CheckRow(
        c.id,
        entry.name,
        Verdict.PASS if passed else Verdict.FAIL,
        lhs=result.f_dg.value + result.g_df.value,
        rhs=result.boundary,
        margin=margin,
        tolerance=c.tolerance,
        diagnostics={
            "f_dg": result.f_dg.value,
            "g_df": result.g_df.value,
            "residual": result.residual,
        },
    )


_CHECKS: Dict[CheckId, Callable[[TheoremCheck, CorpusEntry, IntegrateConfig], CheckRow]] = {
    CheckId.LEVI: _levi,
    CheckId.FATOU: _fatou,
    CheckId.DOMINATED: _dominated,
    CheckId.HOLDER: _holder,
    CheckId.MINKOWSKI: _minkowski,
    CheckId.ADDITIVITY: _additivity,
    CheckId.HENSTOCK: _henstock,
    CheckId.FUBINI_CONSISTENCY: _fubini_consistency,
    CheckId.BY_PARTS_IDENTITY: _by_parts_identity,
}


def run_check(
    c: TheoremCheck,
    corpus: Sequence[CorpusEntry],
    cfg: Optional[IntegrateConfig] = None,
) -> List[CheckRow]:
    cfg = cfg or IntegrateConfig()
    rows = []
    for entry in corpus:
        if not c.selects(entry):
            continue
        try:
            row = _CHECKS[c.id](c, entry, cfg)
        except _Skip as exc:
            row = CheckRow(c.id, entry.name, Verdict.SKIPPED, tolerance=c.tolerance, note=str(exc))
        except HKQuadError as exc:
            row = CheckRow(c.id, entry.name, Verdict.FAIL, tolerance=c.tolerance, note=str(exc))
        logger.info("%s on %s: %s (margin %s)", c.id, entry.name, row.verdict, row.margin)
        rows.append(row)
    return rows


def run_suite(
    checks: Sequence[TheoremCheck],
    corpus: Sequence[CorpusEntry],
    cfg: Optional[IntegrateConfig] = None,
    threads: Optional[int] = None,
) -> List[CheckRow]:
    """Run checks concurrently; rows keep the order of `checks`"""
    workers = threads or Settings.from_env().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        batches = list(pool.map(lambda c: run_check(c, corpus, cfg), checks))
    return [row for batch in batches for row in batch]


def emit_report(rows: Sequence[CheckRow]) -> Dict[str, object]:
    order = {check: i for i, check in enumerate(CheckId)}
    ordered = sorted(rows, key=lambda r: (order[r.check], r.entry))
    counts = {v: sum(1 for r in ordered if r.verdict is v) for v in Verdict}
    return {
        "header": {
            "tool": "hkquad",
            "report_version": REPORT_VERSION,
            "columns": ["check", "entry", "verdict", "lhs", "rhs", "margin", "tolerance"],
        },
        "rows": [r.as_dict() for r in ordered],
        "summary": {
            "total": len(ordered),
            "passed": counts[Verdict.PASS],
            "failed": counts[Verdict.FAIL],
            "skipped": counts[Verdict.SKIPPED],
        },
    }


def report_failed(report: Dict[str, object]) -> bool:
    return report["summary"]["failed"] > 0


def _truncated_inverse_sqrt(r: float) -> PointIntegrand:
    cut = 1 / r**2
    return PointIntegrand.from_scalar(lambda x: r if x <= cut else x**-0.5)


def _alternating(j: float) -> PointIntegrand:
    if int(j) % 2 == 0:
        return PointIntegrand.from_scalar(lambda x: x)
    return PointIntegrand.from_scalar(lambda x: 1 - x)


def _indicator_left(x: float) -> float:
    return 1.0 if x <= 0 else 0.0


def _indicator_right(x: float) -> float:
    return 1.0 - _indicator_left(x)


def _interval_antiderivative(F: Callable[[float], float]) -> Callable[[Brick], float]:
    return lambda b: F(b.upper[0]) - F(b.lower[0])


def default_corpus() -> List[CorpusEntry]:
    unit = Brick.interval(0, 1)
    return [
        CorpusEntry(
            "square",
            lambda: PointIntegrand.from_scalar(lambda x: x * x),
            unit,
            {"smooth"},
            known_value=1 / 3,
            antiderivative=_interval_antiderivative(lambda x: x**3 / 3),
        ),
        CorpusEntry(
            "cosine",
            lambda: PointIntegrand.from_scalar(np.cos),
            unit,
            {"smooth"},
            known_value=math.sin(1),
            antiderivative=_interval_antiderivative(math.sin),
        ),
        CorpusEntry(
            "exponential",
            lambda: PointIntegrand.from_scalar(np.exp),
            unit,
            {"smooth"},
            known_value=math.e - 1,
            antiderivative=_interval_antiderivative(math.exp),
        ),
        CorpusEntry(
            "inverse_sqrt",
            lambda: PointIntegrand.from_scalar(lambda x: x**-0.5, [0.0]),
            unit,
            {"singular"},
            known_value=2.0,
            provenance="cited",
        ),
        CorpusEntry(
            "log",
            lambda: PointIntegrand.from_scalar(np.log, [0.0]),
            unit,
            {"singular"},
            known_value=-1.0,
        ),
        CorpusEntry(
            "inverse_cbrt",
            lambda: PointIntegrand.from_scalar(lambda x: x ** (-1 / 3), [0.0]),
            unit,
            {"singular"},
            known_value=1.5,
        ),
        CorpusEntry(
            "sine_wave",
            lambda: PointIntegrand.from_scalar(lambda x: np.sin(8 * math.pi * x)),
            unit,
            {"smooth"},
            known_value=0.0,
            antiderivative=_interval_antiderivative(
                lambda x: -math.cos(8 * math.pi * x) / (8 * math.pi)
            ),
        ),
        CorpusEntry(
            "gaussian",
            lambda: PointIntegrand.from_scalar(lambda x: np.exp(-x * x)),
            unit,
            {"smooth"},
            known_value=math.sqrt(math.pi) / 2 * math.erf(1),
            antiderivative=_interval_antiderivative(
                lambda x: math.sqrt(math.pi) / 2 * math.erf(x)
            ),
        ),
        CorpusEntry(
            "osc_quadratic",
            lambda: PointIntegrand.from_scalar(deriv_osc(2, 1), [0.0]),
            unit,
            {"oscillatory"},
            known_value=math.sin(1),
            antiderivative=_interval_antiderivative(deriv_osc_antiderivative(2, 1)),
        ),
        CorpusEntry(
            "osc_cubic",
            lambda: PointIntegrand.from_scalar(deriv_osc(3, 2), [0.0]),
            unit,
            {"oscillatory"},
            known_value=math.sin(1),
            antiderivative=_interval_antiderivative(deriv_osc_antiderivative(3, 2)),
        ),
        CorpusEntry(
            "truncated_inverse_sqrt",
            _truncated_inverse_sqrt,
            unit,
            {"family", "monotone"},
            known_value=2.0,
            provenance="cited",
            parameters=(8, 16, 32, 64),
            limit=PointIntegrand.from_scalar(lambda x: x**-0.5, [0.0]),
        ),
        CorpusEntry(
            "power_family",
            lambda j: PointIntegrand.from_scalar(lambda x: x ** (1 + 1 / j)),
            unit,
            {"family", "monotone", "dominated"},
            known_value=0.5,
            parameters=(8, 16, 32, 64),
            limit=PointIntegrand.from_scalar(lambda x: x),
            bounds=(
                PointIntegrand.from_scalar(lambda x: 0.0),
                PointIntegrand.from_scalar(lambda x: 1.0),
            ),
        ),
        CorpusEntry(
            "alternating",
            _alternating,
            unit,
            {"family"},
            known_value=0.25,
            parameters=(0, 1, 2, 3),
        ),
        CorpusEntry(
            "holder_pair",
            lambda: PointIntegrand.from_scalar(lambda x: x),
            unit,
            {"pair"},
            known_value=1 / 6,
            partner=PointIntegrand.from_scalar(lambda x: 1 - x),
        ),
        CorpusEntry(
            "holder_equality",
            lambda: PointIntegrand.from_scalar(lambda x: x),
            unit,
            {"pair", "equality"},
            known_value=1 / 3,
            partner=PointIntegrand.from_scalar(lambda x: x),
        ),
        CorpusEntry(
            "cubic_pair",
            lambda: PointIntegrand.from_scalar(lambda x: x * x),
            unit,
            {"pair"},
            known_value=1 / 3,
            partner=PointIntegrand.from_scalar(lambda x: 1.0),
            exponent=3.0,
        ),
        CorpusEntry(
            "bilinear",
            lambda: PointIntegrand.from_scalar(lambda x, y: x * y),
            Brick((0, 0), (1, 1)),
            {"product"},
            known_value=0.25,
        ),
        CorpusEntry(
            "power_pair",
            lambda: PointIntegrand.from_scalar(lambda x: x),
            unit,
            {"stieltjes"},
            known_value=2 / 3,
            pair=(lambda x: x, lambda x: x * x),
        ),
        CorpusEntry(
            "indicator_pair",
            lambda: PointIntegrand.from_scalar(_indicator_left),
            Brick.interval(-1, 1),
            {"stieltjes", "counterexample"},
            known_value=1.0,
            provenance="cited",
            pair=(_indicator_left, _indicator_right),
            breakpoints=(0.0,),
            expect_identity=False,
        ),
        CorpusEntry(
            "log_reciprocal",
            lambda: PointIntegrand.from_scalar(lambda x: 1 / (x * math.log(x)), [0.0]),
            Brick.interval(0, 0.5),
            {"stieltjes", "nonconvergent"},
            provenance="cited",
            pair=(lambda x: 1 / (x * math.log(x)) if x > 0 else 0.0, lambda x: x),
        ),
    ]


def default_suite() -> List[TheoremCheck]:
    return [
        TheoremCheck(CheckId.LEVI, {"monotone"}, tolerance=1e-3),
        TheoremCheck(CheckId.FATOU, {"family"}, tolerance=1e-6),
        TheoremCheck(CheckId.DOMINATED, {"dominated"}, tolerance=1e-3),
        TheoremCheck(CheckId.HOLDER, {"pair"}, tolerance=1e-6),
        TheoremCheck(CheckId.MINKOWSKI, {"pair"}, tolerance=1e-6),
        TheoremCheck(
            CheckId.ADDITIVITY, {"smooth", "singular", "oscillatory"}, tolerance=1e-5, samples=50
        ),
        TheoremCheck(CheckId.HENSTOCK, {"smooth"}, tolerance=1e-6),
        TheoremCheck(CheckId.FUBINI_CONSISTENCY, {"product"}, tolerance=1e-6),
        TheoremCheck(CheckId.BY_PARTS_IDENTITY, {"stieltjes"}, tolerance=1e-6),
    ]


SUITES: Dict[str, Callable[[], List[TheoremCheck]]] = {"default": default_suite}
