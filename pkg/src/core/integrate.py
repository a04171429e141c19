"""Integral evaluation over gauge-fine divisions.

Every value produced here is a Riemann sum over a division that is fine for
an explicit gauge. `integrate` refines a dyadic leaf mesh where bisection
changes the sum most and stops once consecutive sums agree; the final mesh
is fine for the gauge it induces. The other entry points (Stieltjes, Cauchy
and Denjoy extensions, infinite range, Fubini) are assembled from it.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property
from typing import (
    Callable,
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from ..errors import (
    DepthExhaustedError,
    DivergentTailError,
    DomainMismatchError,
    HKQuadError,
    NonFiniteIntegrandError,
    NonIntegrableError,
)
from .brick import Brick, Point, TaggedDivision, volume
from .division import (
    BuilderConfig,
    InfiniteDivision,
    TagRule,
    cousin_bisect,
    product_division,
    product_gauge,
)
from .gauge import Gauge, MeshGauge, cauchy_ladder_gauge, min_combine
from .mesh import GOLDEN, LeafMesh, MeshBuilder, TagPlan, balance, volumes

logger = logging.getLogger(__name__)

IntervalIntegrand = Callable[[Point, Brick], float]
ArrayEvaluator = Callable[[Tuple[np.ndarray, ...]], np.ndarray]


class Status(StrEnum):
    CONVERGED = "converged"
    DEPTH_EXHAUSTED = "depth_exhausted"
    MAX_REFINEMENTS = "max_refinements"
    OSCILLATING = "oscillating"


class Side(StrEnum):
    """Endpoint at which a Cauchy ladder accumulates"""

    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class PointIntegrand:
    """f(P), forced to 0 at the declared singular points

    Evaluation errors (division by zero, domain errors) surface as NaN so that
    `riemann_sum` can report the offending tag. `batch` first offers `fn` (or
    `vectorized`) a tuple of coordinate arrays and falls back to one call per
    row when that raises.
    """

    fn: Callable[[Point], float]
    singular_points: Tuple[Point, ...] = ()
    vectorized: Optional[ArrayEvaluator] = field(default=None, compare=False, repr=False)
    _pinned: frozenset = field(init=False, repr=False, compare=False)
    _scalar_only: bool = field(init=False, default=False, repr=False, compare=False)

    def __post_init__(self):
        points = tuple(tuple(float(c) for c in p) for p in self.singular_points)
        object.__setattr__(self, "singular_points", points)
        object.__setattr__(self, "_pinned", frozenset(points))

    @classmethod
    def from_scalar(
        cls, fn: Callable[..., float], singular_points: Sequence = ()
    ) -> "PointIntegrand":
        """Wrap fn(x1, ..., xn); bare numbers in singular_points mean 1D points"""
        points = tuple(
            (p,) if isinstance(p, (int, float)) else tuple(p) for p in singular_points
        )
        return cls(lambda p: fn(*p), points)

    def __call__(self, p: Point) -> float:
        if p in self._pinned:
            return 0.0
        try:
            return float(self.fn(p))
        except (ArithmeticError, ValueError):
            return math.nan

    def batch(self, points: np.ndarray) -> np.ndarray:
        """f at every row of an (n, dim) array"""
        points = np.asarray(points, dtype=float)
        n = len(points)
        if not self._scalar_only:
            fn = self.vectorized or self.fn
            try:
                with np.errstate(all="ignore"):
                    raw = np.asarray(fn(tuple(points.T)), dtype=float)
                values = np.array(np.broadcast_to(raw, (n,)))
            except Exception as exc:
                logger.debug("Integrand is scalar-only (%s: %s)", type(exc).__name__, exc)
                object.__setattr__(self, "_scalar_only", True)
            else:
                for s in self._pinned:
                    values[np.all(points == s, axis=1)] = 0.0
                return values
        return np.fromiter((self(tuple(row)) for row in points.tolist()), float, count=n)

    def as_interval(self) -> IntervalIntegrand:
        return lambda tag, brick: self(tag) * volume(brick)

    def absolute(self) -> "PointIntegrand":
        return PointIntegrand(
            lambda p: abs(self(p)),
            self.singular_points,
            vectorized=lambda cols: np.abs(self.batch(np.column_stack(cols))),
        )

    def section(self, head: Point, head_first: bool = True) -> "PointIntegrand":
        """Restriction with the leading (or trailing) coordinates fixed to `head`"""
        k = len(head)

        def stacked(cols: Tuple[np.ndarray, ...]) -> np.ndarray:
            fixed = [np.full(len(cols[0]), c) for c in head]
            columns = fixed + list(cols) if head_first else list(cols) + fixed
            return self.batch(np.column_stack(columns))

        if head_first:
            singular = tuple(s[k:] for s in self.singular_points if s[:k] == head)
            return PointIntegrand(lambda y: self(head + y), singular, vectorized=stacked)
        singular = tuple(s[:-k] for s in self.singular_points if s[-k:] == head)
        return PointIntegrand(lambda x: self(x + head), singular, vectorized=stacked)


@dataclass(frozen=True)
class StieltjesWeight:
    g: Callable[[float], float]

    def increment(self, brick: Brick) -> float:
        return self.g(brick.upper[0]) - self.g(brick.lower[0])

    def increments(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """g(v) - g(u) for arrays of interval ends"""
        try:
            with np.errstate(all="ignore"):
                raw = np.asarray(self.g(upper) - self.g(lower), dtype=float)
            return np.array(np.broadcast_to(raw, lower.shape))
        except Exception:
            return np.fromiter(
                (self.g(v) - self.g(u) for u, v in zip(lower.tolist(), upper.tolist())),
                float,
                count=len(lower),
            )


@dataclass(frozen=True)
class RoundRecord:
    refinement: int
    value: float
    gap: Optional[float]
    items: int
    evaluations: int
    marked: int


@dataclass(frozen=True)
class IntegrateConfig:
    max_refinements: int = 60
    builder: BuilderConfig = BuilderConfig()
    breakpoints: Tuple[Point, ...] = ()
    max_items: int = 2**22
    mark_fraction: float = 0.9
    initial_fraction: float = 0.25
    gauge: Optional[Gauge] = None
    on_round: Optional[Callable[[RoundRecord], None]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_refinements < 2:
            raise ValueError(
                f"max_refinements must be at least 2, got {self.max_refinements}"
            )
        if not 0 < self.mark_fraction < 1:
            raise ValueError(f"mark_fraction must lie in (0, 1), got {self.mark_fraction}")
        if not 0 < self.initial_fraction <= 1:
            raise ValueError(
                f"initial_fraction must lie in (0, 1], got {self.initial_fraction}"
            )
        if self.max_items < 1:
            raise ValueError(f"max_items must be positive, got {self.max_items}")
        points = tuple(
            (float(p),) if isinstance(p, (int, float)) else tuple(float(c) for c in p)
            for p in self.breakpoints
        )
        object.__setattr__(self, "breakpoints", points)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    err_estimate: float
    refinements: int
    items: int
    evaluations: int
    status: Status
    history: Tuple[float, ...] = ()
    bracket: Tuple[float, float] = (math.nan, math.nan)
    detail: str = ""
    extras: Mapping[str, float] = field(default_factory=dict)
    mesh: Optional[LeafMesh] = field(default=None, repr=False, compare=False)
    gauge: Optional[Gauge] = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @cached_property
    def division(self) -> Optional[TaggedDivision]:
        """The final mesh as a tagged division"""
        return self.mesh.division() if self.mesh is not None else None

    def as_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "err_estimate": self.err_estimate,
            "status": str(self.status),
            "refinements": self.refinements,
            "items": self.items,
            "evaluations": self.evaluations,
        }


class HenstockResidual(NamedTuple):
    signed_max: float
    abs_sum: float


@dataclass(frozen=True)
class ByPartsResult:
    f_dg: IntegralResult
    g_df: IntegralResult
    boundary: float
    residual: float
    identity_holds: bool
    partial: bool


@dataclass(frozen=True)
class FubiniResult:
    double: IntegralResult
    iterated_xy: IntegralResult
    iterated_yx: IntegralResult
    failing_tags: Tuple[Point, ...] = ()
    product_sum: Optional[float] = None
    consistent: bool = False


class _Counted:
    """Counts the points an integrand is evaluated at"""

    def __init__(self, f: PointIntegrand):
        self.f = f
        self.calls = 0

    def batch(self, points: np.ndarray) -> np.ndarray:
        self.calls += len(points)
        return self.f.batch(points)


def riemann_sum(h: IntervalIntegrand, d: TaggedDivision) -> float:
    """Compensated sum of h(tag, brick) over the division"""
    values = []
    for tb in d:
        value = h(tb.tag, tb.brick)
        if not math.isfinite(value):
            raise NonFiniteIntegrandError(tb.tag, tb.brick, value)
        values.append(value)
    return math.fsum(values)


def riemann_sum_infinite(h: IntervalIntegrand, d: InfiniteDivision) -> float:
    """Sum over an infinite-range division; the two rays contribute nothing"""
    return riemann_sum(h, d.middle)


def henstock_residual(
    f: Callable[[Point], float], F: Callable[[Brick], float], d: TaggedDivision
) -> HenstockResidual:
    """Largest one-signed partial sum and total of |f(P)μ(J) - F(J)|"""
    terms = [f(tb.tag) * volume(tb.brick) - F(tb.brick) for tb in d]
    positive = math.fsum(t for t in terms if t > 0)
    negative = math.fsum(t for t in terms if t < 0)
    return HenstockResidual(max(positive, -negative), math.fsum(abs(t) for t in terms))


def _check_tolerance(tol: float) -> None:
    if not (tol > 0 and math.isfinite(tol)):
        raise ValueError(f"Tolerance must be positive, got {tol}")


def _forced_points(domain: Brick, points: Sequence[Point]) -> Tuple[Point, ...]:
    unique = dict.fromkeys(p for p in points if len(p) == domain.dim and domain.contains(p))
    return tuple(unique)


def _golden_rule(
    f: _Counted, measure: Callable[[np.ndarray, np.ndarray], np.ndarray]
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Symmetric two-point sum at c ± GOLDEN·(edges/2) over each leaf"""

    def rule(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        center = (lower + upper) / 2
        offset = GOLDEN * (upper - lower) / 2
        both = f.batch(np.concatenate([center - offset, center + offset]))
        n = len(lower)
        return 0.5 * (both[:n] + both[n:]) * measure(lower, upper)

    return rule


def _initial_level(fraction: float) -> int:
    """Fewest bisections leaving every leaf's half-diameter below fraction·diam"""
    level = 0
    while 2.0**-level / 2 >= fraction:
        level += 1
    return level


def _honour(builder: MeshBuilder, mesh: LeafMesh, gauge: Optional[Gauge]) -> LeafMesh:
    """Split leaves until every leaf is fine for `gauge` at its tag"""
    if gauge is None:
        return mesh
    while True:
        tags = mesh.tags
        reach = np.hypot.reduce(np.maximum(tags - mesh.lower, mesh.upper - tags), axis=1)
        deltas = np.fromiter((gauge(tuple(t)) for t in tags.tolist()), float, count=len(mesh))
        coarse = ~(reach < deltas)
        if not coarse.any():
            return mesh
        if mesh.dim == 1:
            coarse = balance(mesh.level, coarse)
        mesh = builder.refine(mesh, coarse)


def _drive(
    builder: MeshBuilder,
    domain: Brick,
    tol: float,
    cfg: IntegrateConfig,
    counter: _Counted,
) -> IntegralResult:
    _check_tolerance(tol)
    width = 2**domain.dim
    sums: List[float] = []
    gaps: List[float] = []
    status: Optional[Status] = None
    detail = ""
    mesh = builder.uniform(domain, _initial_level(cfg.initial_fraction))
    mesh = _honour(builder, mesh, cfg.gauge)
    for m in range(cfg.max_refinements + 1):
        bad = mesh.first_non_finite()
        if bad is not None:
            item = mesh.item(bad)
            raise NonFiniteIntegrandError(item.tag, item.brick, float(mesh.terms[bad]))
        sums.append(math.fsum(mesh.terms.tolist()))
        gap = abs(sums[-1] - sums[-2]) if len(sums) > 1 else None
        if gap is not None:
            gaps.append(gap)
        drift = float(np.sum(mesh.corrections))
        settled = (
            len(sums) >= 3
            and abs(sums[-1] - sums[-2]) < tol / 2
            and abs(sums[-1] - sums[-3]) < tol / 2
            and abs(drift) < tol / 4
        )
        final = settled or m == cfg.max_refinements
        marks = np.zeros(len(mesh), dtype=bool) if final else mesh.marks(cfg.mark_fraction)
        record = RoundRecord(m, sums[-1], gap, len(mesh), counter.calls, int(marks.sum()))
        logger.debug("Round %d over %s: %r", m, domain, record)
        if cfg.on_round is not None:
            cfg.on_round(record)

        if settled:
            status = Status.CONVERGED
            break
        if final or not marks.any():
            continue
        if len(mesh) + int(marks.sum()) * (width - 1) > cfg.max_items:
            status, detail = Status.MAX_REFINEMENTS, "item budget"
            logger.warning(
                "Integration over %s stopped: splitting %d of %d leaves exceeds %d items",
                domain,
                int(marks.sum()),
                len(mesh),
                cfg.max_items,
            )
            break
        try:
            mesh = _honour(builder, builder.refine(mesh, marks), cfg.gauge)
        except DepthExhaustedError as exc:
            status, detail = Status.DEPTH_EXHAUSTED, str(exc)
            logger.warning("Integration over %s stopped: %s", domain, exc)
            break

    if status is None:
        tail = gaps[-3:]
        decreasing = len(tail) == 3 and tail[0] >= tail[1] >= tail[2]
        status = Status.MAX_REFINEMENTS if decreasing else Status.OSCILLATING
        logger.warning(
            "No convergence over %s after %d rounds (%s)", domain, len(sums), status
        )

    gauge = MeshGauge.from_mesh(mesh).as_gauge()
    if cfg.gauge is not None:
        gauge = min_combine(gauge, cfg.gauge)
    last_gap = gaps[-1] if gaps else math.inf
    recent = sums[-3:]
    return IntegralResult(
        value=sums[-1],
        err_estimate=last_gap + tol / 2,
        refinements=len(sums) - 1,
        items=len(mesh),
        evaluations=counter.calls,
        status=status,
        history=tuple(sums),
        bracket=(min(recent), max(recent)),
        detail=detail,
        mesh=mesh,
        gauge=gauge,
    )


def _interior_singularities(f: PointIntegrand, domain: Brick) -> List[float]:
    a, b = domain.lower[0], domain.upper[0]
    return sorted({p[0] for p in f.singular_points if len(p) == 1 and a <= p[0] <= b})


def integrate(
    f: PointIntegrand,
    domain: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
) -> IntegralResult:
    """Gauge integral of f over a brick by Cauchy stabilisation of Riemann sums

    Round 0 tags the centers of a uniform dyadic mesh; each later round splits
    the leaves carrying the bulk of the bisection scores. The run stops when
    s_m is within tol/2 of both s_{m-1} and s_{m-2} and splitting every leaf
    would move the sum by less than tol/4. One-dimensional integrands with
    singular points in the domain are handed to `integrate_improper`.
    """
    _check_tolerance(tol)
    cfg = cfg or IntegrateConfig()
    if domain.dim == 1:
        singular = _interior_singularities(f, domain)
        if singular:
            logger.debug("Singular points %s in %s; integrating piecewise", singular, domain)
            return integrate_improper(f, domain, singular, tol, cfg)
    counted = _Counted(f)
    forced = _forced_points(domain, f.singular_points + cfg.breakpoints)
    builder = MeshBuilder(
        lambda tags, lower, upper: counted.batch(tags) * volumes(lower, upper),
        TagPlan(forced),
        _golden_rule(counted, volumes),
        cfg.builder.max_depth,
    )
    return _drive(builder, domain, tol, cfg, counted)


def integrate_stieltjes(
    f: PointIntegrand,
    w: StieltjesWeight,
    domain: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
) -> IntegralResult:
    """∫ f dg from sums f(P)(g(v) - g(u)), tags restricted to interval ends"""
    if domain.dim != 1:
        raise DomainMismatchError(f"Stieltjes integration needs a 1D brick, got {domain}")
    cfg = cfg or IntegrateConfig()
    counted = _Counted(f)

    def increments(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        return w.increments(lower[:, 0], upper[:, 0])

    forced = _forced_points(domain, f.singular_points + cfg.breakpoints)
    builder = MeshBuilder(
        lambda tags, lower, upper: counted.batch(tags) * increments(lower, upper),
        TagPlan(forced, endpoint=True),
        _golden_rule(counted, increments),
        cfg.builder.max_depth,
    )
    return _drive(builder, domain, tol, cfg, counted)


def by_parts(
    f: Callable[[float], float],
    g: Callable[[float], float],
    domain: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
) -> ByPartsResult:
    """Both Stieltjes integrals, the boundary term and the residual Σ|Δf Δg|"""
    cfg = cfg or IntegrateConfig()
    f_dg = integrate_stieltjes(
        PointIntegrand.from_scalar(f), StieltjesWeight(g), domain, tol, cfg
    )
    g_df = integrate_stieltjes(
        PointIntegrand.from_scalar(g), StieltjesWeight(f), domain, tol, cfg
    )
    a, b = domain.lower[0], domain.upper[0]
    boundary = f(b) * g(b) - f(a) * g(a)
    finest = max(
        (r for r in (f_dg, g_df) if r.mesh is not None),
        key=lambda r: len(r.mesh),
        default=None,
    )
    residual = math.nan
    if finest is not None:
        lower = finest.mesh.lower[:, 0]
        upper = finest.mesh.upper[:, 0]
        df = StieltjesWeight(f).increments(lower, upper)
        dg = StieltjesWeight(g).increments(lower, upper)
        residual = math.fsum(np.abs(df * dg).tolist())
    partial = not (f_dg.converged and g_df.converged)
    holds = not partial and abs(f_dg.value + g_df.value - boundary) <= 3 * tol
    return ByPartsResult(f_dg, g_df, boundary, residual, holds, partial)


def _combine(
    results: Sequence[IntegralResult], tol: float, **extras: float
) -> IntegralResult:
    statuses = [r.status for r in results]
    status = next((s for s in statuses if s is not Status.CONVERGED), Status.CONVERGED)
    value = math.fsum(r.value for r in results)
    return IntegralResult(
        value=value,
        err_estimate=math.fsum(r.err_estimate for r in results),
        refinements=sum(r.refinements for r in results),
        items=sum(r.items for r in results),
        evaluations=sum(r.evaluations for r in results),
        status=status,
        history=(value,),
        bracket=(value, value),
        extras=dict(extras),
    )


def _ladder_point(a: float, c: float, j: int, side: Side) -> float:
    length = c - a
    return c - length * 2.0**-j if side is Side.RIGHT else a + length * 2.0**-j


def cauchy_extension(
    f: PointIntegrand,
    a: float,
    c: float,
    side: Side,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
    max_panels: int = 64,
    certify: bool = False,
) -> IntegralResult:
    """∫ over [a, c] as the limit of integrals over a dyadic ladder towards `side`

    Panel j spans consecutive ladder points b_j = c - (c-a)2**-j (mirrored for
    side=left). Panels share 3·tol/4: each gets a quarter of what is left,
    never less than tol/(4·max_panels). From the third panel on, the ratio of
    consecutive panel pairs predicts the geometric tail; summation stops once
    that tail is below tol/4.

    The integral is reported not to exist when the ratio stays at or above 1
    for three panels. It is also rejected, as too slow to certify, when for
    three panels the predicted tail would need more than `max_panels` panels
    to fall below tol/4; x**-0.999 towards 0 is refused this way.
    """
    if not a < c:
        raise DomainMismatchError(f"Cauchy extension needs a < c, got [{a}, {c}]")
    _check_tolerance(tol)
    side = Side(side)
    cfg = cfg or IntegrateConfig()
    towards = "c" if side is Side.RIGHT else "a"
    panels: List[IntegralResult] = []
    values: List[float] = []
    remaining = 3 * tol / 4
    floor = tol / (4 * max_panels)
    slow = 0
    tail = math.inf
    for j in range(1, max_panels + 1):
        lo, hi = sorted((_ladder_point(a, c, j - 1, side), _ladder_point(a, c, j, side)))
        result = integrate(f, Brick.interval(lo, hi), max(remaining / 4, floor), cfg)
        if not result.converged:
            raise NonIntegrableError(
                f"Panel [{lo}, {hi}] of the ladder did not converge ({result.status})",
                np.cumsum(values).tolist(),
            )
        remaining = max(remaining - result.err_estimate, 0.0)
        panels.append(result)
        values.append(result.value)
        if j < 3:
            continue
        before = abs(values[-2]) + abs(values[-3])
        after = abs(values[-1]) + abs(values[-2])
        ratio = after / before if before > 0 else (0.0 if after == 0 else math.inf)
        tail = abs(values[-1]) * ratio / (1 - ratio) if ratio < 1 else math.inf
        logger.debug("Ladder panel %d: %r, ratio %.6g, tail %r", j, values[-1], ratio, tail)
        if tail < tol / 4:
            break
        needed = j + math.log(tol / (4 * tail)) / math.log(ratio) if 0 < ratio < 1 else math.inf
        slow = slow + 1 if needed > max_panels else 0
        if slow >= 3:
            if ratio >= 1:
                reason = f"stopped shrinking (last ratio {ratio:.6g}); the integral does not exist"
            else:
                reason = (
                    f"shrink too slowly (last ratio {ratio:.6g}) to certify within "
                    f"{max_panels} panels"
                )
            raise NonIntegrableError(
                f"Ladder panels over [{a}, {c}] towards {towards} {reason}",
                np.cumsum(values).tolist(),
            )
    else:
        raise NonIntegrableError(
            f"Partial sums over [{a}, {c}] not Cauchy within {max_panels} panels",
            np.cumsum(values).tolist(),
        )

    combined = _combine(panels, tol, panels=len(panels), tail_estimate=tail)
    combined = replace(combined, err_estimate=combined.err_estimate + tail)
    if certify:
        certificate = _ladder_certificate(f, a, c, side, panels, cfg)
        combined = replace(combined, extras={**combined.extras, "ladder_sum": certificate})
    return combined


def _ladder_certificate(
    f: PointIntegrand,
    a: float,
    c: float,
    side: Side,
    panels: Sequence[IntegralResult],
    cfg: IntegrateConfig,
) -> float:
    """Riemann sum of f over one division of [a, c] fine for the glued ladder gauge"""
    limit = c if side is Side.RIGHT else a
    tail_delta = abs(limit - _ladder_point(a, c, len(panels), side))
    gauge = cauchy_ladder_gauge(
        a,
        c,
        [p.gauge for p in panels],
        tail_delta,
        reverse=side is Side.LEFT,
    )
    ladder = [(_ladder_point(a, c, j, side),) for j in range(len(panels) + 1)] + [(limit,)]
    division = cousin_bisect(
        Brick.interval(a, c),
        gauge,
        replace(cfg.builder, tag_rule=TagRule.SUPPLIED, max_items=cfg.max_items),
        hints=lambda brick: ladder,
    )
    pinned = PointIntegrand(f, f.singular_points + ((limit,),))
    return riemann_sum(pinned.as_interval(), division)


def _open_interval_integral(
    f: PointIntegrand,
    lo: float,
    hi: float,
    singular_lo: bool,
    singular_hi: bool,
    tol: float,
    cfg: IntegrateConfig,
) -> IntegralResult:
    if singular_lo and singular_hi:
        mid = 0.5 * (lo + hi)
        return _combine(
            [
                cauchy_extension(f, lo, mid, Side.LEFT, tol / 2, cfg),
                cauchy_extension(f, mid, hi, Side.RIGHT, tol / 2, cfg),
            ],
            tol,
        )
    if singular_lo:
        return cauchy_extension(f, lo, hi, Side.LEFT, tol, cfg)
    if singular_hi:
        return cauchy_extension(f, lo, hi, Side.RIGHT, tol, cfg)
    return integrate(f, Brick.interval(lo, hi), tol, cfg)


def integrate_symmetric_check(
    f: PointIntegrand,
    interior_singularity: float,
    domain: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
) -> IntegralResult:
    """Both one-sided extensions at an interior point, each required to exist

    Symmetric cancellation is never used, so 1/x on [-1, 1] is rejected.
    """
    a, b = domain.lower[0], domain.upper[0]
    s = float(interior_singularity)
    if domain.dim != 1 or not a < s < b:
        raise DomainMismatchError(f"Singularity {s} must lie strictly inside {domain}")
    cfg = cfg or IntegrateConfig()
    left = cauchy_extension(f, a, s, Side.RIGHT, tol / 2, cfg)
    right = cauchy_extension(f, s, b, Side.LEFT, tol / 2, cfg)
    return _combine([left, right], tol, left=left.value, right=right.value)


def integrate_improper(
    f: PointIntegrand,
    domain: Brick,
    points: Sequence[float],
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
) -> IntegralResult:
    """Split at the singular points and sum independent one-sided extensions"""
    if domain.dim != 1:
        raise DomainMismatchError(f"Improper integration needs a 1D brick, got {domain}")
    cfg = cfg or IntegrateConfig()
    a, b = domain.lower[0], domain.upper[0]
    cuts = sorted({float(p) for p in points if a <= p <= b})
    nodes = sorted({a, b, *cuts})
    pieces = list(zip(nodes, nodes[1:]))
    share = tol / len(pieces)
    results = [
        _open_interval_integral(f, lo, hi, lo in cuts, hi in cuts, share, cfg)
        for lo, hi in pieces
    ]
    return _combine(results, tol, pieces=len(pieces))


def denjoy_extension(
    f: PointIntegrand,
    domain: Brick,
    gaps: Sequence[Tuple[float, float]],
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
    off_gap_result: Optional[IntegralResult] = None,
    gap_results: Optional[Sequence[IntegralResult]] = None,
) -> IntegralResult:
    """Integral off finitely many open gaps plus the integral over each gap

    With finitely many gaps the tail condition on the gap integrals holds
    vacuously; component results may be supplied or are computed here.
    """
    if domain.dim != 1:
        raise DomainMismatchError(f"Denjoy extension needs a 1D brick, got {domain}")
    cfg = cfg or IntegrateConfig()
    b, c = domain.lower[0], domain.upper[0]
    ordered = sorted((float(lo), float(hi)) for lo, hi in gaps)
    for lo, hi in ordered:
        if not b <= lo < hi <= c:
            raise DomainMismatchError(f"Gap ({lo}, {hi}) is not inside {domain}")
    for (_, hi1), (lo2, _) in zip(ordered, ordered[1:]):
        if lo2 < hi1:
            raise DomainMismatchError("Gaps must be disjoint")
    if gap_results is not None and len(gap_results) != len(ordered):
        raise ValueError(f"Expected {len(ordered)} gap results, got {len(gap_results)}")

    pieces = len(ordered) + 1
    share = tol / (2 * pieces)
    if off_gap_result is None:
        edges = [b] + [x for gap in ordered for x in gap] + [c]
        closed = [(lo, hi) for lo, hi in zip(edges[::2], edges[1::2]) if lo < hi]
        off_parts = [integrate(f, Brick.interval(lo, hi), share, cfg) for lo, hi in closed]
        off_gap_result = _combine(off_parts, tol) if off_parts else _combine([], tol)
    if gap_results is None:
        gap_results = [
            _open_interval_integral(f, lo, hi, True, True, share, cfg) for lo, hi in ordered
        ]
    for result in [off_gap_result, *gap_results]:
        if not result.converged:
            raise NonIntegrableError(f"A Denjoy component did not converge ({result.status})")
    return _combine(
        [off_gap_result, *gap_results],
        tol,
        off_gaps=off_gap_result.value,
        gaps=len(ordered),
        tail_condition_vacuous=1.0,
    )


def integrate_infinite(
    f: PointIntegrand,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
    cutoffs: Tuple[float, float] = (-1.0, 1.0),
    max_doublings: int = 40,
) -> IntegralResult:
    """∫ over the real line with the two cutoffs pushed out independently

    The core [a, b] gets tol/4. Each side adds panels out to b + 2**k - 1
    (mirrored on the left) from a budget of 3·tol/8, a quarter of what is left
    per panel, until two consecutive panels are below tol/4.
    """
    a, b = cutoffs
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainMismatchError(f"Cutoffs must be finite with a < b, got {cutoffs}")
    _check_tolerance(tol)
    cfg = cfg or IntegrateConfig()
    core = integrate(f, Brick.interval(a, b), tol / 4, cfg)
    results = [core]
    reach = {}
    floor = tol / (8 * max_doublings)
    for sign in (1, -1):
        anchor = b if sign > 0 else a
        remaining = 3 * tol / 8
        quiet = 0
        increments = []
        for k in range(1, max_doublings + 1):
            near = anchor + sign * (2.0 ** (k - 1) - 1)
            far = anchor + sign * (2.0**k - 1)
            panel = Brick.interval(min(near, far), max(near, far))
            result = integrate(f, panel, max(remaining / 4, floor), cfg)
            remaining = max(remaining - result.err_estimate, 0.0)
            results.append(result)
            increments.append(result.value)
            quiet = quiet + 1 if abs(result.value) < tol / 4 else 0
            if quiet >= 2:
                reach[sign] = far
                break
        else:
            raise DivergentTailError(
                f"The {'right' if sign > 0 else 'left'} tail did not settle within "
                f"{max_doublings} doublings",
                np.cumsum(increments).tolist(),
            )
    return _combine(results, tol, lower_cutoff=reach[-1], upper_cutoff=reach[1])


def fubini(
    f: PointIntegrand,
    outer: Brick,
    inner: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
    product_check: bool = True,
) -> FubiniResult:
    """Double integral over outer x inner against both iterated integrals"""
    cfg = cfg or IntegrateConfig()
    double = integrate(f, outer.product(inner), tol, cfg)
    failing: List[Point] = []

    def iterated(first: Brick, second: Brick, head_first: bool) -> IntegralResult:
        inner_tol = tol / (4 * max(1.0, volume(first)))
        memo: Dict[Point, float] = {}

        def section_integral(head: Point) -> float:
            if head not in memo:
                try:
                    result = integrate(f.section(head, head_first), second, inner_tol, cfg)
                except HKQuadError as exc:
                    logger.warning("Inner integral at %s failed: %s", head, exc)
                    result = None
                if result is not None and result.converged:
                    memo[head] = result.value
                else:
                    if result is not None:
                        logger.warning("Inner integral at %s failed (%s)", head, result.status)
                    failing.append(head)
                    memo[head] = 0.0
            return memo[head]

        return integrate(PointIntegrand(section_integral), first, tol, cfg)

    xy = iterated(outer, inner, True)
    yx = iterated(inner, outer, False)

    product_sum = None
    if product_check and double.converged and double.gauge is not None:
        delta1, dy_for = product_gauge(double.gauge, outer, inner, cfg.builder)
        dx = cousin_bisect(outer, delta1, replace(cfg.builder, max_items=cfg.max_items))
        product_sum = riemann_sum(f.as_interval(), product_division(dx, dy_for))

    values = [r.value for r in (double, xy, yx)]
    consistent = all(r.converged for r in (double, xy, yx)) and (
        max(values) - min(values) <= 3 * tol
    )
    return FubiniResult(double, xy, yx, tuple(failing), product_sum, consistent)
