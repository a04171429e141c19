"""Gauges: strictly positive functions δ(P) and the constructions built from them."""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainMismatchError, GaugeEvaluationError, NotContainedError
from .brick import Brick, Point, TaggedBrick, TaggedDivision, validate_division
from .mesh import LeafMesh

logger = logging.getLogger(__name__)

DEFAULT_COVER_POINTS = 10_000


class GaugeKind(StrEnum):
    CONSTANT = "constant"
    MIN_COMBINED = "min-combined"
    BOUNDARY = "boundary"
    CAUCHY_EXT = "cauchy-ext"
    NULL_COVER = "null-cover"
    CUSP = "cusp"
    ADAPTIVE = "adaptive"
    PRODUCT = "product"
    USER = "user"


@dataclass(frozen=True)
class Gauge:
    """A positive function on `domain` (None means unrestricted)

    `bound`, when known, is an upper bound of the gauge's values; builders use
    it to skip tag searches on bricks that cannot be fine.
    """

    fn: Callable[[Point], float]
    domain: Optional[Brick] = None
    kind: GaugeKind = GaugeKind.USER
    bound: Optional[float] = None

    def __call__(self, p: Point) -> float:
        value = self.fn(p)
        if not (value > 0 and math.isfinite(value)):
            raise GaugeEvaluationError(p, value, str(self.kind))
        return value

    @property
    def description(self) -> str:
        return str(self.kind)

    def scaled(self, factor: float) -> "Gauge":
        """Pointwise multiple; factor in (0, 1] keeps every fine division fine"""
        if not factor > 0:
            raise ValueError(f"Gauge scale factor must be positive, got {factor}")
        fn = self.fn
        return Gauge(
            lambda p: factor * fn(p),
            self.domain,
            self.kind,
            None if self.bound is None else factor * self.bound,
        )


def user_gauge(
    fn: Callable[[Point], float], domain: Optional[Brick] = None, bound: Optional[float] = None
) -> Gauge:
    return Gauge(fn, domain, GaugeKind.USER, bound)


def constant_gauge(domain: Optional[Brick], delta: float) -> Gauge:
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"Constant gauge needs a positive finite delta, got {delta}")
    return Gauge(lambda p: delta, domain, GaugeKind.CONSTANT, delta)


def _min_bound(*bounds: Optional[float]) -> Optional[float]:
    known = [b for b in bounds if b is not None]
    return min(known) if known else None


def min_combine(g1: Gauge, g2: Gauge) -> Gauge:
    if g1.domain is not None and g2.domain is not None and g1.domain != g2.domain:
        raise DomainMismatchError(f"Cannot combine gauges on {g1.domain} and {g2.domain}")
    domain = g1.domain if g1.domain is not None else g2.domain
    return Gauge(
        lambda p: min(g1(p), g2(p)),
        domain,
        GaugeKind.MIN_COMBINED,
        _min_bound(g1.bound, g2.bound),
    )


def max_vertex_distance(brick: Brick, tag: Point) -> float:
    """Distance from `tag` to the farthest vertex of `brick`"""
    return math.hypot(
        *(max(t - lo, hi - t) for lo, t, hi in zip(brick.lower, tag, brick.upper))
    )


def is_fine(tb: TaggedBrick, g: Gauge) -> bool:
    """True iff the tag is in the brick and the brick lies in the open δ-ball"""
    if g.domain is not None and not g.domain.contains_brick(tb.brick):
        raise NotContainedError(f"{tb.brick} is outside the gauge domain {g.domain}")
    if not tb.brick.contains(tb.tag):
        return False
    return max_vertex_distance(tb.brick, tb.tag) < g(tb.tag)


def is_division_fine(d: TaggedDivision, g: Gauge) -> bool:
    return all(is_fine(tb, g) for tb in d)


def _face_distance(brick: Brick, p: Point) -> float:
    """Least distance from p (inside the brick) to a face not containing p"""
    best = math.inf
    for lo, c, hi in zip(brick.lower, p, brick.upper):
        if c != lo:
            best = min(best, c - lo)
        if c != hi:
            best = min(best, hi - c)
    return best


def boundary_gauge(parts: Sequence[Tuple[Brick, Gauge]]) -> Gauge:
    """Gauge on the union of a division whose fine bricks straddle parts only at shared faces"""
    if not parts:
        raise DomainMismatchError("Boundary gauge needs at least one part")
    dim = parts[0][0].dim
    parent = Brick(
        tuple(min(b.lower[i] for b, _ in parts) for i in range(dim)),
        tuple(max(b.upper[i] for b, _ in parts) for i in range(dim)),
    )
    report = validate_division(
        TaggedDivision(tuple(TaggedBrick(b, b.lower) for b, _ in parts), parent)
    )
    if not report.ok:
        raise DomainMismatchError(f"Parts do not form a division: {report.message}")

    bricks = [b for b, _ in parts]
    gauges = [g for _, g in parts]

    def evaluate(p: Point) -> float:
        containing = [k for k, b in enumerate(bricks) if b.contains(p)]
        if not containing:
            raise NotContainedError(f"{p} is outside the divided brick {parent}")
        d = min(_face_distance(bricks[k], p) for k in containing)
        return min([0.5 * d] + [gauges[k](p) for k in containing])

    return Gauge(
        evaluate, parent, GaugeKind.BOUNDARY, _min_bound(*(g.bound for g in gauges))
    )


def cusp_gauge(base: Gauge, points: Iterable[Point]) -> Gauge:
    """min(base, dist(P, S)/2) off S and base on S, so S can only occur as tags"""
    pinned = frozenset(tuple(float(c) for c in p) for p in points)
    if not pinned:
        return base

    def evaluate(p: Point) -> float:
        if p in pinned:
            return base(p)
        nearest = min(math.dist(p, s) for s in pinned)
        return min(base(p), 0.5 * nearest)

    return Gauge(evaluate, base.domain, GaugeKind.CUSP, base.bound)


@dataclass(frozen=True)
class CountableCover:
    """Open intervals (or cubes) about listed points with total size at most `budget`"""

    centers: Tuple[Point, ...]
    half_widths: Tuple[float, ...]
    levels: Tuple[int, ...]
    budget: float
    truncated: bool = False

    @property
    def total_length(self) -> float:
        n = len(self.centers[0]) if self.centers else 1
        return math.fsum((2 * w) ** n for w in self.half_widths)


def _cover_half_width(eps: float, index: int, level: int, dim: int) -> float:
    # j-th point of level k gets a cube of volume eps / (2**j * 4**k)
    if dim == 1:
        return eps / (2 ** (1 + index) * 4**level)
    return 0.5 * (eps / (2**index * 4**level)) ** (1.0 / dim)


def null_cover(
    points: Iterable[Tuple[Point, int]], eps: float, limit: int = DEFAULT_COVER_POINTS
) -> CountableCover:
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError(f"Null cover budget must be positive, got {eps}")
    centers: List[Point] = []
    widths: List[float] = []
    levels: List[int] = []
    listed = list(itertools.islice(points, limit + 1))
    for j, (p, level) in enumerate(listed[:limit], start=1):
        if level < 1:
            raise ValueError(f"Null cover levels start at 1, got {level}")
        centers.append(tuple(float(c) for c in p))
        widths.append(_cover_half_width(eps, j, level, len(centers[-1])))
        levels.append(level)
    return CountableCover(
        tuple(centers), tuple(widths), tuple(levels), eps, truncated=len(listed) > limit
    )


def null_cover_gauge(
    points: Iterable[Tuple[Point, int]],
    eps: float,
    base: Gauge,
    limit: int = DEFAULT_COVER_POINTS,
) -> Gauge:
    """Base gauge shrunk to the cover half-width at each of the first `limit` listed points"""
    cover = null_cover(points, eps, limit)
    radius: Dict[Point, float] = {}
    for center, width in zip(cover.centers, cover.half_widths):
        # a point listed twice keeps its first (largest) radius
        radius.setdefault(center, width)
    if cover.truncated:
        logger.warning("Null cover truncated at %d points", limit)

    def evaluate(p: Point) -> float:
        width = radius.get(p)
        if width is None:
            return base(p)
        return min(base(p), width)

    return Gauge(evaluate, base.domain, GaugeKind.NULL_COVER, base.bound)


def cauchy_ladder_gauge(
    a: float,
    c: float,
    panel_gauges: Sequence[Gauge],
    tail_delta: float,
    reverse: bool = False,
) -> Gauge:
    """Gauge on [a, c] glued from panel gauges on the dyadic ladder towards c

    Ladder points are b_j = c - (c - a) 2**-j; with `reverse` the ladder
    accumulates at a instead. Panels past the supplied gauges fall back to
    the last one. Every fine interval containing a ladder point is tagged there.
    """
    if not a < c:
        raise DomainMismatchError(f"Ladder needs a < c, got [{a}, {c}]")
    if not panel_gauges:
        raise ValueError("Ladder gauge needs at least one panel gauge")
    length = c - a

    def ladder(j: int) -> float:
        return a + length * 2.0**-j if reverse else c - length * 2.0**-j

    def panel_gauge(j: int) -> Gauge:
        return panel_gauges[min(j, len(panel_gauges)) - 1]

    limit_point = a if reverse else c

    def evaluate(p: Point) -> float:
        x = p[0]
        if x == limit_point:
            return tail_delta
        distance = abs(limit_point - x)
        if distance >= length:
            return min(panel_gauge(1)(p), length / 4)
        # settle j so that ladder(j) <= x < ladder(j - 1) in distance to the limit
        j = max(1, math.floor(-math.log2(distance / length)) + 1)
        while abs(limit_point - ladder(j)) > distance:
            j += 1
        while j > 1 and abs(limit_point - ladder(j - 1)) <= distance:
            j -= 1
        lo, hi = ladder(j - 1), ladder(j)
        if x == hi:
            return min(panel_gauge(j)(p), panel_gauge(j + 1)(p), length / 2 ** (j + 1))
        return min(panel_gauge(j)(p), 0.5 * abs(x - hi), 0.5 * abs(x - lo))

    return Gauge(evaluate, Brick.interval(a, c), GaugeKind.CAUCHY_EXT, None)


@dataclass(frozen=True, eq=False)
class MeshGauge:
    """Gauge induced by a division into leaves of a dyadic mesh

    δ(P) is 0.75·(least diameter of the leaves containing P). In 1D a leaf
    endpoint P gets 1.5·(largest length of the leaves ending at P), and a
    pinned point gets 1.5·(largest diameter of the leaves containing it).
    Points off the leaves get 0.75·(least leaf diameter). The leaves form a
    division fine for this gauge when each is tagged at its center, at a 1D
    endpoint or at a pinned point it contains; splitting leaves never
    increases the gauge.
    """

    domain: Brick
    lower: np.ndarray
    upper: np.ndarray
    pinned: Tuple[Point, ...] = ()

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 2 or lower.shape != upper.shape or not len(lower):
            raise DomainMismatchError(
                f"Mesh bounds must be matching (n, dim) arrays, "
                f"got {lower.shape} and {upper.shape}"
            )
        if lower.shape[1] == 1:
            order = np.argsort(lower[:, 0], kind="stable")
            lower, upper = lower[order], upper[order]
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "pinned", tuple(tuple(float(c) for c in p) for p in self.pinned))
        object.__setattr__(self, "_diameters", np.hypot.reduce(upper - lower, axis=1))
        object.__setattr__(self, "_pinned", frozenset(self.pinned))

    @classmethod
    def from_mesh(cls, mesh: LeafMesh) -> "MeshGauge":
        return cls(mesh.domain, mesh.lower, mesh.upper, mesh.plan.forced)

    @classmethod
    def from_bricks(
        cls, domain: Brick, bricks: Sequence[Brick], pinned: Sequence[Point] = ()
    ) -> "MeshGauge":
        return cls(
            domain,
            np.array([b.lower for b in bricks], dtype=float),
            np.array([b.upper for b in bricks], dtype=float),
            tuple(pinned),
        )

    def _containing(self, x: np.ndarray) -> np.ndarray:
        if len(x) == 1:
            i = int(np.searchsorted(self.lower[:, 0], x[0], side="right"))
            rows = np.arange(max(i - 2, 0), i)
        else:
            rows = np.arange(len(self.lower))
        inside = np.all((self.lower[rows] <= x) & (x <= self.upper[rows]), axis=1)
        return rows[inside]

    def __call__(self, p: Point) -> float:
        x = np.asarray(p, dtype=float)
        rows = self._containing(x)
        if not len(rows):
            return 0.75 * float(self._diameters.min())
        diameters = self._diameters[rows]
        if tuple(p) in self._pinned:
            return 1.5 * float(diameters.max())
        if len(x) == 1 and (
            (self.lower[rows, 0] == x[0]).any() or (self.upper[rows, 0] == x[0]).any()
        ):
            return 1.5 * float(diameters.max())
        return 0.75 * float(diameters.min())

    def as_gauge(self) -> Gauge:
        return Gauge(self, self.domain, GaugeKind.ADAPTIVE, 1.5 * float(self._diameters.max()))
