"""Variation, outer measure, derivatives of interval functions and step approximations."""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    DepthExhaustedError,
    DomainMismatchError,
    NonFiniteIntegrandError,
    NonIntegrableError,
)
from ..settings import Settings
from .brick import Brick, Point, bisect, diameter, volume
from .division import BuilderConfig, Hints, ItemBudgetExceeded, TagRule, cousin_bisect
from .gauge import DEFAULT_COVER_POINTS, Gauge, constant_gauge, cusp_gauge, null_cover_gauge
from .integrate import (
    IntegralResult,
    IntegrateConfig,
    IntervalIntegrand,
    PointIntegrand,
    integrate,
)

logger = logging.getLogger(__name__)

UNBOUNDED = math.inf

_PLAN_RULES = (TagRule.CORNER, TagRule.CENTER, TagRule.CORNER, TagRule.SUPPLIED)


@dataclass(frozen=True)
class VariationEstimate:
    """Bracket for V(h; I); `upper` is math.inf when no finite bound is certified"""

    lower: float
    upper: float
    gauge_used: str
    divisions_tried: int

    def __post_init__(self):
        if not self.lower >= 0:
            raise ValueError(f"Variation lower bound must be nonnegative, got {self.lower}")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.upper)

    def as_dict(self) -> Dict[str, object]:
        return {
            "lower": self.lower,
            "upper": None if self.unbounded else self.upper,
            "unbounded": self.unbounded,
            "gauge_used": self.gauge_used,
            "divisions_tried": self.divisions_tried,
        }


@dataclass(frozen=True)
class PointSet:
    """A set X given by its characteristic function

    `points` lists a countable set (in enumeration order) and `bricks` a finite
    union of bricks; either lets `outer_measure` certify an upper bound.
    """

    membership: Callable[[Point], bool]
    description: str = ""
    points: Tuple[Point, ...] = ()
    bricks: Tuple[Brick, ...] = ()

    def __call__(self, p: Point) -> bool:
        return bool(self.membership(p))

    @classmethod
    def from_points(cls, points: Sequence[Point], description: str = "") -> "PointSet":
        listed = tuple(tuple(float(c) for c in p) for p in points)
        members = frozenset(listed)
        return cls(
            lambda p: p in members,
            description or f"{len(listed)} listed points",
            points=listed,
        )

    @classmethod
    def from_bricks(cls, *bricks: Brick) -> "PointSet":
        return cls(
            lambda p: any(b.contains(p) for b in bricks),
            " u ".join(str(b) for b in bricks),
            bricks=tuple(bricks),
        )


@dataclass(frozen=True)
class DerivativeEstimate:
    value: Optional[float]
    band: Tuple[float, float]
    scale: float
    bricks_tried: int

    @property
    def exists(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class StepFunction:
    """Constants on the 2**(k n) equal cells of `domain`"""

    domain: Brick
    level: int
    cells: Tuple[Brick, ...]
    constants: Tuple[float, ...]
    integral: float
    err_estimate: float
    _index: Dict[Tuple[int, ...], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {self._cell_index(c.lower): v for c, v in zip(self.cells, self.constants)}
        object.__setattr__(self, "_index", index)

    def _cell_index(self, p: Point) -> Tuple[int, ...]:
        count = 2**self.level
        return tuple(
            min(count - 1, max(0, math.floor((c - lo) / edge * count)))
            for c, lo, edge in zip(p, self.domain.lower, self.domain.edges)
        )

    def __call__(self, p: Point) -> float:
        if not self.domain.contains(p):
            raise DomainMismatchError(f"{p} is outside {self.domain}")
        return self._index[self._cell_index(p)]


def _division_plans(
    effort: int, seed: int, max_items: Optional[int]
) -> List[Tuple[float, BuilderConfig]]:
    """Gauge scale and builder settings for each division searched"""
    plans = []
    for i in range(effort):
        variant = i % 4
        plans.append(
            (
                0.5 ** (i // 4),
                BuilderConfig(
                    tag_rule=_PLAN_RULES[variant],
                    rng_seed=seed + i,
                    endpoint_tags=variant == 2,
                    max_items=max_items,
                ),
            )
        )
    return plans


def _search_lower(
    h: IntervalIntegrand,
    domain: Brick,
    g: Gauge,
    effort: int,
    hints: Optional[Hints] = None,
    seed: int = 0,
    threads: Optional[int] = None,
    max_items: Optional[int] = 200_000,
) -> Tuple[float, int]:
    if effort < 1:
        raise ValueError(f"effort must be at least 1, got {effort}")

    def attempt(plan: Tuple[float, BuilderConfig]) -> Optional[float]:
        factor, cfg = plan
        try:
            division = cousin_bisect(domain, g.scaled(factor), cfg, hints)
        except (DepthExhaustedError, ItemBudgetExceeded) as exc:
            logger.info("Variation division skipped: %s", exc)
            return None
        return math.fsum(abs(h(tb.tag, tb.brick)) for tb in division)

    workers = threads or Settings.from_env().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        sums = list(pool.map(attempt, _division_plans(effort, seed, max_items)))
    found = [s for s in sums if s is not None]
    return (max(found) if found else 0.0), len(found)


def variation_lower(
    h: IntervalIntegrand,
    domain: Brick,
    g: Gauge,
    effort: int = 8,
    hints: Optional[Hints] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> float:
    """Largest Σ|h| over `effort` g-fine divisions

    A certified lower bound for V(h; I; g); it bounds V(h; I) from below only
    when g is already fine enough for the infimum over gauges to be attained.
    """
    value, _ = _search_lower(h, domain, g, effort, hints, seed, threads)
    return value


def variation_bracket(
    f: PointIntegrand,
    domain: Brick,
    tol: float,
    cfg: Optional[IntegrateConfig] = None,
    effort: int = 4,
    threads: Optional[int] = None,
) -> VariationEstimate:
    """V(fμ; I) bracketed by ∫|f| (upper) and a division search under the driver's gauge

    When the driver leaves no gauge (a singular ladder) the search uses a
    constant gauge of diam(I)/64 shrunk towards the singular points.
    """
    cfg = cfg or IntegrateConfig()
    magnitude = f.absolute()
    try:
        result: Optional[IntegralResult] = integrate(magnitude, domain, tol, cfg)
    except NonIntegrableError as exc:
        logger.info("∫|f| over %s does not exist (%s); no finite upper bound", domain, exc)
        result = None
    if result is not None and result.converged:
        upper = result.value + result.err_estimate
    else:
        upper = UNBOUNDED
        if result is not None:
            logger.info(
                "∫|f| over %s did not converge (%s); no finite upper bound",
                domain,
                result.status,
            )
    singular = f.singular_points
    if result is not None and result.gauge is not None:
        gauge = result.gauge
    else:
        gauge = cusp_gauge(constant_gauge(domain, diameter(domain) / 64), singular)
    hints = (lambda brick: singular) if singular else None
    lower, tried = _search_lower(
        magnitude.as_interval(),
        domain,
        gauge,
        effort,
        hints,
        threads=threads,
        max_items=cfg.max_items,
    )
    return VariationEstimate(lower, upper, gauge.description, tried)


def outer_measure(
    X: PointSet,
    domain: Brick,
    g: Gauge,
    effort: int = 8,
    eps: float = 1e-6,
    threads: Optional[int] = None,
) -> VariationEstimate:
    """Bracket for μ*(X ∩ I) as the variation of χ(X, P)μ(J)

    Listed points get a null-cover gauge and the certified upper bound
    eps/4; brick unions are bounded by their neighbourhoods of radius
    sup g; anything else by μ(I).
    """

    def h(tag: Point, brick: Brick) -> float:
        return volume(brick) if X(tag) else 0.0

    gauge = g
    upper = volume(domain)
    if X.points:
        gauge = null_cover_gauge(((p, 1) for p in X.points), eps, g)
        # fine bricks sharing the j-th tag lie in one cube of volume eps/(2**j 4)
        if len(X.points) <= DEFAULT_COVER_POINTS:
            upper = min(upper, eps / 4)
    elif X.bricks and g.bound is not None:
        grown = []
        for b in X.bricks:
            lower = tuple(max(lo - g.bound, d) for lo, d in zip(b.lower, domain.lower))
            upper_corner = tuple(min(hi + g.bound, d) for hi, d in zip(b.upper, domain.upper))
            if all(lo < hi for lo, hi in zip(lower, upper_corner)):
                grown.append(math.prod(hi - lo for lo, hi in zip(lower, upper_corner)))
        upper = min(upper, math.fsum(grown))
    hints = (lambda brick: X.points) if X.points else None
    lower, tried = _search_lower(h, domain, gauge, effort, hints, threads=threads)
    return VariationEstimate(lower, upper, gauge.description, tried)


def _shrinking_bricks(p: Point, size: float, alpha: float) -> List[Tuple[Point, Point]]:
    """Centered cube, 2n cubes with p on a face, and one offset slab of regularity alpha"""
    n = len(p)
    half = size / 2
    shapes = [(tuple(c - half for c in p), tuple(c + half for c in p))]
    for i, sign in itertools.product(range(n), (1, -1)):
        lower = [c - half for c in p]
        upper = [c + half for c in p]
        if sign > 0:
            lower[i], upper[i] = p[i], p[i] + size
        else:
            lower[i], upper[i] = p[i] - size, p[i]
        shapes.append((tuple(lower), tuple(upper)))
    if n == 1:
        shapes.append(((p[0] - size / 4,), (p[0] + 3 * size / 4,)))
    else:
        thin = size * alpha ** (1.0 / (n - 1))
        shapes.append(
            (
                (p[0] - size / 4,) + tuple(c - thin / 2 for c in p[1:]),
                (p[0] + 3 * size / 4,) + tuple(c + thin / 2 for c in p[1:]),
            )
        )
    return shapes


def derivative_at(
    F: Callable[[Brick], float],
    P: Point,
    domain: Brick,
    alpha: float,
    tol: float,
    max_scales: int = 40,
) -> DerivativeEstimate:
    """Limit of F(J)/μ(J) over shrinking bricks J ∋ P with r(J) ≥ alpha

    Stops once the ratios of the last two scales lie within tol of each other;
    otherwise `value` is None and `band` holds the observed oscillation.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if not tol > 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    P = tuple(float(c) for c in P)
    if len(P) != domain.dim or not domain.contains(P):
        raise DomainMismatchError(f"{P} is not a point of {domain}")

    size = min(domain.edges) / 2
    previous: List[float] = []
    tried = 0
    band = (math.nan, math.nan)
    for _ in range(max_scales):
        ratios = []
        for lower, upper in _shrinking_bricks(P, size, alpha):
            if not domain.contains(lower) or not domain.contains(upper):
                continue
            brick = Brick(lower, upper)
            value = F(brick)
            if not math.isfinite(value):
                raise NonFiniteIntegrandError(P, brick, value)
            ratios.append(value / volume(brick))
        tried += len(ratios)
        if ratios and previous:
            window = np.array(previous + ratios)
            band = (float(window.min()), float(window.max()))
            if band[1] - band[0] < tol:
                return DerivativeEstimate(float(np.mean(ratios)), band, size, tried)
        if ratios:
            previous = ratios
        size /= 2
    logger.info("No derivative at %s: ratios oscillate within %s", P, band)
    return DerivativeEstimate(None, band, size, tried)


def _cells(domain: Brick, k: int) -> List[Brick]:
    cells = [domain]
    for _ in range(k):
        cells = [child for cell in cells for child in bisect(cell)]
    return cells


def step_approx(
    f: PointIntegrand,
    domain: Brick,
    k: int,
    tol: float = 1e-8,
    cfg: Optional[IntegrateConfig] = None,
) -> StepFunction:
    """Cell averages of f over the k-fold bisection of the domain"""
    if k < 0:
        raise ValueError(f"Level must be nonnegative, got {k}")
    cfg = cfg or IntegrateConfig()
    cells = _cells(domain, k)
    cell_tol = tol / len(cells)
    constants = []
    errors = []
    for cell in cells:
        result = integrate(f, cell, cell_tol, cfg)
        if not result.converged:
            raise NonIntegrableError(f"Cell {cell} did not converge ({result.status})")
        constants.append(result.value / volume(cell))
        errors.append(result.err_estimate)
    integral = math.fsum(c * volume(cell) for c, cell in zip(constants, cells))
    return StepFunction(domain, k, tuple(cells), tuple(constants), integral, math.fsum(errors))
