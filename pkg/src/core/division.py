"""Constructive δ-fine divisions: Cousin bisection, the 1D chain, products, infinite range."""

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DepthExhaustedError, DomainMismatchError, HKQuadError
from .brick import Brick, Point, TaggedBrick, TaggedDivision, bisect
from .gauge import Gauge, GaugeKind, max_vertex_distance

logger = logging.getLogger(__name__)

Hints = Callable[[Brick], Sequence[Point]]


class TagRule(StrEnum):
    CORNER = "corner"
    CENTER = "center"
    SUPPLIED = "supplied"


class ItemBudgetExceeded(HKQuadError):
    """A division build produced more bricks than allowed"""

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"Division exceeded the item budget of {limit} bricks")


@dataclass(frozen=True)
class BuilderConfig:
    max_depth: int = 1100
    tag_rule: TagRule = TagRule.CORNER
    rng_seed: Optional[int] = None
    endpoint_tags: bool = False
    jitter: float = 0.5
    max_items: Optional[int] = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be at least 1, got {self.max_depth}")
        if not 0 <= self.jitter <= 1:
            raise ValueError(f"jitter must lie in [0, 1], got {self.jitter}")
        if self.max_items is not None and self.max_items < 1:
            raise ValueError(f"max_items must be positive, got {self.max_items}")
        object.__setattr__(self, "tag_rule", TagRule(self.tag_rule))


@dataclass(frozen=True)
class InfiniteDivision:
    """Division of the real line: two rays around a fine division of [u, v]

    Ray terms count as zero in every sum.
    """

    middle: TaggedDivision
    cutoffs: Tuple[float, float]

    @property
    def left_ray(self) -> Tuple[float, float]:
        return (-math.inf, self.middle.parent.lower[0])

    @property
    def right_ray(self) -> Tuple[float, float]:
        return (self.middle.parent.upper[0], math.inf)


def _cell_parity(brick: Brick, domain: Brick) -> int:
    return sum(
        int(round((lo - d_lo) / edge))
        for lo, d_lo, edge in zip(brick.lower, domain.lower, brick.edges)
    ) % 2


def _candidates(
    brick: Brick,
    domain: Brick,
    cfg: BuilderConfig,
    hints: Optional[Hints],
    rng: Optional[np.random.Generator],
) -> List[Point]:
    supplied = [p for p in hints(brick) if brick.contains(p)] if hints else []
    if cfg.endpoint_tags:
        if brick.dim <= 3:
            vertices = brick.vertices()
        else:
            vertices = [brick.lower, brick.upper]
        if _cell_parity(brick, domain):
            vertices.reverse()
        return vertices + supplied

    candidates = [brick.lower, brick.center]
    if brick.dim <= 3:
        candidates.extend(v for v in brick.vertices() if v != brick.lower)
    if cfg.tag_rule is TagRule.CENTER and rng is not None:
        offsets = rng.uniform(-0.5, 0.5, brick.dim) * cfg.jitter
        candidates.append(
            tuple(
                c + float(o) * e for c, o, e in zip(brick.center, offsets, brick.edges)
            )
        )
    elif cfg.tag_rule is TagRule.SUPPLIED:
        candidates.extend(supplied)
    return candidates


def _find_tag(
    brick: Brick,
    g: Gauge,
    domain: Brick,
    cfg: BuilderConfig,
    hints: Optional[Hints],
    rng: Optional[np.random.Generator],
) -> Optional[Point]:
    # every tag is at least half a diameter from some vertex
    if g.bound is not None and 0.5 * brick.diameter >= g.bound:
        return None
    for tag in _candidates(brick, domain, cfg, hints, rng):
        if max_vertex_distance(brick, tag) < g(tag):
            return tag
    return None


def cousin_bisect(
    domain: Brick,
    g: Gauge,
    cfg: BuilderConfig = BuilderConfig(),
    hints: Optional[Hints] = None,
) -> TaggedDivision:
    """Bisect until every piece has a tag it is fine for (Cousin's lemma)"""
    if g.domain is not None and not g.domain.contains_brick(domain):
        raise DomainMismatchError(f"Gauge domain {g.domain} does not cover {domain}")
    rng = np.random.default_rng(cfg.rng_seed) if cfg.rng_seed is not None else None
    items: List[TaggedBrick] = []
    stack: List[Tuple[Brick, int]] = [(domain, 0)]
    deepest = 0
    while stack:
        brick, depth = stack.pop()
        tag = _find_tag(brick, g, domain, cfg, hints, rng)
        if tag is not None:
            items.append(TaggedBrick(brick, tag))
            if cfg.max_items is not None and len(items) > cfg.max_items:
                raise ItemBudgetExceeded(cfg.max_items)
            continue
        if depth >= cfg.max_depth:
            values = {
                c: g(c) for c in _candidates(brick, domain, cfg, hints, None)
            }
            raise DepthExhaustedError(
                f"No fine tag for {brick} after {depth} bisections; "
                f"gauge values at candidates: {values}",
                brick=brick,
                depth=depth,
                candidates=values,
            )
        deepest = max(deepest, depth + 1)
        stack.extend((child, depth + 1) for child in reversed(bisect(brick)))
    logger.debug("Cousin bisection of %s: %d bricks, depth %d", domain, len(items), deepest)
    return TaggedDivision(tuple(items), domain)


def one_dim_chain(
    domain: Brick, g: Gauge, cfg: BuilderConfig = BuilderConfig(), shrink: float = 0.9
) -> TaggedDivision:
    """Left-to-right sweep: each step tags ξ with t in (ξ-δ(ξ), ξ] and stops short of ξ+δ(ξ)

    The sweep tags the left end t of each piece; the right end c tags the
    last piece as soon as c - δ(c) < t.
    """
    if domain.dim != 1:
        raise DomainMismatchError(f"Chain construction needs a 1D brick, got {domain}")
    if not 0 < shrink < 1:
        raise ValueError(f"Chain step fraction must lie in (0, 1), got {shrink}")
    b, c = domain.lower[0], domain.upper[0]
    items: List[TaggedBrick] = []
    t = b
    for _ in range(cfg.max_steps):
        if t >= c:
            break
        if c - g((c,)) < t:
            items.append(TaggedBrick(Brick._exact((t,), (c,)), (c,)))
            t = c
            break
        delta = g((t,))
        nxt = min(c, t + shrink * delta)
        if not nxt > t:
            raise DepthExhaustedError(
                f"Chain stalled at {t!r}: gauge {delta!r} below representable step",
                brick=domain,
                candidates={(t,): delta},
            )
        items.append(TaggedBrick(Brick._exact((t,), (nxt,)), (t,)))
        t = nxt
    else:
        raise DepthExhaustedError(
            f"Chain over {domain} exceeded {cfg.max_steps} steps", brick=domain
        )
    return TaggedDivision(tuple(items), domain)


def product_division(
    dx: TaggedDivision, dy_for: Callable[[Point], TaggedDivision]
) -> TaggedDivision:
    """Tagged products I* x J* with tags (x, y) from per-x divisions of the y-brick"""
    items: List[TaggedBrick] = []
    parent_y: Optional[Brick] = None
    for tbx in dx:
        dy = dy_for(tbx.tag)
        if parent_y is None:
            parent_y = dy.parent
        elif dy.parent != parent_y:
            raise DomainMismatchError(
                f"Inner divisions disagree on the y-brick: {dy.parent} vs {parent_y}"
            )
        for tby in dy:
            items.append(
                TaggedBrick(tbx.brick.product(tby.brick), tbx.tag + tby.tag)
            )
    if parent_y is None:
        raise DomainMismatchError("Product of an empty division")
    return TaggedDivision(tuple(items), dx.parent.product(parent_y))


def section_gauge(g: Gauge, x: Point, inner: Brick, factor: float = 1.0) -> Gauge:
    """y -> factor * δ(x, y) on the inner brick"""
    return Gauge(
        lambda y: factor * g(x + y),
        inner,
        GaugeKind.PRODUCT,
        None if g.bound is None else factor * g.bound,
    )


def product_gauge(
    g: Gauge,
    outer: Brick,
    inner: Brick,
    cfg: BuilderConfig = BuilderConfig(),
) -> Tuple[Gauge, Callable[[Point], TaggedDivision]]:
    """δ1(x) = min ½δ(x, y_j) over the tags of a ½δ(x,·)-fine division of the inner brick

    Returns δ1 on the outer brick and the memoised per-x inner divisions; any
    δ1-fine outer division composes with them into a δ-fine product division.
    """
    memo: Dict[Point, TaggedDivision] = {}

    def dy_for(x: Point) -> TaggedDivision:
        if x not in memo:
            memo[x] = cousin_bisect(inner, section_gauge(g, x, inner, 0.5), cfg)
        return memo[x]

    def delta1(x: Point) -> float:
        return min(0.5 * g(x + tb.tag) for tb in dy_for(x))

    bound = None if g.bound is None else 0.5 * g.bound
    return Gauge(delta1, outer, GaugeKind.PRODUCT, bound), dy_for


def infinite_division(
    g: Gauge,
    cutoffs: Tuple[float, float],
    cfg: BuilderConfig = BuilderConfig(),
    attempts: int = 8,
) -> InfiniteDivision:
    """Rays (-inf, u] and [v, inf) around a chain division of [u, v] with u < a < b < v"""
    a, b = cutoffs
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainMismatchError(f"Cutoffs must be finite with a < b, got {cutoffs}")
    u = math.floor(a) - 1
    v = math.ceil(b) + 1
    last_error: Optional[DepthExhaustedError] = None
    for _ in range(attempts):
        try:
            middle = one_dim_chain(Brick.interval(u, v), g, cfg)
            return InfiniteDivision(middle, (a, b))
        except DepthExhaustedError as exc:
            logger.debug("Chain over [%s, %s] failed, widening: %s", u, v, exc)
            last_error = exc
            u, v = u - 1, v + 1
    raise last_error
