"""Geometry of n-dimensional bricks, tagged bricks and divisions."""

import itertools
import math
import sys
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from ..errors import DegenerateBrickError, DepthExhaustedError, NotContainedError

Point = Tuple[float, ...]

EXTERNAL_ATOL = 1e-12


def point(*coords: float) -> Point:
    """Build a validated point from coordinates"""
    if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
        coords = tuple(coords[0])
    if not coords:
        raise DegenerateBrickError("A point needs at least one coordinate")
    values = tuple(float(c) for c in coords)
    if not all(math.isfinite(c) for c in values):
        raise DegenerateBrickError(f"Point coordinates must be finite, got {values}")
    return values


@dataclass(frozen=True, slots=True)
class Brick:
    """Closed coordinate-aligned box [a1,b1] x ... x [an,bn]"""

    lower: Point
    upper: Point

    def __post_init__(self):
        lower = tuple(float(c) for c in self.lower)
        upper = tuple(float(c) for c in self.upper)
        if not lower or len(lower) != len(upper):
            raise DegenerateBrickError(
                f"Brick bounds must share a positive dimension, got {lower} and {upper}"
            )
        for lo, hi in zip(lower, upper):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DegenerateBrickError(f"Brick bounds must be finite, got [{lo}, {hi}]")
            if not lo < hi:
                raise DegenerateBrickError(f"Degenerate brick edge [{lo}, {hi}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def _exact(cls, lower: Point, upper: Point) -> "Brick":
        # builders only cut at stored midpoints, so children skip validation
        brick = object.__new__(cls)
        object.__setattr__(brick, "lower", lower)
        object.__setattr__(brick, "upper", upper)
        return brick

    @classmethod
    def interval(cls, a: float, b: float) -> "Brick":
        return cls((a,), (b,))

    @classmethod
    def from_bounds(cls, *bounds: Tuple[float, float]) -> "Brick":
        """Brick from per-axis (lower, upper) pairs"""
        return cls(tuple(lo for lo, _ in bounds), tuple(hi for _, hi in bounds))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def edges(self) -> Tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def center(self) -> Point:
        return tuple((lo + hi) / 2 for lo, hi in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return volume(self)

    @property
    def diameter(self) -> float:
        return diameter(self)

    def vertices(self) -> List[Point]:
        return [tuple(v) for v in itertools.product(*zip(self.lower, self.upper))]

    def contains(self, p: Sequence[float], atol: float = 0.0) -> bool:
        """Closed-brick membership, optionally with an absolute tolerance"""
        return all(
            lo - atol <= c <= hi + atol for lo, c, hi in zip(self.lower, p, self.upper)
        )

    def contains_brick(self, other: "Brick", atol: float = 0.0) -> bool:
        return self.contains(other.lower, atol) and self.contains(other.upper, atol)

    def split(self, axis_count: int) -> Tuple["Brick", "Brick"]:
        """Split into the first `axis_count` axes and the rest (for products)"""
        if not 0 < axis_count < self.dim:
            raise DegenerateBrickError(
                f"Cannot split a {self.dim}-brick after {axis_count} axes"
            )
        return (
            Brick._exact(self.lower[:axis_count], self.upper[:axis_count]),
            Brick._exact(self.lower[axis_count:], self.upper[axis_count:]),
        )

    def product(self, other: "Brick") -> "Brick":
        return Brick._exact(self.lower + other.lower, self.upper + other.upper)

    def __str__(self) -> str:
        return "x".join(f"[{lo:g},{hi:g}]" for lo, hi in zip(self.lower, self.upper))


@dataclass(frozen=True, slots=True)
class TaggedBrick:
    brick: Brick
    tag: Point


@dataclass(frozen=True)
class TaggedDivision:
    """Finite set of tagged bricks that should partition `parent`"""

    items: Tuple[TaggedBrick, ...]
    parent: Brick

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[TaggedBrick]:
        return iter(self.items)

    @property
    def norm(self) -> float:
        """Largest diameter among the bricks"""
        return max(diameter(tb.brick) for tb in self.items)


@dataclass(frozen=True)
class DivisionReport:
    ok: bool
    kind: Optional[str] = None
    message: str = ""
    offending: Tuple[Brick, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def volume(b: Brick) -> float:
    return math.prod(hi - lo for lo, hi in zip(b.lower, b.upper))


def diameter(b: Brick) -> float:
    return math.hypot(*(hi - lo for lo, hi in zip(b.lower, b.upper)))


def regularity(b: Brick) -> float:
    """Volume over the n-th power of the longest edge; 1 exactly for cubes"""
    edges = b.edges
    longest = max(edges)
    return math.prod(e / longest for e in edges)


def bisect(b: Brick) -> List[Brick]:
    """Halve every axis, giving 2**n children in lexicographic order"""
    halves = []
    for lo, hi in zip(b.lower, b.upper):
        mid = (lo + hi) / 2
        if not lo < mid < hi:
            raise DepthExhaustedError(
                f"Cannot bisect {b}: midpoint {mid!r} is not representable strictly inside",
                brick=b,
            )
        halves.append(((lo, mid), (mid, hi)))
    return [
        Brick._exact(
            tuple(lo for lo, _ in choice), tuple(hi for _, hi in choice)
        )
        for choice in itertools.product(*halves)
    ]


def complement_partition(outer: Brick, inner: Brick) -> List[Brick]:
    """Bricks that, together with `inner`, divide `outer`"""
    if outer.dim != inner.dim or not outer.contains_brick(inner):
        raise NotContainedError(f"{inner} is not contained in {outer}")
    axes = []
    for o_lo, i_lo, i_hi, o_hi in zip(outer.lower, inner.lower, inner.upper, outer.upper):
        cuts = sorted({o_lo, i_lo, i_hi, o_hi})
        axes.append(list(zip(cuts, cuts[1:])))
    parts = []
    for choice in itertools.product(*axes):
        lower = tuple(lo for lo, _ in choice)
        upper = tuple(hi for _, hi in choice)
        if lower == inner.lower and upper == inner.upper:
            continue
        parts.append(Brick._exact(lower, upper))
    return parts


def _interiors_overlap(a: Brick, b: Brick, atol: float) -> bool:
    return all(
        min(a_hi, b_hi) - max(a_lo, b_lo) > atol
        for a_lo, a_hi, b_lo, b_hi in zip(a.lower, a.upper, b.lower, b.upper)
    )


def _volume_tolerance(d: TaggedDivision) -> float:
    n = d.parent.dim
    return max(EXTERNAL_ATOL, 4 * n * sys.float_info.epsilon * max(1, len(d.items)))


def validate_division(d: TaggedDivision, atol: float = EXTERNAL_ATOL) -> DivisionReport:
    """Check tags, containment, disjoint interiors and exact cover of the parent"""
    if not d.items:
        return DivisionReport(False, "cover-gap", "Division has no bricks")
    for tb in d.items:
        if tb.brick.dim != d.parent.dim or len(tb.tag) != d.parent.dim:
            return DivisionReport(
                False, "dimension", f"{tb.brick} does not match {d.parent}", (tb.brick,)
            )
        if not d.parent.contains_brick(tb.brick, atol):
            return DivisionReport(
                False, "outside", f"{tb.brick} sticks out of {d.parent}", (tb.brick,)
            )
        if not tb.brick.contains(tb.tag, atol):
            return DivisionReport(
                False, "tag", f"Tag {tb.tag} lies outside {tb.brick}", (tb.brick,)
            )

    # sweep along the first axis; only bricks whose x-ranges intersect are compared
    ordered = sorted(d.items, key=lambda tb: tb.brick.lower[0])
    active: List[Brick] = []
    for tb in ordered:
        start = tb.brick.lower[0]
        active = [b for b in active if b.upper[0] - start > atol]
        for other in active:
            if _interiors_overlap(other, tb.brick, atol):
                return DivisionReport(
                    False,
                    "overlap",
                    f"{other} and {tb.brick} have overlapping interiors",
                    (other, tb.brick),
                )
        active.append(tb.brick)

    total = math.fsum(volume(tb.brick) for tb in d.items)
    expected = volume(d.parent)
    if not math.isclose(total, expected, rel_tol=_volume_tolerance(d), abs_tol=0.0):
        return DivisionReport(
            False,
            "cover-gap",
            f"Bricks cover volume {total!r} of {expected!r} in {d.parent}",
            (d.parent,),
        )
    return DivisionReport(True)


def total_volume(bricks: Iterable[Brick]) -> float:
    return math.fsum(volume(b) for b in bricks)
