"""Dyadic leaf meshes: the packed state behind the adaptive driver.

A mesh is a set of dyadic sub-bricks (leaves) of a domain held in numpy
arrays. Each leaf carries h(tag, leaf), the terms of its 2**n children and a
refinement score, so splitting a leaf never re-evaluates the leaf itself.
One-dimensional meshes are kept in order and 2:1 balanced (neighbouring
leaves differ by at most one bisection).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import DepthExhaustedError
from .brick import Brick, Point, TaggedBrick, TaggedDivision

logger = logging.getLogger(__name__)

# offset of the two-point score rule; irrational, so it never lands on a dyadic point
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# scores this close to the marking threshold count as tied
MARK_SLACK = 1e-3

BatchKernel = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
BatchRule = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _child_bits(dim: int) -> np.ndarray:
    """(2**dim, dim) upper-half flags, children in the lexicographic order of `bisect`"""
    k = np.arange(2**dim)[:, None]
    return ((k >> np.arange(dim - 1, -1, -1)) & 1).astype(bool)


def children_of(
    lower: np.ndarray, upper: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bounds and cell parities of the children of every row, row after row"""
    n, dim = lower.shape
    mid = (lower + upper) / 2
    bits = _child_bits(dim)
    lo = np.where(bits, mid[:, None, :], lower[:, None, :]).reshape(n * len(bits), dim)
    hi = np.where(bits, upper[:, None, :], mid[:, None, :]).reshape(n * len(bits), dim)
    parity = np.tile(bits.sum(axis=1) % 2, n)
    return lo, hi, parity


def volumes(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.prod(upper - lower, axis=1)


@dataclass(frozen=True)
class TagPlan:
    """Where a leaf is tagged: its center, or the vertex its cell parity picks

    A leaf containing a forced point is tagged there instead; the first
    listed point wins.
    """

    forced: Tuple[Point, ...] = ()
    endpoint: bool = False

    def tags(self, lower: np.ndarray, upper: np.ndarray, parity: np.ndarray) -> np.ndarray:
        if self.endpoint:
            tags = np.where(parity[:, None].astype(bool), upper, lower)
        else:
            tags = (lower + upper) / 2
        for point in reversed(self.forced):
            s = np.asarray(point, dtype=float)
            tags[np.all((lower <= s) & (s <= upper), axis=1)] = s
        return tags


@dataclass(frozen=True, eq=False)
class LeafMesh:
    domain: Brick
    lower: np.ndarray
    upper: np.ndarray
    level: np.ndarray
    parity: np.ndarray
    terms: np.ndarray
    child_terms: np.ndarray
    scores: np.ndarray
    plan: TagPlan

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def tags(self) -> np.ndarray:
        return self.plan.tags(self.lower, self.upper, self.parity)

    @property
    def corrections(self) -> np.ndarray:
        """Σ h over the children of each leaf minus h over the leaf"""
        return self.child_terms.sum(axis=1) - self.terms

    def first_non_finite(self) -> Optional[int]:
        bad = np.flatnonzero(~np.isfinite(self.terms))
        return int(bad[0]) if len(bad) else None

    def item(self, row: int) -> TaggedBrick:
        tag = self.plan.tags(
            self.lower[row : row + 1], self.upper[row : row + 1], self.parity[row : row + 1]
        )[0]
        return TaggedBrick(
            Brick._exact(tuple(self.lower[row].tolist()), tuple(self.upper[row].tolist())),
            tuple(tag.tolist()),
        )

    def division(self) -> TaggedDivision:
        items = tuple(
            TaggedBrick(Brick._exact(tuple(lo), tuple(hi)), tuple(tag))
            for lo, hi, tag in zip(
                self.lower.tolist(), self.upper.tolist(), self.tags.tolist()
            )
        )
        return TaggedDivision(items, self.domain)

    def marks(self, share: float) -> np.ndarray:
        """Leaves to split: the largest scores carrying `share` of the total

        One-dimensional marks spread to both neighbours and are closed under
        2:1 balance.
        """
        scores = self.scores
        if np.isinf(scores).any():
            marked = np.isinf(scores)
        else:
            ranked = np.sort(scores)[::-1]
            running = np.cumsum(ranked)
            if not running[-1] > 0:
                return np.zeros(len(scores), dtype=bool)
            k = min(int(np.searchsorted(running, share * running[-1])), len(ranked) - 1)
            marked = scores >= ranked[k] * (1 - MARK_SLACK)
        if self.dim != 1:
            return marked & (scores > 0)
        widened = marked.copy()
        widened[1:] |= marked[:-1]
        widened[:-1] |= marked[1:]
        return balance(self.level, widened & (scores > 0))


def balance(level: np.ndarray, split: np.ndarray) -> np.ndarray:
    """Grow `split` until neighbouring 1D leaves differ by at most one level"""
    split = split.copy()
    while True:
        step = np.diff(level + split)
        pending = np.concatenate(
            [np.flatnonzero(step >= 2), np.flatnonzero(step <= -2) + 1]
        )
        pending = pending[~split[pending]]
        if not len(pending):
            return split
        split[pending] = True


@dataclass(frozen=True)
class MeshBuilder:
    """Evaluates and splits leaves of one integration run

    `kernel(tags, lower, upper)` gives h(tag, leaf) row by row. `rule`, when
    given, is a symmetric two-point sum over each leaf whose distance from
    the children's sum is added to the bisection score.
    """

    kernel: BatchKernel
    plan: TagPlan
    rule: Optional[BatchRule] = None
    max_depth: int = 1100

    def uniform(self, domain: Brick, level: int) -> LeafMesh:
        lower = np.asarray([domain.lower], dtype=float)
        upper = np.asarray([domain.upper], dtype=float)
        parity = np.zeros(1, dtype=np.int8)
        for _ in range(level):
            lower, upper, parity = children_of(lower, upper)
        depth = np.full(len(lower), level, dtype=np.int64)
        return self._assess(domain, lower, upper, depth, parity.astype(np.int8))

    def refine(self, mesh: LeafMesh, split: np.ndarray) -> LeafMesh:
        """Replace the flagged leaves by their children, keeping 1D order"""
        if not split.any():
            return mesh
        lower, upper = mesh.lower[split], mesh.upper[split]
        depth = mesh.level[split]
        mid = (lower + upper) / 2
        stuck = ~np.all((lower < mid) & (mid < upper), axis=1) | (depth >= self.max_depth)
        if stuck.any():
            row = int(np.flatnonzero(stuck)[0])
            brick = Brick._exact(tuple(lower[row].tolist()), tuple(upper[row].tolist()))
            raise DepthExhaustedError(
                f"Cannot bisect {brick} after {int(depth[row])} bisections",
                brick=brick,
                depth=int(depth[row]),
            )
        width = 2**mesh.dim
        clo, chi, cpar = children_of(lower, upper)
        fresh = self._assess(
            mesh.domain,
            clo,
            chi,
            np.repeat(depth + 1, width),
            cpar.astype(np.int8),
            terms=mesh.child_terms[split].reshape(-1),
        )
        parent = np.repeat(np.arange(len(mesh)), np.where(split, width, 1))
        is_child = split[parent]

        def merge(old: np.ndarray, new: np.ndarray) -> np.ndarray:
            out = np.empty((len(parent),) + old.shape[1:], dtype=old.dtype)
            out[~is_child] = old[~split]
            out[is_child] = new
            return out

        logger.debug("Split %d of %d leaves over %s", int(split.sum()), len(mesh), mesh.domain)
        return LeafMesh(
            mesh.domain,
            merge(mesh.lower, fresh.lower),
            merge(mesh.upper, fresh.upper),
            merge(mesh.level, fresh.level),
            merge(mesh.parity, fresh.parity),
            merge(mesh.terms, fresh.terms),
            merge(mesh.child_terms, fresh.child_terms),
            merge(mesh.scores, fresh.scores),
            self.plan,
        )

    def _assess(
        self,
        domain: Brick,
        lower: np.ndarray,
        upper: np.ndarray,
        level: np.ndarray,
        parity: np.ndarray,
        terms: Optional[np.ndarray] = None,
    ) -> LeafMesh:
        n = len(lower)
        with np.errstate(all="ignore"):
            if terms is None:
                terms = self.kernel(self.plan.tags(lower, upper, parity), lower, upper)
            clo, chi, cpar = children_of(lower, upper)
            child_terms = self.kernel(self.plan.tags(clo, chi, cpar), clo, chi).reshape(n, -1)
            together = child_terms.sum(axis=1)
            scores = np.abs(together - terms)
            if self.rule is not None:
                spread = np.abs(self.rule(lower, upper) - together)
                scores = scores + np.nan_to_num(spread, nan=0.0, posinf=0.0)
        scores = np.nan_to_num(scores, nan=np.inf)
        return LeafMesh(
            domain, lower, upper, level, parity, terms, child_terms, scores, self.plan
        )
