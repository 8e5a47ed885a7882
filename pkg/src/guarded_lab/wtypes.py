"""Polynomial endofunctors, W-trees of bounded depth and the plump ordering."""

import itertools
import logging
from collections.abc import Iterable
from typing import NamedTuple

from .errors import ExplosionError, InvalidStructureError
from .order_core import FinitePreorder, Pair, PosetReflection, WfRelation, poset_reflection

logger = logging.getLogger(__name__)

DEFAULT_TREE_CAP = 1000


class Shape(NamedTuple):
    """A constructor of the polynomial with `fiber_size` child positions."""

    name: str
    fiber_size: int


class Polynomial:
    """A finite polynomial endofunctor: shapes B with finite fibers p^-1(b)."""

    def __init__(self, shapes: Iterable[Shape | tuple[str, int]]) -> None:
        self.shapes = tuple(Shape(name, size) for name, size in shapes)
        names = [shape.name for shape in self.shapes]
        if len(set(names)) != len(names):
            raise InvalidStructureError("Duplicate shape names", witness=names)
        for shape in self.shapes:
            if shape.fiber_size < 0:
                raise InvalidStructureError(f"Shape {shape.name!r} has a negative fiber size", witness=shape)
        if not self.has_leaf:
            logger.warning("Polynomial has no shape with an empty fiber; it has no finite trees")

    @property
    def has_leaf(self) -> bool:
        return any(shape.fiber_size == 0 for shape in self.shapes)

    def fiber(self, name: str) -> range:
        for shape in self.shapes:
            if shape.name == name:
                return range(shape.fiber_size)
        raise KeyError(name)

    def __repr__(self) -> str:
        return f"Polynomial({[tuple(shape) for shape in self.shapes]!r})"


class WTree(NamedTuple):
    """A well-founded tree: a root shape and one child per fiber position."""

    shape: str
    children: tuple["WTree", ...] = ()

    @property
    def rank(self) -> int:
        return 1 + max(child.rank for child in self.children) if self.children else 0

    def __str__(self) -> str:
        if not self.children:
            return self.shape
        return f"{self.shape}({','.join(str(child) for child in self.children)})"


class PlumpOrder(NamedTuple):
    """The plump preorder and its strict part on a subtree-closed set of trees."""

    trees: tuple[WTree, ...]
    below_eq: frozenset[Pair]
    below: frozenset[Pair]

    def as_wf(self) -> WfRelation:
        return WfRelation(FinitePreorder(self.trees, self.below_eq), self.below)


def unary_polynomial() -> Polynomial:
    """Two shapes with fibers of size 0 and 1; its trees are the natural numbers."""
    return Polynomial([("leaf", 0), ("node", 1)])


def binary_polynomial() -> Polynomial:
    return Polynomial([("leaf", 0), ("node", 2)])


def count_wtrees(p: Polynomial, depth: int) -> int:
    """Number of trees of depth < `depth`, computed without building them."""
    count = 0
    for _ in range(depth):
        count = sum(count**shape.fiber_size for shape in p.shapes)
    return count


def build_wtrees(p: Polynomial, depth: int, cap: int = DEFAULT_TREE_CAP) -> tuple[WTree, ...]:
    """
    All trees of depth < `depth`, leaves having depth 0.

    Args:
        p: The polynomial
        depth: Exclusive depth bound (0 yields no trees)
        cap: Refuse to build more than this many trees

    Returns:
        The trees sorted by rank, then by printed form
    """
    if depth < 0:
        raise InvalidStructureError("depth must be non-negative", witness=depth)
    estimate = count_wtrees(p, depth)
    if estimate > cap:
        raise ExplosionError(f"W-trees of depth < {depth}", estimate, cap)

    level: tuple[WTree, ...] = ()
    for _ in range(depth):
        level = tuple(
            WTree(shape.name, children) for shape in p.shapes for children in itertools.product(level, repeat=shape.fiber_size)
        )

    logger.debug("built %d trees of depth < %d", len(level), depth)
    return tuple(sorted(level, key=lambda t: (t.rank, str(t))))


def plump_order(trees: Iterable[WTree]) -> PlumpOrder:
    """
    Least pair of relations closed under the plump rules.

    sigma(a, c) is below-or-equal w when every child is strictly below w, and w is
    strictly below sigma(a, c) when w is below-or-equal some child. Both relations are
    computed together by Kleene iteration from the empty pair.

    Raises:
        InvalidStructureError: if the trees are not closed under subtrees
    """
    trees = tuple(trees)
    present = set(trees)
    for tree in trees:
        for child in tree.children:
            if child not in present:
                raise InvalidStructureError(f"Tree set is not closed under subtrees: {child} is missing", witness=str(child))

    below_eq: frozenset[Pair] = frozenset()
    below: frozenset[Pair] = frozenset()
    rounds = 0
    while True:
        rounds += 1
        next_below_eq = frozenset((t, w) for t in trees for w in trees if all((c, w) in below for c in t.children))
        next_below = frozenset((w, t) for t in trees for w in trees if any((w, c) in below_eq for c in t.children))
        if next_below_eq == below_eq and next_below == below:
            break
        below_eq, below = next_below_eq, next_below

    logger.debug("plump order on %d trees stabilised after %d rounds", len(trees), rounds)
    return PlumpOrder(trees=trees, below_eq=below_eq, below=below)


def plump_poset(p: Polynomial, depth: int, cap: int = DEFAULT_TREE_CAP) -> PosetReflection:
    """The poset reflection of the plump order on the trees of depth < `depth`."""
    order = plump_order(build_wtrees(p, depth, cap))
    return poset_reflection(FinitePreorder(order.trees, order.below_eq), order.below)
