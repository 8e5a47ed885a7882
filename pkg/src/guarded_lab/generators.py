"""Exhaustive and seeded random instances for the property checks."""

import itertools
import logging
import random
from collections.abc import Hashable, Iterator

from .errors import InvalidStructureError
from .multiclock import MultiPresheaf, along_clock, clock_product, constant_presheaf
from .order_core import FinitePoset, Pair, WfRelation, is_compatible_wf
from .tree_semantics import STAR, StagedMap, StagedSet, later, tabulated

logger = logging.getLogger(__name__)

MAX_STAGE_SIZE = 6


def naturally_labelled_posets(n: int) -> Iterator[FinitePoset]:
    """
    Every partial order on 0..n-1 in which u <= v implies u <= v as integers.

    Every finite poset is isomorphic to at least one of these (take a linear extension),
    so they cover all posets of size n up to isomorphism.
    """
    candidates = [(i, j) for i in range(n) for j in range(i + 1, n)]
    reflexive = [(i, i) for i in range(n)]
    for mask in range(1 << len(candidates)):
        chosen = {pair for bit, pair in enumerate(candidates) if mask >> bit & 1}
        if any((i, k) not in chosen for i, j in chosen for j2, k in chosen if j == j2):
            continue
        yield FinitePoset(range(n), reflexive + sorted(chosen))


def compatible_precs(P: FinitePoset) -> Iterator[frozenset[Pair]]:
    """Every compatible well-founded relation on P, as subsets of its strict order."""
    strict = P.strict_pairs()
    for mask in range(1 << len(strict)):
        prec = frozenset(pair for bit, pair in enumerate(strict) if mask >> bit & 1)
        if is_compatible_wf(WfRelation(P, prec)).ok:
            yield prec


def random_staged_set(rng: random.Random, levels: int, max_size: int = MAX_STAGE_SIZE, name: str = "A") -> StagedSet:
    """
    A tabulated staged set with `levels` stages, non-decreasing sizes up to `max_size`
    and surjective restrictions.
    """
    if levels < 1:
        raise InvalidStructureError("need at least one level", witness=levels)
    sizes = [rng.randint(1, max_size)]
    for _ in range(levels - 1):
        sizes.append(rng.randint(sizes[-1], max_size))

    stages = [tuple(range(size)) for size in sizes]
    restrictions = []
    for lower, upper in itertools.pairwise(stages):
        # the first len(lower) elements hit every element below
        table: dict[Hashable, Hashable] = {x: x for x in upper[: len(lower)]}
        table.update({x: rng.choice(lower) for x in upper[len(lower) :]})
        restrictions.append(table)
    return tabulated(name, stages, restrictions)


def random_natural_step(rng: random.Random, A: StagedSet, stages: int) -> StagedMap:
    """
    A random natural map later(A) -> A defined on stages 0..stages-1.

    Each value at stage n+1 is drawn from the fiber over the value chosen at
    stage n.
    """
    delayed = later(A)
    tables: list[dict[Hashable, Hashable]] = [{STAR: rng.choice(A.at(0))}]
    for n in range(stages - 1):
        table = {}
        for x in delayed.at(n + 1):
            below = tables[n][delayed.restrict(n, x)]
            table[x] = rng.choice(A.fiber(n, below))
        tables.append(table)

    def component(n: int, x: Hashable) -> Hashable:
        if n >= len(tables):
            raise InvalidStructureError(f"random step is defined on {len(tables)} stages only", witness=n)
        return tables[n][x]

    return StagedMap(delayed, A, component, name=f"step[{A.name}]", verify_up_to=stages)


def random_multipresheaf(rng: random.Random, levels: int, clock: str = "k", other: str = "l") -> MultiPresheaf:
    """
    A random presheaf built from staged sets read along `clock`, optionally paired with
    one read along `other` or with a constant factor.
    """
    X = along_clock(random_staged_set(rng, levels, name="A"), clock)
    match rng.randrange(3):
        case 0:
            return X
        case 1:
            return clock_product(X, along_clock(random_staged_set(rng, levels, name="B"), other))
        case _:
            return clock_product(X, constant_presheaf(range(rng.randint(1, 3))))


def random_clockless_presheaf(rng: random.Random, levels: int, other: str = "l") -> MultiPresheaf:
    """A random presheaf not mentioning the clock that will be quantified."""
    if rng.randrange(2):
        return constant_presheaf(range(rng.randint(1, MAX_STAGE_SIZE)))
    return along_clock(random_staged_set(rng, levels, name="B"), other)
