"""Finite preorders, compatible well-founded relations, accessibility and poset reflection."""

import itertools
import logging
from collections.abc import Hashable, Iterable, Mapping, Sequence
from typing import NamedTuple

from .errors import InvalidStructureError

logger = logging.getLogger(__name__)

Pair = tuple[Hashable, Hashable]


class FinitePreorder:
    """A finite carrier with a reflexive, transitive relation `leq`."""

    def __init__(self, elements: Iterable[Hashable], leq: Iterable[Pair]) -> None:
        self.elements: tuple[Hashable, ...] = tuple(elements)
        self.leq: frozenset[Pair] = frozenset((u, v) for u, v in leq)
        self._index = {u: i for i, u in enumerate(self.elements)}

        if len(self._index) != len(self.elements):
            raise InvalidStructureError("Duplicate elements in carrier")

        for u, v in self.leq:
            if u not in self._index or v not in self._index:
                raise InvalidStructureError(f"Pair ({u!r}, {v!r}) mentions an element outside the carrier", witness=(u, v))

        for u in self.elements:
            if (u, u) not in self.leq:
                raise InvalidStructureError(f"leq is not reflexive at {u!r}", witness=(u, u))

        above: dict[Hashable, set[Hashable]] = {u: set() for u in self.elements}
        for u, v in self.leq:
            above[u].add(v)
        for u, v in sorted(self.leq, key=lambda p: (self._index[p[0]], self._index[p[1]])):
            missing = above[v] - above[u]
            if missing:
                w = min(missing, key=self._index.__getitem__)
                raise InvalidStructureError(f"leq is not transitive: {u!r} <= {v!r} <= {w!r}", witness=(u, v, w))

    @classmethod
    def closure(cls, elements: Iterable[Hashable], pairs: Iterable[Pair]) -> tuple["FinitePreorder", int]:
        """
        Build the reflexive-transitive closure of `pairs`.

        Returns:
            Tuple of (preorder, number of pairs the closure had to add)
        """
        carrier = tuple(elements)
        given = {(u, v) for u, v in pairs}
        closed = set(given) | {(u, u) for u in carrier}

        # Warshall over the carrier order keeps the result deterministic
        for k in carrier:
            for i in carrier:
                if (i, k) not in closed:
                    continue
                for j in carrier:
                    if (k, j) in closed:
                        closed.add((i, j))

        return cls(carrier, closed), len(closed - given)

    def le(self, u: Hashable, v: Hashable) -> bool:
        return (u, v) in self.leq

    def position(self, u: Hashable) -> int:
        """Position of `u` in the carrier order, used for stable sorting."""
        return self._index[u]

    def __contains__(self, u: object) -> bool:
        return u in self._index

    def __len__(self) -> int:
        return len(self.elements)

    def down(self, u: Hashable) -> frozenset[Hashable]:
        return frozenset(v for v in self.elements if (v, u) in self.leq)

    def up(self, u: Hashable) -> frozenset[Hashable]:
        return frozenset(v for v in self.elements if (u, v) in self.leq)

    def is_antisymmetric(self) -> bool:
        return all(u == v or (v, u) not in self.leq for u, v in self.leq)

    def strict_pairs(self) -> tuple[Pair, ...]:
        """All pairs u <= v with v not <= u, in carrier order."""
        return tuple((u, v) for u in self.elements for v in self.elements if (u, v) in self.leq and (v, u) not in self.leq)

    def restrict(self, subset: Iterable[Hashable]) -> "FinitePreorder":
        keep = set(subset)
        carrier = [u for u in self.elements if u in keep]
        return FinitePreorder(carrier, ((u, v) for u, v in self.leq if u in keep and v in keep))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FinitePreorder):
            return NotImplemented
        return set(self.elements) == set(other.elements) and self.leq == other.leq

    def __hash__(self) -> int:
        return hash((frozenset(self.elements), self.leq))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(elements={list(self.elements)!r}, pairs={len(self.leq)})"


class FinitePoset(FinitePreorder):
    """An antisymmetric finite preorder."""

    def __init__(self, elements: Iterable[Hashable], leq: Iterable[Pair]) -> None:
        super().__init__(elements, leq)
        for u, v in self.leq:
            if u != v and (v, u) in self.leq:
                raise InvalidStructureError(f"leq is not antisymmetric: {u!r} and {v!r}", witness=(u, v))

    @classmethod
    def from_preorder(cls, preorder: FinitePreorder) -> "FinitePoset":
        return cls(preorder.elements, preorder.leq)

    def restrict(self, subset: Iterable[Hashable]) -> "FinitePoset":
        return FinitePoset.from_preorder(super().restrict(subset))


class WfRelation:
    """A candidate well-founded relation `prec` living inside a preorder."""

    def __init__(self, base: FinitePreorder, prec: Iterable[Pair] = ()) -> None:
        self.base = base
        self.prec: frozenset[Pair] = frozenset((u, v) for u, v in prec)
        for u, v in self.prec:
            if u not in base or v not in base:
                raise InvalidStructureError(f"prec pair ({u!r}, {v!r}) mentions an element outside the carrier", witness=(u, v))

    @property
    def elements(self) -> tuple[Hashable, ...]:
        return self.base.elements

    def precedes(self, u: Hashable, v: Hashable) -> bool:
        return (u, v) in self.prec

    def strictly_below(self, u: Hashable) -> frozenset[Hashable]:
        return frozenset(v for v in self.base.elements if (v, u) in self.prec)

    def strict_domain(self) -> frozenset[Hashable]:
        """The elements lying strictly below some other element."""
        return frozenset(u for u, _ in self.prec)

    def with_prec(self, prec: Iterable[Pair]) -> "WfRelation":
        return WfRelation(self.base, prec)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WfRelation):
            return NotImplemented
        return self.base == other.base and self.prec == other.prec

    def __hash__(self) -> int:
        return hash((self.base, self.prec))

    def __repr__(self) -> str:
        return f"WfRelation(elements={list(self.base.elements)!r}, prec={sorted(self.prec, key=repr)!r})"


class AxiomCheck(NamedTuple):
    """Outcome of checking one axiom, with a counterexample when it fails."""

    axiom: str
    passed: bool
    witness: tuple[Hashable, ...] | None = None


class AxiomReport(NamedTuple):
    """A named list of axiom checks; `ok` iff all pass."""

    checks: tuple[AxiomCheck, ...]

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> tuple[AxiomCheck, ...]:
        return tuple(check for check in self.checks if not check.passed)

    def check(self, axiom: str) -> AxiomCheck:
        for check in self.checks:
            if check.axiom == axiom:
                return check
        raise KeyError(axiom)


class PosetReflection(NamedTuple):
    """Quotient of a preorder by mutual `leq`, with the image of the strict relation."""

    quotient: FinitePoset
    mapping: Mapping[Hashable, Hashable]
    reflected_prec: frozenset[Pair]

    @property
    def wf(self) -> WfRelation:
        return WfRelation(self.quotient, self.reflected_prec)

    def classes(self) -> dict[Hashable, tuple[Hashable, ...]]:
        grouped: dict[Hashable, list[Hashable]] = {q: [] for q in self.quotient.elements}
        for u, q in self.mapping.items():
            grouped[q].append(u)
        return {q: tuple(members) for q, members in grouped.items()}


def chain(n: int) -> FinitePoset:
    """The n-point chain 0 <= 1 <= ... <= n-1."""
    return FinitePoset(range(n), ((i, j) for i in range(n) for j in range(i, n)))


def antichain(names: Sequence[Hashable]) -> FinitePoset:
    return FinitePoset(names, ((u, u) for u in names))


def omega(n: int) -> WfRelation:
    """The chain {0,...,n-1} with its strict order."""
    return WfRelation(chain(n), ((i, j) for i in range(n) for j in range(i + 1, n)))


def accessible_set(carrier: Iterable[Hashable], relation: Iterable[Pair]) -> frozenset[Hashable]:
    """
    Least fixed point of S -> {u | for all v with v R u, v in S}.

    The relation is well-founded on the carrier iff the result is the whole carrier.
    """
    elements = tuple(carrier)
    predecessors: dict[Hashable, list[Hashable]] = {u: [] for u in elements}
    for v, u in relation:
        if u in predecessors:
            predecessors[u].append(v)

    accessible: frozenset[Hashable] = frozenset()
    rounds = 0
    while True:
        rounds += 1
        step = frozenset(u for u in elements if all(v in accessible for v in predecessors[u]))
        if step == accessible:
            break
        accessible = step

    logger.debug("accessible set stabilised after %d rounds (%d of %d elements)", rounds, len(accessible), len(elements))
    return accessible


def is_compatible_wf(w: WfRelation) -> AxiomReport:
    """
    Check the axioms of an intuitionistic well-founded preorder.

    Reports, in order, subrelation (prec within leq), transitivity, left compatibility
    (u <= v, v prec w implies u prec w), right compatibility (u prec v, v <= w implies
    u prec w) and well-foundedness via `accessible_set`.
    """
    elements = w.base.elements
    leq = w.base.leq
    prec = w.prec

    def first(candidates: Iterable[tuple[Hashable, ...]]) -> tuple[Hashable, ...] | None:
        return next(iter(candidates), None)

    ordered_prec = sorted(prec, key=lambda p: (w.base.position(p[0]), w.base.position(p[1])))

    subrelation = first((u, v) for u, v in ordered_prec if (u, v) not in leq)
    transitivity = first(
        (u, v, x) for u, v in ordered_prec for x in elements if (v, x) in prec and (u, x) not in prec
    )
    left = first(
        (u, v, x) for u in elements for v in elements if (u, v) in leq for x in elements if (v, x) in prec and (u, x) not in prec
    )
    right = first(
        (u, v, x) for u in elements for v in elements if (u, v) in prec for x in elements if (v, x) in leq and (u, x) not in prec
    )

    accessible = accessible_set(elements, prec)
    well_founded: tuple[Hashable, ...] | None = None
    for u in elements:
        if u in accessible:
            continue
        # an inaccessible element always has an inaccessible predecessor
        blocker = next(v for v in elements if (v, u) in prec and v not in accessible)
        well_founded = (blocker, u)
        break

    return AxiomReport(
        checks=(
            AxiomCheck("subrelation", subrelation is None, subrelation),
            AxiomCheck("transitivity", transitivity is None, transitivity),
            AxiomCheck("left_compatibility", left is None, left),
            AxiomCheck("right_compatibility", right is None, right),
            AxiomCheck("well_foundedness", well_founded is None, well_founded),
        )
    )


def poset_reflection(pre: FinitePreorder, prec: Iterable[Pair]) -> PosetReflection:
    """
    Collapse mutually comparable elements and push the strict relation forward.

    The representative of each class is its first member in carrier order. The reflected
    relation is u prec v iff every x in the class of u and y in the class of v have x prec y.

    Raises:
        InvalidStructureError: if `prec` is not a compatible well-founded relation on `pre`
    """
    source = WfRelation(pre, prec)
    report = is_compatible_wf(source)
    if not report.ok:
        failed = report.failures()[0]
        raise InvalidStructureError(f"Relation fails {failed.axiom}", witness=failed.witness)

    mapping: dict[Hashable, Hashable] = {}
    representatives: list[Hashable] = []
    for u in pre.elements:
        for rep in representatives:
            if pre.le(u, rep) and pre.le(rep, u):
                mapping[u] = rep
                break
        else:
            representatives.append(u)
            mapping[u] = u

    quotient = FinitePoset(representatives, {(mapping[u], mapping[v]) for u, v in pre.leq})

    members: dict[Hashable, list[Hashable]] = {rep: [] for rep in representatives}
    for u in pre.elements:
        members[mapping[u]].append(u)

    reflected = frozenset(
        (a, b)
        for a in representatives
        for b in representatives
        if all(source.precedes(x, y) for x in members[a] for y in members[b])
    )

    return PosetReflection(quotient=quotient, mapping=mapping, reflected_prec=reflected)


def components(nodes: Sequence[Hashable], edges: Iterable[Pair]) -> dict[Hashable, int]:
    """Connected components of an undirected graph, numbered in order of first appearance."""
    parent = {node: node for node in nodes}

    def find(node: Hashable) -> Hashable:
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for a, b in edges:
        root_a, root_b = find(a), find(b)
        if root_a != root_b:
            parent[root_b] = root_a

    numbering: dict[Hashable, int] = {}
    result: dict[Hashable, int] = {}
    for node in nodes:
        root = find(node)
        if root not in numbering:
            numbering[root] = len(numbering)
        result[node] = numbering[root]
    return result


def is_connected(P: FinitePreorder) -> bool:
    """
    True iff any two elements are joined by a zig-zag of comparable elements.

    The empty poset is reported connected (vacuous reading).
    """
    if not P.elements:
        logger.debug("empty poset reported connected (vacuous)")
        return True
    component_of = components(P.elements, P.leq)
    return len(set(component_of.values())) == 1


class AdequacyComparison(NamedTuple):
    """Global sections of A and of later(A), and the comparison map between them."""

    sections: tuple[tuple[Hashable, ...], ...]
    later_sections: tuple[tuple[Hashable, ...], ...]
    image: tuple[tuple[Hashable, ...], ...]

    @property
    def bijective(self) -> bool:
        return len(set(self.image)) == len(self.sections) and set(self.image) == set(self.later_sections)


def global_adequacy(w: WfRelation, values: Sequence[Hashable]) -> AdequacyComparison:
    """
    Compare global sections of the constant presheaf at `values` with those of its later.

    The later of a presheaf X on P is u -> lim over {v | v prec u} of X; the strict
    downset of u is read off the predecessor of the principal downset in the downset frame.
    """
    from .frame_logic import downset_frame

    frame = downset_frame(w)
    P = w.base
    below = {u: frame.predecessor(frame.principal(u)) for u in P.elements}

    component_of = components(P.elements, P.leq)
    n_components = len(set(component_of.values()))
    sections = tuple(
        tuple(choice[component_of[u]] for u in P.elements) for choice in itertools.product(values, repeat=n_components)
    )

    nodes = [(u, v) for u in P.elements for v in P.elements if v in below[u]]
    edges: list[tuple[Pair, Pair]] = []
    for u, v in nodes:
        # inside the limit at u: v' <= v
        edges.extend(((u, v), (u, v2)) for v2 in below[u] if P.le(v2, v))
        # restriction along x <= u
        edges.extend(((u, v), (x, v)) for x in P.elements if P.le(x, u) and v in below[x])
    later_component = components(nodes, edges)
    n_later = len(set(later_component.values()))
    later_sections = tuple(
        tuple(choice[later_component[node]] for node in nodes) for choice in itertools.product(values, repeat=n_later)
    )

    index = {u: i for i, u in enumerate(P.elements)}
    image = tuple(tuple(section[index[u]] for u, _ in nodes) for section in sections)

    logger.debug("global sections: %d, later sections: %d", len(sections), len(later_sections))
    return AdequacyComparison(sections=sections, later_sections=later_sections, image=image)


def check_global_adequacy(w: WfRelation, values: Sequence[Hashable]) -> bool:
    """True iff the comparison map from global sections of A to those of later(A) is a bijection."""
    return global_adequacy(w, values).bijective
