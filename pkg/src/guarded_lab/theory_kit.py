"""Propositional geometric theories, filter theories of posets, and the Bag / IBag transformations."""

import itertools
import logging
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ExplosionError, InvalidStructureError
from .order_core import FinitePoset, FinitePreorder

logger = logging.getLogger(__name__)

MAX_SYMBOLS = 16
DEFAULT_BAG_CAP = 100_000


@dataclass(frozen=True)
class Symbol:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Conj:
    parts: tuple["Formula", ...] = ()

    def __str__(self) -> str:
        return "⊤" if not self.parts else "(" + " ∧ ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Disj:
    parts: tuple["Formula", ...] = ()

    def __str__(self) -> str:
        return "⊥" if not self.parts else "(" + " ∨ ".join(str(p) for p in self.parts) + ")"


Formula = Symbol | Conj | Disj

TOP = Conj(())
BOTTOM = Disj(())


def conj(*parts: Formula) -> Formula:
    return parts[0] if len(parts) == 1 else Conj(tuple(parts))


def disj(*parts: Formula) -> Formula:
    return parts[0] if len(parts) == 1 else Disj(tuple(parts))


def evaluate(formula: Formula, true: frozenset[str]) -> bool:
    """Boolean value of a formula when exactly the symbols in `true` hold."""
    if isinstance(formula, Symbol):
        return formula.name in true
    if isinstance(formula, Conj):
        return all(evaluate(part, true) for part in formula.parts)
    return any(evaluate(part, true) for part in formula.parts)


def symbols_of(formula: Formula) -> frozenset[str]:
    if isinstance(formula, Symbol):
        return frozenset((formula.name,))
    return frozenset().union(*(symbols_of(part) for part in formula.parts))


def rename_formula(formula: Formula, mapping: Mapping[str, str]) -> Formula:
    if isinstance(formula, Symbol):
        return Symbol(mapping[formula.name])
    return type(formula)(tuple(rename_formula(part, mapping) for part in formula.parts))


class Sequent(NamedTuple):
    lhs: Formula
    rhs: Formula

    def holds(self, true: frozenset[str]) -> bool:
        return not evaluate(self.lhs, true) or evaluate(self.rhs, true)

    def __str__(self) -> str:
        return f"{self.lhs} ⊢ {self.rhs}"


class TheoryModel(NamedTuple):
    """A set-based model: the symbols assigned true."""

    true: frozenset[str]

    def __str__(self) -> str:
        return "{" + ", ".join(sorted(self.true)) + "}"


@dataclass(frozen=True)
class GeometricTheory:
    """Proposition symbols and sequents between finite geometric formulas."""

    symbols: tuple[str, ...]
    sequents: tuple[Sequent, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.symbols)) != len(self.symbols):
            raise InvalidStructureError("Duplicate proposition symbols", witness=self.symbols)
        declared = set(self.symbols)
        for i, sequent in enumerate(self.sequents):
            unknown = (symbols_of(sequent.lhs) | symbols_of(sequent.rhs)) - declared
            if unknown:
                raise InvalidStructureError(f"Sequent {i} uses undeclared symbols {sorted(unknown)}", witness=(i, tuple(sorted(unknown))))

    def first_violation(self, true: frozenset[str]) -> Sequent | None:
        return next((sequent for sequent in self.sequents if not sequent.holds(true)), None)

    def satisfied_by(self, true: frozenset[str]) -> bool:
        return self.first_violation(true) is None


def enumerate_models(T: GeometricTheory) -> tuple[TheoryModel, ...]:
    """
    All boolean assignments satisfying every sequent.

    Models are listed by increasing number of true symbols, then by symbol order.

    Raises:
        ExplosionError: if the theory has more than MAX_SYMBOLS symbols
    """
    if len(T.symbols) > MAX_SYMBOLS:
        raise ExplosionError("assignments", 2 ** len(T.symbols), 2**MAX_SYMBOLS)
    found = []
    for size in range(len(T.symbols) + 1):
        for chosen in itertools.combinations(T.symbols, size):
            true = frozenset(chosen)
            if T.satisfied_by(true):
                found.append(TheoryModel(true))
    logger.debug("%d models over %d symbols", len(found), len(T.symbols))
    return tuple(found)


def filter_symbol(u: Hashable) -> str:
    return f"<{u}>"


def _symbol_table(P: FinitePreorder) -> dict[Hashable, str]:
    table = {u: filter_symbol(u) for u in P.elements}
    if len(set(table.values())) != len(table):
        raise InvalidStructureError("Poset elements print identically; filter symbols would collide", witness=tuple(table.values()))
    return table


def filt_theory(P: FinitePoset) -> GeometricTheory:
    """
    The theory of filters on P.

    Symbols <u> for u in P with up-closure <u> ⊢ <v> for u <= v, inhabitation
    ⊤ ⊢ ⋁<u>, and directedness <u> ∧ <v> ⊢ ⋁{<w> | w <= u, w <= v}.
    """
    sym = _symbol_table(P)
    elements = P.elements
    sequents = [Sequent(Symbol(sym[u]), Symbol(sym[v])) for u in elements for v in elements if P.le(u, v)]
    sequents.append(Sequent(TOP, Disj(tuple(Symbol(sym[u]) for u in elements))))
    for i, u in enumerate(elements):
        for v in elements[i:]:
            lower = tuple(Symbol(sym[w]) for w in elements if P.le(w, u) and P.le(w, v))
            sequents.append(Sequent(Conj((Symbol(sym[u]), Symbol(sym[v]))), Disj(lower)))
    return GeometricTheory(tuple(sym[u] for u in elements), tuple(sequents))


def chain_filt_theory(P: FinitePoset) -> GeometricTheory:
    """Filter theory of a total order, with the directedness axioms dropped."""
    for u in P.elements:
        for v in P.elements:
            if not (P.le(u, v) or P.le(v, u)):
                raise InvalidStructureError(f"{u!r} and {v!r} are incomparable; the poset is not a chain", witness=(u, v))
    sym = _symbol_table(P)
    sequents = [Sequent(Symbol(sym[u]), Symbol(sym[v])) for u in P.elements for v in P.elements if P.le(u, v)]
    sequents.append(Sequent(TOP, Disj(tuple(Symbol(sym[u]) for u in P.elements))))
    return GeometricTheory(tuple(sym[u] for u in P.elements), tuple(sequents))


def filters_oracle(P: FinitePreorder) -> tuple[frozenset[Hashable], ...]:
    """Nonempty, upward closed, downward directed subsets, by direct subset enumeration."""
    n = len(P.elements)
    if n > MAX_SYMBOLS:
        raise ExplosionError("subsets", 2**n, 2**MAX_SYMBOLS)
    found = []
    for size in range(1, n + 1):
        for chosen in itertools.combinations(P.elements, size):
            subset = frozenset(chosen)
            if not all(P.up(u) <= subset for u in subset):
                continue
            if all(any(P.le(w, u) and P.le(w, v) for w in subset) for u in subset for v in subset):
                found.append(subset)
    return tuple(found)


def filters_as_models(P: FinitePreorder) -> frozenset[TheoryModel]:
    """The oracle's filters read as models of filt_theory(P)."""
    sym = _symbol_table(P)
    return frozenset(TheoryModel(frozenset(sym[u] for u in F)) for F in filters_oracle(P))


def _top_and_meets(P: FinitePoset) -> tuple[Hashable, dict[tuple[Hashable, Hashable], Hashable]]:
    top = next((t for t in P.elements if all(P.le(u, t) for u in P.elements)), None)
    if top is None:
        raise InvalidStructureError("cartesian_simplify needs a top element")
    meets = {}
    for u in P.elements:
        for v in P.elements:
            lower = [w for w in P.elements if P.le(w, u) and P.le(w, v)]
            greatest = next((w for w in lower if all(P.le(x, w) for x in lower)), None)
            if greatest is None:
                raise InvalidStructureError(f"{u!r} and {v!r} have no meet", witness=(u, v))
            meets[(u, v)] = greatest
    return top, meets


def cartesian_simplify(P: FinitePoset) -> GeometricTheory:
    """
    The cartesian presentation of the filter theory of a meet-semilattice with top.

    Up-closure, ⊤ ⊢ <top> and <u> ∧ <v> ⊢ <u ∧ v>; the disjunctive axioms are gone.

    Raises:
        InvalidStructureError: if P lacks a top element or some binary meet
    """
    top, meets = _top_and_meets(P)
    sym = _symbol_table(P)
    sequents = [Sequent(Symbol(sym[u]), Symbol(sym[v])) for u in P.elements for v in P.elements if P.le(u, v)]
    sequents.append(Sequent(TOP, Symbol(sym[top])))
    for i, u in enumerate(P.elements):
        for v in P.elements[i:]:
            sequents.append(Sequent(Conj((Symbol(sym[u]), Symbol(sym[v]))), Symbol(sym[meets[(u, v)]])))
    return GeometricTheory(tuple(sym[u] for u in P.elements), tuple(sequents))


def indexed(name: str, index: str = "k") -> str:
    return f"{name}[{index}]"


@dataclass(frozen=True)
class BagTheory:
    """
    The theory of a sort K with a K-indexed family of models of `base`.

    Each symbol φ becomes a predicate φ[k] and each sequent φ ⊢ ψ becomes
    k : K | φ[k] ⊢ ψ[k]. `inhabited` adds the axiom ⊢ ∃k : K. ⊤.
    """

    sort: str
    predicates: tuple[str, ...]
    sequents: tuple[Sequent, ...]
    inhabited: bool
    base: GeometricTheory = field(compare=False)

    def render(self) -> list[str]:
        lines = [f"sort {self.sort}"]
        lines.extend(f"predicate k : {self.sort} | {p}" for p in self.predicates)
        lines.extend(f"k : {self.sort} | {sequent}" for sequent in self.sequents)
        if self.inhabited:
            lines.append(f"⊢ ∃k : {self.sort}. ⊤")
        return lines


def _bag(T: GeometricTheory, inhabited: bool) -> BagTheory:
    mapping = {s: indexed(s) for s in T.symbols}
    sequents = tuple(Sequent(rename_formula(s.lhs, mapping), rename_formula(s.rhs, mapping)) for s in T.sequents)
    return BagTheory("K", tuple(mapping[s] for s in T.symbols), sequents, inhabited, base=T)


def bag_theory(T: GeometricTheory) -> BagTheory:
    return _bag(T, inhabited=False)


def ibag_theory(T: GeometricTheory) -> BagTheory:
    return _bag(T, inhabited=True)


def theory_of_object() -> BagTheory:
    """A single sort, no predicates, no axioms."""
    return BagTheory("K", (), (), False, base=GeometricTheory(()))


def theory_of_inhabited_object() -> BagTheory:
    return BagTheory("K", (), (), True, base=GeometricTheory(()))


class BagModel(NamedTuple):
    """An index set {0, ..., size-1} with one model of the base theory per index."""

    size: int
    family: tuple[TheoryModel, ...]


class BagEnumeration(NamedTuple):
    """Bag models by index-set size: raw (labelled) counts and counts up to relabelling."""

    models: tuple[BagModel, ...]
    raw_counts: dict[int, int]
    iso_counts: dict[int, int]

    @property
    def raw_total(self) -> int:
        return sum(self.raw_counts.values())

    @property
    def iso_total(self) -> int:
        return sum(self.iso_counts.values())


def bag_model_holds(B: BagTheory, model: BagModel) -> bool:
    """Check every indexed sequent at every index, and inhabitation when required."""
    if B.inhabited and model.size == 0:
        return False
    for member in model.family:
        true = frozenset(indexed(s) for s in member.true)
        if not all(sequent.holds(true) for sequent in B.sequents):
            return False
    return True


def enumerate_bag_models(B: BagTheory, max_index: int, cap: int = DEFAULT_BAG_CAP) -> BagEnumeration:
    """
    All bag models with index sets of size at most `max_index`.

    Every assignment of the predicates at every index is a candidate, and a candidate is
    kept iff `bag_model_holds` accepts it. Models of the base theory play no part in the
    search, so the counts can be compared against powers of the number of base models.

    Raises:
        ExplosionError: if more than `cap` candidate families would be tried
    """
    sizes = [m for m in range(max_index + 1) if not (B.inhabited and m == 0)]
    estimate = sum(2 ** (len(B.base.symbols) * m) for m in sizes)
    if estimate > cap:
        raise ExplosionError("bag model candidates", estimate, cap)

    per_index = [
        TheoryModel(frozenset(chosen)) for size in range(len(B.base.symbols) + 1) for chosen in itertools.combinations(B.base.symbols, size)
    ]

    models: list[BagModel] = []
    raw_counts: dict[int, int] = {}
    iso_counts: dict[int, int] = {}
    for m in sizes:
        raw = 0
        shapes: set[tuple[tuple[str, ...], ...]] = set()
        for family in itertools.product(per_index, repeat=m):
            model = BagModel(m, family)
            if bag_model_holds(B, model):
                models.append(model)
                raw += 1
                shapes.add(tuple(sorted(tuple(sorted(member.true)) for member in family)))
        raw_counts[m] = raw
        iso_counts[m] = len(shapes)
        logger.debug("bag models of size %d: %d of %d candidates", m, raw, len(per_index) ** m)

    return BagEnumeration(tuple(models), raw_counts, iso_counts)


def rename_theory(T: GeometricTheory, mapping: Mapping[str, str]) -> GeometricTheory:
    """Translate along an injective renaming of symbols."""
    if set(mapping) != set(T.symbols):
        raise InvalidStructureError("renaming must cover exactly the symbols of the theory", witness=tuple(sorted(set(mapping) ^ set(T.symbols))))
    if len(set(mapping.values())) != len(mapping):
        raise InvalidStructureError("renaming is not injective", witness=tuple(sorted(mapping.values())))
    return GeometricTheory(
        tuple(mapping[s] for s in T.symbols),
        tuple(Sequent(rename_formula(s.lhs, mapping), rename_formula(s.rhs, mapping)) for s in T.sequents),
    )


def rename_bag_theory(B: BagTheory, mapping: Mapping[str, str]) -> BagTheory:
    """Apply a base renaming to a bag theory, predicate by predicate."""
    lifted = {indexed(s): indexed(t) for s, t in mapping.items()}
    return BagTheory(
        B.sort,
        tuple(lifted[p] for p in B.predicates),
        tuple(Sequent(rename_formula(s.lhs, lifted), rename_formula(s.rhs, lifted)) for s in B.sequents),
        B.inhabited,
        base=rename_theory(B.base, mapping),
    )


def restrict_model(model: TheoryModel, mapping: Mapping[str, str]) -> TheoryModel:
    """Pull a model of the renamed theory back to the original symbols."""
    return TheoryModel(frozenset(s for s, t in mapping.items() if t in model.true))
