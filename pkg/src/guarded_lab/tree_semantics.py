"""
The topos of trees as demand-driven stage-indexed sets.

Stages are natural numbers; a StagedSet is asked for its elements at a stage only when
some computation needs them, and memoizes the answer. Exhaustive checks take an explicit
number of stages N and inspect stages 0..N-1.
"""

import itertools
import logging
import threading
from collections.abc import Callable, Hashable, Iterable, Sequence

from .errors import ExplosionError, InvalidStructureError, NaturalityError
from .order_core import AxiomCheck

logger = logging.getLogger(__name__)

STAR = "*"
DEFAULT_VERIFY_STAGES = 3
DEFAULT_SEARCH_CAP = 100_000

ElementsFn = Callable[[int], Iterable[Hashable]]
RestrictFn = Callable[[int, Hashable], Hashable]
FiberFn = Callable[[int, Hashable], Iterable[Hashable]]
ContainsFn = Callable[[int, Hashable], bool]


class StagedSet:
    """
    A presheaf on the chain 0 <= 1 <= 2 <= ..., evaluated on demand.

    Args:
        name: Display name
        elements: Stage n -> the finite set X(n)
        restrict: (n, x in X(n+1)) -> element of X(n)
        fiber: Optional fast path for the elements of X(n+1) over y in X(n)
        contains: Optional fast membership test
    """

    def __init__(
        self,
        name: str,
        elements: ElementsFn,
        restrict: RestrictFn,
        fiber: FiberFn | None = None,
        contains: ContainsFn | None = None,
    ) -> None:
        self.name = name
        self._elements = elements
        self._restrict = restrict
        self._fiber = fiber
        self._contains = contains
        self._stages: dict[int, tuple[Hashable, ...]] = {}
        self._members: dict[int, frozenset[Hashable]] = {}
        self._lock = threading.Lock()
        # set by `later` so that gfix can check its argument
        self.delayed: StagedSet | None = None

    def at(self, n: int) -> tuple[Hashable, ...]:
        if n < 0:
            raise InvalidStructureError(f"{self.name}: negative stage {n}", witness=n)
        with self._lock:
            if n not in self._stages:
                self._stages[n] = tuple(self._elements(n))
            return self._stages[n]

    def contains(self, n: int, x: Hashable) -> bool:
        if self._contains is not None:
            return self._contains(n, x)
        elements = self.at(n)
        with self._lock:
            if n not in self._members:
                self._members[n] = frozenset(elements)
            return x in self._members[n]

    def restrict(self, n: int, x: Hashable) -> Hashable:
        """The restriction X(n+1) -> X(n)."""
        return self._restrict(n, x)

    def restrict_to(self, target: int, source: int, x: Hashable) -> Hashable:
        """Restrict x in X(source) down to X(target)."""
        if target > source:
            raise InvalidStructureError(f"{self.name}: cannot restrict stage {source} up to {target}", witness=(target, source))
        for n in range(source - 1, target - 1, -1):
            x = self._restrict(n, x)
        return x

    def fiber(self, n: int, y: Hashable) -> tuple[Hashable, ...]:
        """Elements of X(n+1) whose restriction is y."""
        if self._fiber is not None:
            return tuple(self._fiber(n, y))
        return tuple(x for x in self.at(n + 1) if self._restrict(n, x) == y)

    def check_restrictions(self, stages: int) -> None:
        """Raise if some restriction leaves X(n) for n < stages."""
        for n in range(stages):
            for x in self.at(n + 1):
                y = self._restrict(n, x)
                if not self.contains(n, y):
                    raise InvalidStructureError(f"{self.name}: restriction of {x!r} at stage {n + 1} leaves stage {n}", witness=(n, x))

    def __repr__(self) -> str:
        return f"StagedSet({self.name})"


class StagedMap:
    """
    A natural transformation between staged sets.

    Naturality is verified for the first `verify_up_to` stages at construction and can be
    re-checked at any bound with `check_naturality`.

    Raises:
        NaturalityError: if a component fails naturality or leaves its target
    """

    def __init__(
        self,
        source: StagedSet,
        target: StagedSet,
        component: Callable[[int, Hashable], Hashable],
        name: str = "",
        verify_up_to: int = DEFAULT_VERIFY_STAGES,
    ) -> None:
        self.source = source
        self.target = target
        self.component = component
        self.name = name or f"{source.name} -> {target.name}"
        if verify_up_to:
            self.check_naturality(verify_up_to)

    def __call__(self, n: int, x: Hashable) -> Hashable:
        return self.component(n, x)

    def naturality_failure(self, stages: int) -> tuple[int, Hashable] | None:
        """First (stage, element) where the naturality square fails, or None."""
        for x in self.source.at(0):
            if not self.target.contains(0, self.component(0, x)):
                return (0, x)
        for n in range(stages - 1):
            for x in self.source.at(n + 1):
                image = self.component(n + 1, x)
                if not self.target.contains(n + 1, image):
                    return (n + 1, x)
                if self.target.restrict(n, image) != self.component(n, self.source.restrict(n, x)):
                    return (n + 1, x)
        return None

    def check_naturality(self, stages: int) -> None:
        failure = self.naturality_failure(stages)
        if failure is not None:
            stage, element = failure
            raise NaturalityError(f"{self.name} is not natural at stage {stage} on {element!r}", stage, element)

    def then(self, other: "StagedMap") -> "StagedMap":
        """Diagrammatic composite: first self, then other."""
        return StagedMap(self.source, other.target, lambda n, x: other(n, self(n, x)), f"{self.name} ; {other.name}", verify_up_to=0)

    def __repr__(self) -> str:
        return f"StagedMap({self.name})"


class GlobalElement:
    """A compatible family of picks, one per stage, computed on demand."""

    def __init__(self, of: StagedSet, pick: Callable[[int], Hashable], name: str = "") -> None:
        self.of = of
        self._pick = pick
        self.name = name or f"element of {of.name}"
        self._values: dict[int, Hashable] = {}
        self._lock = threading.Lock()

    def at(self, n: int) -> Hashable:
        with self._lock:
            if n not in self._values:
                self._values[n] = self._pick(n)
            return self._values[n]

    def prefix(self, stages: int) -> tuple[Hashable, ...]:
        return tuple(self.at(n) for n in range(stages))

    def compatibility_failure(self, stages: int) -> int | None:
        """First stage n + 1 whose pick does not restrict to the pick at n."""
        for n in range(stages - 1):
            if self.of.restrict(n, self.at(n + 1)) != self.at(n):
                return n + 1
        return None

    def agrees_with(self, other: "GlobalElement", stages: int) -> bool:
        return self.prefix(stages) == other.prefix(stages)

    def __repr__(self) -> str:
        return f"GlobalElement({self.name})"


def terminal() -> StagedSet:
    return StagedSet("1", lambda n: (STAR,), lambda n, x: STAR)


def constant(values: Sequence[Hashable], name: str | None = None) -> StagedSet:
    """The constant presheaf: X(n) = values, identity restrictions."""
    carrier = tuple(values)
    return StagedSet(name or f"Const{list(carrier)!r}", lambda n: carrier, lambda n, x: x, fiber=lambda n, y: (y,))


def tabulated(name: str, levels: Sequence[Sequence[Hashable]], restrictions: Sequence[dict[Hashable, Hashable]]) -> StagedSet:
    """
    A staged set known only up to `len(levels)` stages.

    `restrictions[n]` maps each element of levels[n+1] to an element of levels[n].
    Demanding a later stage raises InvalidStructureError.
    """
    if len(restrictions) != max(len(levels) - 1, 0):
        raise InvalidStructureError("need one restriction table between consecutive levels", witness=(len(levels), len(restrictions)))
    frozen_levels = tuple(tuple(level) for level in levels)
    tables = tuple(dict(table) for table in restrictions)

    def elements(n: int) -> tuple[Hashable, ...]:
        if n >= len(frozen_levels):
            raise InvalidStructureError(f"{name}: stage {n} is beyond the {len(frozen_levels)} tabulated stages", witness=n)
        return frozen_levels[n]

    def restrict(n: int, x: Hashable) -> Hashable:
        if n >= len(tables):
            raise InvalidStructureError(f"{name}: no restriction tabulated from stage {n + 1}", witness=n)
        return tables[n][x]

    staged = StagedSet(name, elements, restrict)
    staged.check_restrictions(len(tables))
    return staged


def later(X: StagedSet) -> StagedSet:
    """The later modality: stage 0 is a singleton, stage n+1 is X(n)."""

    def elements(n: int) -> Iterable[Hashable]:
        return (STAR,) if n == 0 else X.at(n - 1)

    def restrict(n: int, x: Hashable) -> Hashable:
        return STAR if n == 0 else X.restrict(n - 1, x)

    def fiber(n: int, y: Hashable) -> Iterable[Hashable]:
        return X.at(0) if n == 0 else X.fiber(n - 1, y)

    def contains(n: int, x: Hashable) -> bool:
        return x == STAR if n == 0 else X.contains(n - 1, x)

    delayed = StagedSet(f"▷{X.name}", elements, restrict, fiber=fiber, contains=contains)
    delayed.delayed = X
    return delayed


def next_map(X: StagedSet) -> StagedMap:
    """next: X -> later(X), the restriction map one stage down."""
    return StagedMap(X, later(X), lambda n, x: STAR if n == 0 else X.restrict(n - 1, x), name=f"next[{X.name}]", verify_up_to=0)


def later_map(f: StagedMap) -> StagedMap:
    """Functorial action of later on a map."""
    return StagedMap(
        later(f.source),
        later(f.target),
        lambda n, x: STAR if n == 0 else f(n - 1, x),
        name=f"▷({f.name})",
        verify_up_to=0,
    )


def check_wellpointed(X: StagedSet, stages: int) -> AxiomCheck:
    """Compare next at later(X) with later applied to next at X, pointwise up to `stages`."""
    lhs = next_map(later(X))
    rhs = later_map(next_map(X))
    source = lhs.source
    for n in range(stages):
        for x in source.at(n):
            if lhs(n, x) != rhs(n, x):
                return AxiomCheck("wellpointed", False, (n, x))
    return AxiomCheck("wellpointed", True)


def gfix(f: StagedMap) -> GlobalElement:
    """
    The guarded fixed point of f: later(A) -> A.

    pick(0) = f(0, *) and pick(n+1) = f(n+1, pick(n)); computed iteratively and memoized.
    """
    if f.source.delayed is not f.target:
        raise InvalidStructureError(f"gfix needs a map later(A) -> A, got {f.name}", witness=f.name)

    values: list[Hashable] = []
    lock = threading.Lock()

    def pick(n: int) -> Hashable:
        with lock:
            while len(values) <= n:
                m = len(values)
                values.append(f(0, STAR) if m == 0 else f(m, values[m - 1]))
            return values[n]

    return GlobalElement(f.target, pick, name=f"fix({f.name})")


def satisfies_fixed_point(f: StagedMap, family: Sequence[Hashable]) -> bool:
    """Check the equation family = f . next . family on the given stages."""
    A = f.target
    for n, value in enumerate(family):
        delayed = STAR if n == 0 else A.restrict(n - 1, value)
        if f(n, delayed) != value:
            return False
    return True


def fixed_point_families(f: StagedMap, stages: int, cap: int = DEFAULT_SEARCH_CAP) -> list[tuple[Hashable, ...]]:
    """
    All compatible families on stages 0..stages-1 satisfying the fixed-point equation.

    The search walks compatible families depth first and prunes at the first stage where
    the equation fails.

    Raises:
        ExplosionError: if more than `cap` partial families are visited
    """
    A = f.target
    found: list[tuple[Hashable, ...]] = []
    if stages <= 0:
        return [()]

    visited = 0
    stack: list[tuple[Hashable, ...]] = [(x,) for x in reversed(A.at(0)) if f(0, STAR) == x]
    while stack:
        visited += 1
        if visited > cap:
            raise ExplosionError(f"fixed-point families of {f.name}", visited, cap)
        family = stack.pop()
        n = len(family) - 1
        if n + 1 == stages:
            found.append(family)
            continue
        wanted = f(n + 1, family[n])
        for x in reversed(A.fiber(n, family[n])):
            if x == wanted:
                stack.append(family + (x,))

    logger.debug("%s: %d fixed-point families on %d stages (%d visited)", f.name, len(found), stages, visited)
    return found


def check_fix_unique(f: StagedMap, stages: int, cap: int = DEFAULT_SEARCH_CAP) -> bool:
    """True iff exactly one family satisfies the fixed-point equation and it is gfix(f)."""
    families = fixed_point_families(f, stages, cap)
    return len(families) == 1 and families[0] == gfix(f).prefix(stages)


class GuardedStream:
    """
    Guarded streams over a finite alphabet.

    Stage n holds the sequences of length n+1 and restriction drops the last entry, so
    cons and uncons exhibit S(n) as the product of the alphabet with later(S)(n).
    """

    def __init__(self, alphabet: Sequence[Hashable]) -> None:
        self.alphabet = tuple(alphabet)
        if not self.alphabet:
            raise InvalidStructureError("Guarded streams need a nonempty alphabet")
        letters = frozenset(self.alphabet)
        self.staged = StagedSet(
            f"Str{list(self.alphabet)!r}",
            lambda n: itertools.product(self.alphabet, repeat=n + 1),
            lambda n, s: s[:-1],
            fiber=lambda n, s: (s + (a,) for a in self.alphabet),
            contains=lambda n, s: isinstance(s, tuple) and len(s) == n + 1 and all(a in letters for a in s),
        )
        self.delayed = later(self.staged)

    def cons(self, n: int, a: Hashable, t: Hashable) -> tuple[Hashable, ...]:
        if n == 0:
            if t != STAR:
                raise InvalidStructureError(f"cons at stage 0 takes the unit tail, got {t!r}", witness=t)
            return (a,)
        if not self.staged.contains(n - 1, t):
            raise InvalidStructureError(f"cons at stage {n} needs a tail of length {n}, got {t!r}", witness=t)
        return (a,) + tuple(t)  # type: ignore[arg-type]

    def uncons(self, n: int, s: Hashable) -> tuple[Hashable, Hashable]:
        if not self.staged.contains(n, s):
            raise InvalidStructureError(f"{s!r} is not a stream at stage {n}", witness=s)
        assert isinstance(s, tuple)
        return s[0], (STAR if n == 0 else s[1:])

    def map_later(self, fn: Callable[[Hashable], Hashable]) -> Callable[[int, Hashable], Hashable]:
        """Apply fn letterwise to an element of later(S) at stage n."""

        def mapped(n: int, t: Hashable) -> Hashable:
            if n == 0:
                return STAR
            assert isinstance(t, tuple)
            return tuple(fn(a) for a in t)

        return mapped

    def check_iso(self, stages: int) -> AxiomCheck:
        """cons and uncons are mutually inverse on every stage below `stages`."""
        for n in range(stages):
            for a in self.alphabet:
                for t in self.delayed.at(n):
                    if self.uncons(n, self.cons(n, a, t)) != (a, t):
                        return AxiomCheck("stream_iso", False, (n, a, t))
            for s in self.staged.at(n):
                if self.cons(n, *self.uncons(n, s)) != s:
                    return AxiomCheck("stream_iso", False, (n, s))
        return AxiomCheck("stream_iso", True)


def constant_step(A: StagedSet, family: GlobalElement) -> StagedMap:
    """The step ignoring its input and returning a fixed compatible family."""
    return StagedMap(later(A), A, lambda n, _: family.at(n), name=f"const({family.name})")


def cycle_step(S: GuardedStream, values: Sequence[Hashable]) -> StagedMap:
    """Constant step whose family is the periodic stream through `values`."""
    cycle = tuple(values)
    if not cycle:
        raise InvalidStructureError("constant family needs at least one value")
    family = GlobalElement(S.staged, lambda n: tuple(cycle[i % len(cycle)] for i in range(n + 1)), name=f"cycle{list(cycle)!r}")
    return constant_step(S.staged, family)


def cons_literal_step(S: GuardedStream, value: Hashable) -> StagedMap:
    """cons value: its fixed point is the constant stream of `value`."""
    if value not in S.alphabet:
        raise InvalidStructureError(f"{value!r} is not in the alphabet", witness=value)
    return StagedMap(S.delayed, S.staged, lambda n, t: S.cons(n, value, t), name=f"cons {value!r}")


def cons_map_step(S: GuardedStream, head: Hashable, fn: Callable[[Hashable], Hashable], name: str) -> StagedMap:
    """cons head after mapping fn over the delayed tail."""
    mapped = S.map_later(fn)
    return StagedMap(S.delayed, S.staged, lambda n, t: S.cons(n, head, mapped(n, t)), name=name)


def map_successor_step(S: GuardedStream, start: Hashable | None = None) -> StagedMap:
    """
    cons start after the cyclic successor in alphabet order.

    Over the alphabet 0..m-1 the fixed point counts up from `start` modulo m.
    """
    letters = S.alphabet
    head = letters[0] if start is None else start
    if head not in letters:
        raise InvalidStructureError(f"{head!r} is not in the alphabet", witness=head)
    successor = {a: letters[(i + 1) % len(letters)] for i, a in enumerate(letters)}
    return cons_map_step(S, head, successor.__getitem__, name=f"cons {head!r} . map succ")


def alternating_step(S: GuardedStream) -> StagedMap:
    """Over a two-letter alphabet (a, b): cons a after swapping, so the fixed point is a, b, a, b, ..."""
    if len(S.alphabet) != 2:
        raise InvalidStructureError(f"alternation needs exactly two letters, got {list(S.alphabet)!r}", witness=S.alphabet)
    a, b = S.alphabet
    swap = {a: b, b: a}
    return cons_map_step(S, a, swap.__getitem__, name=f"cons {a!r} . map negate")
