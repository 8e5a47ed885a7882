"""
Clock categories, multi-clock presheaves, clock quantification and coinductive streams.

A clock context assigns a depth to each clock name. The clock category has these contexts
as objects and, as morphisms (U, f) -> (V, g), the functions h: U -> V with g(h(u)) <= f(u).
It is checked against the opposite of the free finite product completion of the chain
omega on bounded fragments. Presheaves here are covariant on the clock category and are
evaluated on demand.
"""

import itertools
import logging
import threading
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from typing import NamedTuple, Protocol

from .errors import ClockError, InvalidStructureError
from .order_core import AxiomCheck, AxiomReport, FinitePreorder, chain
from .tree_semantics import (
    STAR,
    GuardedStream,
    StagedMap,
    StagedSet,
    alternating_step,
    check_fix_unique,
    cons_literal_step,
    gfix,
    later,
    map_successor_step,
)

logger = logging.getLogger(__name__)

# composition laws are checked on contexts with at most LAW_CLOCKS clocks of depth <= LAW_DEPTH
LAW_CLOCKS = 2
LAW_DEPTH = 1


class ClockContext(NamedTuple):
    """Clock names with their depths, kept sorted by name."""

    clocks: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, depths: Mapping[str, int]) -> "ClockContext":
        for name, depth in depths.items():
            if depth < 0:
                raise InvalidStructureError(f"clock {name!r} has negative depth {depth}", witness=(name, depth))
        return cls(tuple(sorted(depths.items())))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.clocks)

    def has_clock(self, k: str) -> bool:
        return any(name == k for name, _ in self.clocks)

    def depth(self, k: str) -> int:
        for name, depth in self.clocks:
            if name == k:
                return depth
        raise ClockError(f"clock {k!r} is not in context {self.label()}", witness=k)

    def with_depth(self, k: str, depth: int) -> "ClockContext":
        depths = dict(self.clocks)
        depths[k] = depth
        return ClockContext.of(depths)

    def without(self, k: str) -> "ClockContext":
        return ClockContext(tuple((name, depth) for name, depth in self.clocks if name != k))

    def label(self) -> str:
        return "{" + ", ".join(f"{name}:{depth}" for name, depth in self.clocks) + "}"


EMPTY_CONTEXT = ClockContext()


def kcat_hom_valid(src: ClockContext, dst: ClockContext, h: Mapping[str, str]) -> bool:
    """True iff h is a total function on the clocks of src into those of dst that never raises a depth."""
    if set(h) != set(src.names):
        return False
    for u, v in h.items():
        if not dst.has_clock(v) or dst.depth(v) > src.depth(u):
            return False
    return True


class KMorphism(NamedTuple):
    """A morphism of the clock category, with its mapping sorted by source clock."""

    source: ClockContext
    target: ClockContext
    mapping: tuple[tuple[str, str], ...]

    @classmethod
    def of(cls, source: ClockContext, target: ClockContext, mapping: Mapping[str, str]) -> "KMorphism":
        if not kcat_hom_valid(source, target, mapping):
            raise ClockError(f"{dict(mapping)!r} is not a morphism {source.label()} -> {target.label()}", witness=dict(mapping))
        return cls(source, target, tuple(sorted(mapping.items())))

    @classmethod
    def identity(cls, ctx: ClockContext) -> "KMorphism":
        return cls(ctx, ctx, tuple((k, k) for k in ctx.names))

    @classmethod
    def inclusion(cls, small: ClockContext, big: ClockContext) -> "KMorphism":
        return cls.of(small, big, {k: k for k in small.names})

    @classmethod
    def decrement(cls, ctx: ClockContext, k: str) -> "KMorphism":
        """The morphism ctx -> ctx[k -> depth - 1] fixing every clock."""
        depth = ctx.depth(k)
        if depth == 0:
            raise ClockError(f"clock {k!r} is already at depth 0 in {ctx.label()}", witness=k)
        return cls(ctx, ctx.with_depth(k, depth - 1), tuple((u, u) for u in ctx.names))

    def apply(self, u: str) -> str:
        for source, target in self.mapping:
            if source == u:
                return target
        raise ClockError(f"clock {u!r} is not in the source {self.source.label()}", witness=u)

    def fixes(self, k: str) -> bool:
        return self.source.has_clock(k) and self.target.has_clock(k) and self.apply(k) == k

    def then(self, other: "KMorphism") -> "KMorphism":
        if other.source != self.target:
            raise ClockError("morphisms are not composable", witness=(self.target.label(), other.source.label()))
        return KMorphism(self.source, other.target, tuple((u, other.apply(v)) for u, v in self.mapping))

    def shift(self, k: str) -> "KMorphism":
        """The same mapping between the contexts with k one step earlier."""
        return KMorphism(
            self.source.with_depth(k, self.source.depth(k) - 1),
            self.target.with_depth(k, self.target.depth(k) - 1),
            self.mapping,
        )

    def extend(self, k: str, source_depth: int, target_depth: int) -> "KMorphism":
        """Add a fresh clock k mapped to itself."""
        mapping = dict(self.mapping)
        mapping[k] = k
        return KMorphism.of(self.source.with_depth(k, source_depth), self.target.with_depth(k, target_depth), mapping)


class FiniteCategory(Protocol):
    """A category given by enumerable objects and hom-sets; `compose(f, g)` is f then g."""

    @property
    def objects(self) -> tuple[Hashable, ...]: ...

    def hom(self, a: Hashable, b: Hashable) -> tuple[Hashable, ...]: ...

    def identity(self, a: Hashable) -> Hashable: ...

    def compose(self, f: Hashable, g: Hashable) -> Hashable: ...


class PosetCategory:
    """A preorder as a thin category: one morphism (a, b) when a <= b."""

    def __init__(self, order: FinitePreorder) -> None:
        self.order = order

    @property
    def objects(self) -> tuple[Hashable, ...]:
        return self.order.elements

    def hom(self, a: Hashable, b: Hashable) -> tuple[Hashable, ...]:
        return ((a, b),) if self.order.le(a, b) else ()

    def identity(self, a: Hashable) -> Hashable:
        return (a, a)

    def compose(self, f: Hashable, g: Hashable) -> Hashable:
        assert isinstance(f, tuple) and isinstance(g, tuple)
        if f[1] != g[0]:
            raise InvalidStructureError("morphisms are not composable", witness=(f, g))
        return (f[0], g[1])


def omega_category(max_depth: int) -> PosetCategory:
    """The chain 0 <= 1 <= ... <= max_depth as a category."""
    return PosetCategory(chain(max_depth + 1))


class FPMorphism(NamedTuple):
    """
    A morphism of the finite product completion.

    `renaming[i]` is the index in the source feeding position i of the target, and
    `components[i]` is a base morphism source[renaming[i]] -> target[i].
    """

    source: tuple[Hashable, ...]
    target: tuple[Hashable, ...]
    renaming: tuple[int, ...]
    components: tuple[Hashable, ...]


class FPCategory:
    """The free finite product completion of a finite category, truncated at `max_size` factors."""

    def __init__(self, base: FiniteCategory, max_size: int) -> None:
        self.base = base
        self.max_size = max_size
        self._objects = tuple(obj for size in range(max_size + 1) for obj in itertools.product(base.objects, repeat=size))
        self._homs: dict[tuple[tuple[Hashable, ...], tuple[Hashable, ...]], tuple[FPMorphism, ...]] = {}
        self._lock = threading.Lock()

    @property
    def objects(self) -> tuple[tuple[Hashable, ...], ...]:
        return self._objects

    def hom(self, source: tuple[Hashable, ...], target: tuple[Hashable, ...]) -> tuple[FPMorphism, ...]:
        key = (source, target)
        with self._lock:
            cached = self._homs.get(key)
        if cached is not None:
            return cached

        found = []
        for renaming in itertools.product(range(len(source)), repeat=len(target)):
            choices = [self.base.hom(source[r], target[i]) for i, r in enumerate(renaming)]
            for components in itertools.product(*choices):
                found.append(FPMorphism(source, target, renaming, components))
        result = tuple(found)
        with self._lock:
            self._homs[key] = result
        return result

    def identity(self, obj: tuple[Hashable, ...]) -> FPMorphism:
        return FPMorphism(obj, obj, tuple(range(len(obj))), tuple(self.base.identity(x) for x in obj))

    def compose(self, f: FPMorphism, g: FPMorphism) -> FPMorphism:
        if f.target != g.source:
            raise InvalidStructureError("morphisms are not composable", witness=(f.target, g.source))
        renaming = tuple(f.renaming[r] for r in g.renaming)
        components = tuple(self.base.compose(f.components[r], g.components[i]) for i, r in enumerate(g.renaming))
        return FPMorphism(f.source, g.target, renaming, components)


def fp_completion(base: FiniteCategory, max_size: int) -> FPCategory:
    return FPCategory(base, max_size)


class KCategory:
    """
    A bounded fragment of the clock category.

    Objects use the clock names `names[:m]` for every m, with all depths up to
    `max_depth`. `nonempty` drops the empty context (the CLK variant); `fixing` keeps only
    contexts containing those clocks and morphisms fixing them.
    """

    def __init__(self, names: Sequence[str], max_depth: int, nonempty: bool = False, fixing: Iterable[str] = ()) -> None:
        self.names = tuple(names)
        self.max_depth = max_depth
        self.fixing = frozenset(fixing)
        objects = []
        for size in range(len(self.names) + 1):
            clocks = self.names[:size]
            if (nonempty and size == 0) or not self.fixing <= set(clocks):
                continue
            for depths in itertools.product(range(max_depth + 1), repeat=size):
                objects.append(ClockContext.of(dict(zip(clocks, depths, strict=True))))
        self._objects = tuple(objects)

    @property
    def objects(self) -> tuple[ClockContext, ...]:
        return self._objects

    def hom(self, source: ClockContext, target: ClockContext) -> tuple[KMorphism, ...]:
        found = []
        for images in itertools.product(target.names, repeat=len(source.names)):
            mapping = dict(zip(source.names, images, strict=True))
            if kcat_hom_valid(source, target, mapping) and all(mapping[k] == k for k in self.fixing):
                found.append(KMorphism(source, target, tuple(sorted(mapping.items()))))
        return tuple(found)

    def identity(self, ctx: ClockContext) -> KMorphism:
        return KMorphism.identity(ctx)

    def compose(self, f: KMorphism, g: KMorphism) -> KMorphism:
        return f.then(g)


def canonical_names(count: int) -> tuple[str, ...]:
    return tuple(f"k{i}" for i in range(count))


def kcat(max_clocks: int, max_depth: int) -> KCategory:
    return KCategory(canonical_names(max_clocks), max_depth)


def clk_category(max_clocks: int, max_depth: int) -> KCategory:
    """The nonempty clock contexts (CLK) on the same bounded fragment."""
    return KCategory(canonical_names(max_clocks), max_depth, nonempty=True)


def check_category_laws(cat: FiniteCategory, objects: Iterable[Hashable] | None = None) -> AxiomReport:
    """Identity, closure and associativity laws on the given objects (all objects by default)."""
    objs = tuple(cat.objects if objects is None else objects)
    homs = {(a, b): cat.hom(a, b) for a in objs for b in objs}
    hom_sets = {key: frozenset(value) for key, value in homs.items()}

    def composable() -> Iterator[tuple[Hashable, Hashable, Hashable, Hashable, Hashable]]:
        for a, b, c in itertools.product(objs, repeat=3):
            for f in homs[(a, b)]:
                for g in homs[(b, c)]:
                    yield a, c, f, g, cat.compose(f, g)

    identity = next(
        (
            (a, b, f)
            for (a, b), fs in homs.items()
            for f in fs
            if cat.compose(cat.identity(a), f) != f or cat.compose(f, cat.identity(b)) != f
        ),
        None,
    )
    closure = next(((a, c, f, g) for a, c, f, g, fg in composable() if fg not in hom_sets[(a, c)]), None)
    associativity = next(
        (
            (f, g, h)
            for _, c, f, g, fg in composable()
            for d in objs
            for h in homs[(c, d)]
            if cat.compose(fg, h) != cat.compose(f, cat.compose(g, h))
        ),
        None,
    )

    return AxiomReport(
        checks=(
            AxiomCheck("identity", identity is None, identity),
            AxiomCheck("closure", closure is None, closure),
            AxiomCheck("associativity", associativity is None, associativity),
        )
    )


def check_kcat_laws(max_clocks: int, max_depth: int) -> AxiomReport:
    return check_category_laws(kcat(max_clocks, max_depth))


def fp_to_context(obj: Sequence[int]) -> ClockContext:
    """The clock context named canonically after the positions of an FP(omega) object."""
    return ClockContext.of({f"k{i}": depth for i, depth in enumerate(obj)})


def fp_to_kmorphism(f: FPMorphism) -> KMorphism:
    """FP(omega) morphism Phi -> Psi as the clock morphism ctx(Psi) -> ctx(Phi), reversing direction."""
    source = fp_to_context(f.target)  # type: ignore[arg-type]
    target = fp_to_context(f.source)  # type: ignore[arg-type]
    return KMorphism(source, target, tuple(sorted((f"k{i}", f"k{r}") for i, r in enumerate(f.renaming))))


def fp_terminal_hom_counts(max_size: int) -> dict[tuple[int, int], int]:
    """Hom-set sizes of the finite product completion of the terminal category."""
    fp = FPCategory(PosetCategory(chain(1)), max_size)
    by_size = {len(obj): obj for obj in fp.objects}
    return {(m, n): len(fp.hom(by_size[m], by_size[n])) for m in by_size for n in by_size}


def check_fp_op_iso(max_clocks: int, max_depth: int, law_clocks: int = LAW_CLOCKS, law_depth: int = LAW_DEPTH) -> AxiomReport:
    """
    Check that reversing FP(omega) morphisms is an isomorphism onto the clock category.

    Objects and hom-sets are compared on contexts with at most `max_clocks` clocks and
    depths up to `max_depth`; preservation of composition is checked on the smaller
    fragment given by `law_clocks` and `law_depth`.
    """
    fp = FPCategory(omega_category(max_depth), max_clocks)
    K = kcat(max_clocks, max_depth)
    logger.debug("comparing %d FP(omega) objects with %d clock contexts", len(fp.objects), len(K.objects))

    mapped_objects = [fp_to_context(obj) for obj in fp.objects]  # type: ignore[arg-type]
    objects_ok = len(set(mapped_objects)) == len(mapped_objects) and set(mapped_objects) == set(K.objects)
    objects_witness = None if objects_ok else tuple(sorted(set(mapped_objects) ^ set(K.objects)))

    homs_witness = None
    for phi in fp.objects:
        for psi in fp.objects:
            image = [fp_to_kmorphism(f) for f in fp.hom(phi, psi)]
            expected = K.hom(fp_to_context(psi), fp_to_context(phi))  # type: ignore[arg-type]
            if len(set(image)) != len(image) or set(image) != set(expected):
                homs_witness = (phi, psi)
                break
        if homs_witness:
            break

    identity_witness = next(
        (obj for obj in fp.objects if fp_to_kmorphism(fp.identity(obj)) != K.identity(fp_to_context(obj))),  # type: ignore[arg-type]
        None,
    )

    small = [obj for obj in fp.objects if len(obj) <= law_clocks and all(d <= law_depth for d in obj)]  # type: ignore[operator]
    composition_witness = None
    for a, b, c in itertools.product(small, repeat=3):
        for f in fp.hom(a, b):
            for g in fp.hom(b, c):
                if fp_to_kmorphism(fp.compose(f, g)) != fp_to_kmorphism(g).then(fp_to_kmorphism(f)):
                    composition_witness = (f, g)
                    break
            if composition_witness:
                break
        if composition_witness:
            break

    return AxiomReport(
        checks=(
            AxiomCheck("objects_bijective", objects_ok, objects_witness),
            AxiomCheck("homs_bijective", homs_witness is None, homs_witness),
            AxiomCheck("preserves_identity", identity_witness is None, (identity_witness,) if identity_witness is not None else None),
            AxiomCheck("preserves_composition", composition_witness is None, composition_witness),
        )
    )


def check_clk_subcategory(max_clocks: int, max_depth: int) -> AxiomCheck:
    """CLK is the full subcategory of the clock category without the empty context."""
    K = kcat(max_clocks, max_depth)
    clk = clk_category(max_clocks, max_depth)
    expected = tuple(ctx for ctx in K.objects if ctx.names)
    if clk.objects != expected:
        return AxiomCheck("clk_full_subcategory", False, tuple(set(clk.objects) ^ set(expected)))
    for a in clk.objects:
        for b in clk.objects:
            if clk.hom(a, b) != K.hom(a, b):
                return AxiomCheck("clk_full_subcategory", False, (a, b))
    return AxiomCheck("clk_full_subcategory", True)


class SemidirectMorphism(NamedTuple):
    source: tuple[Hashable, Hashable]
    target: tuple[Hashable, Hashable]
    base: Hashable


class SemidirectCategory:
    """
    The Grothendieck construction of a set-valued presheaf O on a category E.

    Objects are pairs (u, v) with v in O(u); a morphism (u, v) -> (u', v') is a base
    morphism f: u -> u' with f*(v') = v.
    """

    def __init__(
        self,
        base: FiniteCategory,
        points: Callable[[Hashable], Iterable[Hashable]],
        reindex: Callable[[Hashable, Hashable], Hashable],
    ) -> None:
        self.base = base
        self.points = points
        self.reindex = reindex
        self._objects = tuple((u, v) for u in base.objects for v in points(u))

    @property
    def objects(self) -> tuple[tuple[Hashable, Hashable], ...]:
        return self._objects

    def hom(self, a: tuple[Hashable, Hashable], b: tuple[Hashable, Hashable]) -> tuple[SemidirectMorphism, ...]:
        return tuple(SemidirectMorphism(a, b, f) for f in self.base.hom(a[0], b[0]) if self.reindex(f, b[1]) == a[1])

    def identity(self, a: tuple[Hashable, Hashable]) -> SemidirectMorphism:
        return SemidirectMorphism(a, a, self.base.identity(a[0]))

    def compose(self, f: SemidirectMorphism, g: SemidirectMorphism) -> SemidirectMorphism:
        return SemidirectMorphism(f.source, g.target, self.base.compose(f.base, g.base))


def semidirect(
    base: FiniteCategory,
    points: Callable[[Hashable], Iterable[Hashable]],
    reindex: Callable[[Hashable, Hashable], Hashable],
) -> SemidirectCategory:
    return SemidirectCategory(base, points, reindex)


def clock_sort_semidirect(fp: FPCategory) -> SemidirectCategory:
    """FP(omega) with a designated clock: points of Phi are its positions, reindexed by renaming."""
    return semidirect(fp, lambda obj: range(len(obj)), lambda f, j: f.renaming[j])  # type: ignore[arg-type, attr-defined]


def project(m: SemidirectMorphism) -> Hashable:
    """The omega-morphism underlying m at the designated clock."""
    f = m.base
    assert isinstance(f, FPMorphism)
    return f.components[m.target[1]]  # type: ignore[index]


def check_semidirect_equivalence(max_clocks: int, max_depth: int, law_clocks: int = LAW_CLOCKS, law_depth: int = LAW_DEPTH) -> AxiomReport:
    """
    Compare the total category of the designated-clock construction with pointed contexts.

    For every depth n, the fiber over n is compared with the category of contexts
    Gamma x <n> and designation-preserving morphisms: the comparison must be fully
    faithful and essentially surjective. Also checks that the projection to omega is a
    functor (on the law fragment) with the expected cartesian lifts.
    """
    fp = FPCategory(omega_category(max_depth), max_clocks)
    omega = fp.base
    total = clock_sort_semidirect(fp)

    def depth_of(obj: tuple[Hashable, Hashable]) -> int:
        return obj[0][obj[1]]  # type: ignore[index, no-any-return]

    functor_witness = None
    for a in total.objects:
        if project(total.identity(a)) != omega.identity(depth_of(a)):
            functor_witness = (a,)
            break
    small = [a for a in total.objects if len(a[0]) <= law_clocks and all(d <= law_depth for d in a[0])]  # type: ignore[arg-type, operator]
    if functor_witness is None:
        for a, b, c in itertools.product(small, repeat=3):
            for f in total.hom(a, b):
                for g in total.hom(b, c):
                    if project(total.compose(f, g)) != omega.compose(project(f), project(g)):
                        functor_witness = (f, g)
                        break
                if functor_witness:
                    break
            if functor_witness:
                break

    lift_witness = None
    for psi, j in total.objects:
        for m in range(depth_of((psi, j)) + 1):
            source = (psi[:j] + (m,) + psi[j + 1 :], j)  # type: ignore[index, operator]
            lift = next((f for f in total.hom(source, (psi, j)) if f.base.renaming == tuple(range(len(psi)))), None)  # type: ignore[arg-type]
            if lift is None or project(lift) != (m, psi[j]):  # type: ignore[index]
                lift_witness = ((psi, j), m)
                break
        if lift_witness:
            break

    faithful_witness = None
    surjective_witness = None
    for n in range(max_depth + 1):
        pointed = [obj + (n,) for obj in fp.objects if len(obj) < max_clocks]
        for a in pointed:
            for b in pointed:
                expected = {f for f in fp.hom(a, b) if f.renaming[-1] == len(a) - 1}
                actual = {m.base for m in total.hom((a, len(a) - 1), (b, len(b) - 1))}
                if expected != actual and faithful_witness is None:
                    faithful_witness = (a, b)

        for phi, i in (obj for obj in total.objects if depth_of(obj) == n):
            if surjective_witness is not None:
                break
            gamma = phi[:i] + phi[i + 1 :] + (n,)  # type: ignore[index, operator]
            order = [p for p in range(len(phi)) if p != i] + [i]  # type: ignore[arg-type]
            there = next(
                (m for m in total.hom((phi, i), (gamma, len(gamma) - 1)) if m.base.renaming == tuple(order)),  # type: ignore[attr-defined]
                None,
            )
            back = None
            if there is not None:
                for candidate in total.hom((gamma, len(gamma) - 1), (phi, i)):
                    if total.compose(there, candidate) == total.identity((phi, i)) and total.compose(candidate, there) == total.identity(
                        (gamma, len(gamma) - 1)
                    ):
                        back = candidate
                        break
            if back is None:
                surjective_witness = ((phi, i),)

    return AxiomReport(
        checks=(
            AxiomCheck("projection_functor", functor_witness is None, functor_witness),
            AxiomCheck("cartesian_lifts", lift_witness is None, lift_witness),
            AxiomCheck("fully_faithful", faithful_witness is None, faithful_witness),
            AxiomCheck("essentially_surjective", surjective_witness is None, surjective_witness),
        )
    )


class MultiPresheaf:
    """
    A covariant functor on the clock category, evaluated on demand.

    `free_clocks` must occur in every context the presheaf is evaluated at, and
    restrictions are only defined along morphisms fixing them.
    """

    def __init__(
        self,
        name: str,
        elements: Callable[[ClockContext], Iterable[Hashable]],
        restrict: Callable[[KMorphism, Hashable], Hashable],
        free_clocks: Iterable[str] = (),
    ) -> None:
        self.name = name
        self.free_clocks = frozenset(free_clocks)
        self._elements = elements
        self._restrict = restrict
        self._stages: dict[ClockContext, tuple[Hashable, ...]] = {}
        self._lock = threading.Lock()

    def _require(self, ctx: ClockContext) -> None:
        missing = sorted(k for k in self.free_clocks if not ctx.has_clock(k))
        if missing:
            raise ClockError(f"{self.name} needs clocks {missing} but was demanded at {ctx.label()}", witness=tuple(missing))

    def at(self, ctx: ClockContext) -> tuple[Hashable, ...]:
        self._require(ctx)
        with self._lock:
            if ctx not in self._stages:
                self._stages[ctx] = tuple(self._elements(ctx))
            return self._stages[ctx]

    def restrict(self, h: KMorphism, x: Hashable) -> Hashable:
        self._require(h.source)
        for k in sorted(self.free_clocks):
            if not h.fixes(k):
                raise ClockError(f"{self.name} cannot be restricted along a morphism moving clock {k!r}", witness=k)
        return self._restrict(h, x)

    def check_functoriality(self, category: KCategory) -> AxiomCheck:
        """Identities and composites on the given fragment, which must fix the free clocks."""
        objects = category.objects
        for a in objects:
            for x in self.at(a):
                if self.restrict(KMorphism.identity(a), x) != x:
                    return AxiomCheck("functoriality", False, (a, x))
        for a, b, c in itertools.product(objects, repeat=3):
            for f in category.hom(a, b):
                for g in category.hom(b, c):
                    fg = f.then(g)
                    for x in self.at(a):
                        if self.restrict(fg, x) != self.restrict(g, self.restrict(f, x)):
                            return AxiomCheck("functoriality", False, (f, g, x))
        return AxiomCheck("functoriality", True)

    def __repr__(self) -> str:
        return f"MultiPresheaf({self.name})"


class MultiMap:
    """A natural transformation between multi-clock presheaves."""

    def __init__(self, source: MultiPresheaf, target: MultiPresheaf, component: Callable[[ClockContext, Hashable], Hashable], name: str = "") -> None:
        self.source = source
        self.target = target
        self.component = component
        self.name = name or f"{source.name} -> {target.name}"

    def __call__(self, ctx: ClockContext, x: Hashable) -> Hashable:
        return self.component(ctx, x)

    def check_naturality(self, category: KCategory) -> AxiomCheck:
        for a in category.objects:
            for b in category.objects:
                for h in category.hom(a, b):
                    for x in self.source.at(a):
                        if self.target.restrict(h, self(a, x)) != self(b, self.source.restrict(h, x)):
                            return AxiomCheck("naturality", False, (h, x))
        return AxiomCheck("naturality", True)


def constant_presheaf(values: Sequence[Hashable], name: str | None = None) -> MultiPresheaf:
    carrier = tuple(values)
    return MultiPresheaf(name or f"Const{list(carrier)!r}", lambda ctx: carrier, lambda h, x: x)


def terminal_presheaf() -> MultiPresheaf:
    return constant_presheaf((STAR,), name="1")


def along_clock(A: StagedSet, k: str) -> MultiPresheaf:
    """The staged set A read along the depth of clock k."""
    return MultiPresheaf(
        f"{A.name}[{k}]",
        lambda ctx: A.at(ctx.depth(k)),
        lambda h, x: A.restrict_to(h.target.depth(k), h.source.depth(k), x),
        free_clocks=(k,),
    )


def clock_product(X: MultiPresheaf, Y: MultiPresheaf) -> MultiPresheaf:
    def restrict(h: KMorphism, pair: Hashable) -> Hashable:
        assert isinstance(pair, tuple)
        return (X.restrict(h, pair[0]), Y.restrict(h, pair[1]))

    return MultiPresheaf(
        f"{X.name} x {Y.name}",
        lambda ctx: itertools.product(X.at(ctx), Y.at(ctx)),
        restrict,
        free_clocks=X.free_clocks | Y.free_clocks,
    )


def later_k(X: MultiPresheaf, k: str) -> MultiPresheaf:
    """Later along clock k: a singleton at depth 0, X one step earlier in k otherwise."""

    def elements(ctx: ClockContext) -> Iterable[Hashable]:
        depth = ctx.depth(k)
        return (STAR,) if depth == 0 else X.at(ctx.with_depth(k, depth - 1))

    def restrict(h: KMorphism, x: Hashable) -> Hashable:
        if h.target.depth(k) == 0:
            return STAR
        return X.restrict(h.shift(k), x)

    return MultiPresheaf(f"▷{k} {X.name}", elements, restrict, free_clocks=X.free_clocks | {k})


def next_k(X: MultiPresheaf, k: str) -> MultiMap:
    """next along clock k: restriction along the morphism decrementing k."""

    def component(ctx: ClockContext, x: Hashable) -> Hashable:
        return STAR if ctx.depth(k) == 0 else X.restrict(KMorphism.decrement(ctx, k), x)

    return MultiMap(X, later_k(X, k), component, name=f"next{k}[{X.name}]")


def later_map_k(f: MultiMap, k: str) -> MultiMap:
    def component(ctx: ClockContext, x: Hashable) -> Hashable:
        depth = ctx.depth(k)
        return STAR if depth == 0 else f(ctx.with_depth(k, depth - 1), x)

    return MultiMap(later_k(f.source, k), later_k(f.target, k), component, name=f"▷{k}({f.name})")


def check_wellpointed_k(X: MultiPresheaf, k: str, contexts: Iterable[ClockContext]) -> AxiomCheck:
    """next at later_k(X) against later_k applied to next at X, pointwise."""
    lhs = next_k(later_k(X, k), k)
    rhs = later_map_k(next_k(X, k), k)
    for ctx in contexts:
        for x in lhs.source.at(ctx):
            if lhs(ctx, x) != rhs(ctx, x):
                return AxiomCheck("wellpointed", False, (ctx, x))
    return AxiomCheck("wellpointed", True)


def check_later_commute(X: MultiPresheaf, k1: str, k2: str, category: KCategory) -> AxiomCheck:
    """later along k1 then k2 agrees with k2 then k1 on elements and restrictions."""
    a = later_k(later_k(X, k2), k1)
    b = later_k(later_k(X, k1), k2)
    for ctx in category.objects:
        if a.at(ctx) != b.at(ctx):
            return AxiomCheck("later_commute", False, (ctx,))
    for src in category.objects:
        for dst in category.objects:
            for h in category.hom(src, dst):
                for x in a.at(src):
                    if a.restrict(h, x) != b.restrict(h, x):
                        return AxiomCheck("later_commute", False, (h, x))
    return AxiomCheck("later_commute", True)


class ClockFamily:
    """
    An element of a clock-quantified presheaf: one pick per depth of the bound clock.

    Picks are computed on demand and memoized; equality is observational up to a bound.
    """

    def __init__(self, context: ClockContext, clock: str, pick: Callable[[int], Hashable], name: str = "") -> None:
        if context.has_clock(clock):
            raise ClockError(f"bound clock {clock!r} already occurs in {context.label()}", witness=clock)
        self.context = context
        self.clock = clock
        self.name = name or f"Λ{clock}"
        self._pick = pick
        self._values: dict[int, Hashable] = {}
        self._lock = threading.Lock()

    def at(self, n: int) -> Hashable:
        with self._lock:
            if n not in self._values:
                self._values[n] = self._pick(n)
            return self._values[n]

    def prefix(self, stages: int) -> tuple[Hashable, ...]:
        return tuple(self.at(n) for n in range(stages))

    def agrees_with(self, other: "ClockFamily", stages: int) -> bool:
        return self.prefix(stages) == other.prefix(stages)

    def __repr__(self) -> str:
        return f"ClockFamily({self.name} at {self.context.label()})"


class ClockQuantified:
    """The clock quantifier: families over the depths of `clock`, compatible with decrements."""

    def __init__(self, body: MultiPresheaf, clock: str) -> None:
        self.body = body
        self.clock = clock
        self.free_clocks = body.free_clocks - {clock}
        self.name = f"∀{clock}. {body.name}"

    def stage(self, ctx: ClockContext, n: int) -> ClockContext:
        if ctx.has_clock(self.clock):
            raise ClockError(f"bound clock {self.clock!r} already occurs in {ctx.label()}", witness=self.clock)
        return ctx.with_depth(self.clock, n)

    def families(self, ctx: ClockContext, stages: int) -> tuple[ClockFamily, ...]:
        """
        All compatible families at ctx, observed on `stages` depths.

        A compatible prefix is determined by its last pick, so the families are enumerated
        by restricting each element at depth stages-1 downwards.
        """
        if stages <= 0:
            return ()
        top = self.stage(ctx, stages - 1)
        found = []
        for x in self.body.at(top):
            picks = [x]
            for n in range(stages - 1, 0, -1):
                picks.append(self.body.restrict(KMorphism.decrement(self.stage(ctx, n), self.clock), picks[-1]))
            values = tuple(reversed(picks))
            found.append(ClockFamily(ctx, self.clock, _from_prefix(values), name=f"{self.name}#{len(found)}"))
        return tuple(found)

    def compatibility_failure(self, family: ClockFamily, stages: int) -> int | None:
        for n in range(stages - 1):
            step = KMorphism.decrement(self.stage(family.context, n + 1), self.clock)
            if self.body.restrict(step, family.at(n + 1)) != family.at(n):
                return n + 1
        return None

    def restrict(self, h: KMorphism, family: ClockFamily) -> ClockFamily:
        """Restriction of the quantified presheaf along a morphism not involving the bound clock."""
        return ClockFamily(
            h.target,
            self.clock,
            lambda n: self.body.restrict(h.extend(self.clock, n, n), family.at(n)),
            name=f"{family.name}|{h.target.label()}",
        )


def _from_prefix(values: tuple[Hashable, ...]) -> Callable[[int], Hashable]:
    def pick(n: int) -> Hashable:
        if n >= len(values):
            raise InvalidStructureError(f"family observed on {len(values)} depths was asked for depth {n}", witness=n)
        return values[n]

    return pick


def forall_k(X: MultiPresheaf, k: str) -> ClockQuantified:
    return ClockQuantified(X, k)


def force(family: ClockFamily) -> ClockFamily:
    """Remove one delay under the quantifier: depth n of the result is depth n+1 of the input."""
    return ClockFamily(family.context, family.clock, lambda n: family.at(n + 1), name=f"force({family.name})")


def unforce(X: MultiPresheaf, family: ClockFamily) -> ClockFamily:
    """The inverse of force: apply next along the bound clock at every depth."""
    step = next_k(X, family.clock)
    return ClockFamily(
        family.context,
        family.clock,
        lambda n: step(family.context.with_depth(family.clock, n), family.at(n)),
        name=f"next({family.name})",
    )


def check_force_iso(X: MultiPresheaf, k: str, ctx: ClockContext, stages: int) -> AxiomReport:
    """force and unforce are mutually inverse on all families observed on `stages` depths."""
    plain = forall_k(X, k)
    delayed = forall_k(later_k(X, k), k)

    left = None
    for x in plain.families(ctx, stages + 1):
        if force(unforce(X, x)).prefix(stages) != x.prefix(stages):
            left = (x.name,)
            break

    right = None
    for y in delayed.families(ctx, stages + 1):
        if unforce(X, force(y)).prefix(stages) != y.prefix(stages):
            right = (y.name,)
            break

    return AxiomReport(
        checks=(
            AxiomCheck("force_after_unforce", left is None, left),
            AxiomCheck("unforce_after_force", right is None, right),
        )
    )


def check_clock_irrelevance(X: MultiPresheaf, k: str, ctx: ClockContext, stages: int) -> AxiomCheck:
    """
    For X not mentioning k, every element of X(ctx) gives a constant family and every
    compatible family arises this way exactly once.
    """
    if k in X.free_clocks:
        raise InvalidStructureError(f"{X.name} depends on clock {k!r}", witness=k)
    quantified = forall_k(X, k)

    weakened: dict[tuple[Hashable, ...], Hashable] = {}
    for a in X.at(ctx):
        prefix = tuple(X.restrict(KMorphism.inclusion(ctx, quantified.stage(ctx, n)), a) for n in range(stages))
        if prefix in weakened:
            return AxiomCheck("clock_irrelevance", False, (a, weakened[prefix]))
        weakened[prefix] = a

    enumerated = {family.prefix(stages) for family in quantified.families(ctx, stages)}
    if enumerated != set(weakened):
        return AxiomCheck("clock_irrelevance", False, tuple(sorted(enumerated ^ set(weakened), key=repr)))
    return AxiomCheck("clock_irrelevance", True)


def fiber_staged(X: MultiPresheaf, k: str, ctx: ClockContext) -> StagedSet:
    """The staged set n -> X(ctx[k -> n])."""
    return StagedSet(
        f"{X.name}@{ctx.label()}",
        lambda n: X.at(ctx.with_depth(k, n)),
        lambda n, x: X.restrict(KMorphism.decrement(ctx.with_depth(k, n + 1), k), x),
    )


def fiber_step(f: MultiMap, k: str, ctx: ClockContext) -> StagedMap:
    """A step later_k(X) -> X restricted to the k-fiber over ctx."""
    fiber = fiber_staged(f.target, k, ctx)
    return StagedMap(later(fiber), fiber, lambda n, x: f(ctx.with_depth(k, n), x), name=f"{f.name}@{ctx.label()}")


def check_fiber_fixpoints(f: MultiMap, k: str, contexts: Iterable[ClockContext], stages: int) -> AxiomCheck:
    """Guarded fixed points exist and are unique in every k-fiber."""
    for ctx in contexts:
        if not check_fix_unique(fiber_step(f, k, ctx), stages):
            return AxiomCheck("fiber_fixpoints", False, (ctx,))
    return AxiomCheck("fiber_fixpoints", True)


def cons_literal_k(stream: GuardedStream, value: Hashable, k: str) -> MultiMap:
    """cons value as a step on guarded streams read along clock k."""
    X = along_clock(stream.staged, k)
    return MultiMap(later_k(X, k), X, lambda ctx, t: stream.cons(ctx.depth(k), value, t), name=f"cons{k} {value!r}")


class CoStream:
    """A coinductive stream: a clock-quantified family of guarded streams."""

    def __init__(self, stream: GuardedStream, family: ClockFamily, name: str = "") -> None:
        self.stream = stream
        self.family = family
        self.name = name or family.name

    def __repr__(self) -> str:
        return f"CoStream({self.name})"


def costream_from_step(stream: GuardedStream, step: StagedMap, clock: str = "k", name: str = "") -> CoStream:
    """Quantify the guarded fixed point of `step` over a fresh clock."""
    fixed = gfix(step)
    return CoStream(stream, ClockFamily(EMPTY_CONTEXT, clock, fixed.at, name=name or fixed.name), name=name or fixed.name)


def co_head(s: CoStream) -> Hashable:
    """head u = fst (uncons u[k]) at any depth; depth 0 suffices."""
    return s.stream.uncons(0, s.family.at(0))[0]


def co_tail(s: CoStream) -> CoStream:
    """tail u = force (Λk. snd (uncons u[k]))."""
    family = s.family
    delayed = ClockFamily(family.context, family.clock, lambda n: s.stream.uncons(n, family.at(n))[1], name=f"snd({family.name})")
    return CoStream(s.stream, force(delayed), name=f"tail({s.name})")


def co_take(n: int, s: CoStream) -> list[Hashable]:
    """take 0 u = [] and take (n+1) u = head u :: take n (tail u)."""
    taken: list[Hashable] = []
    current = s
    for _ in range(n):
        taken.append(co_head(current))
        current = co_tail(current)
    return taken


def zeros() -> CoStream:
    stream = GuardedStream((0,))
    return costream_from_step(stream, cons_literal_step(stream, 0), name="zeros")


def naturals(modulus: int = 10) -> CoStream:
    stream = GuardedStream(range(modulus))
    return costream_from_step(stream, map_successor_step(stream), name=f"naturals mod {modulus}")


def alternating() -> CoStream:
    stream = GuardedStream((0, 1))
    return costream_from_step(stream, alternating_step(stream), name="alternating")


BUILTIN_COSTREAMS: dict[str, Callable[[int], CoStream]] = {
    "zeros": lambda modulus: zeros(),
    "naturals": naturals,
    "alternating": lambda modulus: alternating(),
}
