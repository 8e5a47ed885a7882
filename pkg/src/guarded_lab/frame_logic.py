"""Finite frames with well-founded bases, the predecessor operation and the propositional later modality."""

import logging
import threading
from collections.abc import Hashable, Iterable, Mapping
from typing import NamedTuple

from .errors import ExplosionError, InvalidStructureError
from .order_core import AxiomCheck, AxiomReport, FinitePoset, FinitePreorder, Pair, WfRelation, is_compatible_wf

logger = logging.getLogger(__name__)

MAX_DOWNSET_ELEMENTS = 12
MAX_OPENS = 256


class FiniteFrame:
    """
    A finite distributive lattice given extensionally by its order.

    Meets and joins are tabulated on construction; a missing bound or a failure of
    distributivity raises InvalidStructureError.
    """

    def __init__(self, opens: Iterable[Hashable], leq: Iterable[Pair], verify: bool = True) -> None:
        self.order = FinitePoset(opens, leq)
        self.opens = self.order.elements
        self._below = {a: self.order.down(a) for a in self.opens}
        self._above = {a: self.order.up(a) for a in self.opens}
        self._meet: dict[Pair, Hashable] = {}
        self._join: dict[Pair, Hashable] = {}

        if not self.opens:
            raise InvalidStructureError("A frame has at least one open (its top)")

        self.bottom = self._greatest(frozenset(self.opens), self._above, "bottom")
        self.top = self._greatest(frozenset(self.opens), self._below, "top")

        for i, a in enumerate(self.opens):
            for b in self.opens[i:]:
                meet = self._greatest(self._below[a] & self._below[b], self._below, f"meet of {a!r} and {b!r}")
                join = self._greatest(self._above[a] & self._above[b], self._above, f"join of {a!r} and {b!r}")
                self._meet[(a, b)] = self._meet[(b, a)] = meet
                self._join[(a, b)] = self._join[(b, a)] = join

        if verify:
            self._check_distributive()

    def _greatest(self, candidates: frozenset[Hashable], cone: Mapping[Hashable, frozenset[Hashable]], what: str) -> Hashable:
        """The candidate whose cone contains every other candidate."""
        for c in self.opens:
            if c in candidates and candidates <= cone[c]:
                return c
        raise InvalidStructureError(f"Not a lattice: no {what}")

    def _check_distributive(self) -> None:
        for a in self.opens:
            for b in self.opens:
                for c in self.opens:
                    if self.meet(a, self.join2(b, c)) != self.join2(self.meet(a, b), self.meet(a, c)):
                        raise InvalidStructureError("Lattice is not distributive", witness=(a, b, c))

    def le(self, a: Hashable, b: Hashable) -> bool:
        return self.order.le(a, b)

    def meet(self, a: Hashable, b: Hashable) -> Hashable:
        return self._meet[(a, b)]

    def join2(self, a: Hashable, b: Hashable) -> Hashable:
        return self._join[(a, b)]

    def join(self, opens: Iterable[Hashable]) -> Hashable:
        result = self.bottom
        for a in opens:
            result = self._join[(result, a)]
        return result

    def label(self, a: Hashable) -> str:
        if isinstance(a, frozenset):
            return "{" + ",".join(str(x) for x in sorted(a, key=repr)) + "}"
        return str(a)


class BasedFrame:
    """A finite frame together with a basis and a strict relation on the basis."""

    def __init__(self, frame: FiniteFrame, basis: Iterable[Hashable], basis_prec: Iterable[Pair]) -> None:
        self.frame = frame
        self.basis = tuple(basis)
        self.basis_prec = frozenset((k, l) for k, l in basis_prec)

        for k in self.basis:
            if k not in frame.order:
                raise InvalidStructureError(f"Basis element {k!r} is not an open", witness=k)
        basis_set = set(self.basis)
        for k, l in self.basis_prec:
            if k not in basis_set or l not in basis_set:
                raise InvalidStructureError(f"basis_prec pair ({k!r}, {l!r}) leaves the basis", witness=(k, l))

        for u in frame.opens:
            if frame.join(k for k in self.basis if frame.le(k, u)) != u:
                raise InvalidStructureError(f"Open {frame.label(u)} is not the join of the basis elements below it", witness=u)

        self._predecessor: dict[Hashable, Hashable] = {}
        self._later: dict[Hashable, Hashable] = {}
        self._lock = threading.Lock()

    @property
    def opens(self) -> tuple[Hashable, ...]:
        return self.frame.opens

    @property
    def basis_order(self) -> WfRelation:
        return WfRelation(self.frame.order.restrict(self.basis), self.basis_prec)

    def wf_report(self) -> AxiomReport:
        """Compatibility and well-foundedness of the basis relation (reported, not enforced)."""
        return is_compatible_wf(self.basis_order)

    def with_prec(self, basis_prec: Iterable[Pair]) -> "BasedFrame":
        return BasedFrame(self.frame, self.basis, basis_prec)

    def predecessor(self, u: Hashable) -> Hashable:
        """Join of the basis elements strictly below some basis element under `u`."""
        with self._lock:
            if u in self._predecessor:
                return self._predecessor[u]
        frame = self.frame
        below_u = {l for l in self.basis if frame.le(l, u)}
        value = frame.join(k for k in self.basis if any((k, l) in self.basis_prec for l in below_u))
        with self._lock:
            return self._predecessor.setdefault(u, value)

    def later(self, phi: Hashable) -> Hashable:
        """The largest open whose predecessor lies below `phi`."""
        with self._lock:
            if phi in self._later:
                return self._later[phi]
        # predecessor takes the lock itself, so compute outside it
        frame = self.frame
        value = frame.join(u for u in frame.opens if frame.le(self.predecessor(u), phi))
        with self._lock:
            return self._later.setdefault(phi, value)

    def implies(self, u: Hashable, v: Hashable) -> Hashable:
        return heyting_implies(self.frame, u, v)


class DownsetFrame(BasedFrame):
    """Downsets of a poset, based on the principal downsets."""

    def __init__(self, order: WfRelation, frame: FiniteFrame | None = None) -> None:
        poset = order.base
        self.wf = order
        self.points = {u: frozenset(poset.down(u)) for u in poset.elements}
        if frame is None:
            downsets = _downsets(poset)
            frame = FiniteFrame(downsets, _inclusions(downsets), verify=False)
        super().__init__(frame, tuple(self.points[u] for u in poset.elements), ((self.points[u], self.points[v]) for u, v in order.prec))

    def principal(self, u: Hashable) -> frozenset[Hashable]:
        return self.points[u]

    def with_prec(self, basis_prec: Iterable[Pair]) -> "DownsetFrame":
        """Same frame, new strict relation given on the underlying poset."""
        return DownsetFrame(self.wf.with_prec(basis_prec), self.frame)


class LoebResult(NamedTuple):
    """Outcome of `check_loeb`: passed, or the first open refuting Loeb induction."""

    passed: bool
    counterexample: Hashable | None = None


def _downsets(poset: FinitePreorder) -> list[frozenset[Hashable]]:
    n = len(poset.elements)
    if n > MAX_DOWNSET_ELEMENTS:
        raise ExplosionError("downsets", 2**n, 2**MAX_DOWNSET_ELEMENTS)
    found = []
    for mask in range(2**n):
        chosen = frozenset(u for i, u in enumerate(poset.elements) if mask >> i & 1)
        if all(poset.down(u) <= chosen for u in chosen):
            found.append(chosen)
    if len(found) > MAX_OPENS:
        raise ExplosionError("downset frame opens", len(found), MAX_OPENS)
    return sorted(found, key=lambda d: (len(d), sorted(poset.position(u) for u in d)))


def _inclusions(sets: list[frozenset[Hashable]]) -> list[tuple[frozenset[Hashable], frozenset[Hashable]]]:
    return [(a, b) for a in sets for b in sets if a <= b]


def downset_frame(order: WfRelation) -> DownsetFrame:
    """
    The frame of downsets of a poset, ordered by inclusion.

    The basis is the image of the Yoneda embedding (principal downsets) and carries the
    strict relation of `order`.
    """
    if not order.base.is_antisymmetric():
        raise InvalidStructureError("downset_frame needs a poset; reflect the preorder first")
    return DownsetFrame(order)


def loop_frame() -> BasedFrame:
    """Two opens, one basis element u with u prec u: well-foundedness fails."""
    frame = FiniteFrame(("bot", "u"), (("bot", "bot"), ("bot", "u"), ("u", "u")))
    return BasedFrame(frame, ("u",), (("u", "u"),))


def heyting_implies(F: FiniteFrame, u: Hashable, v: Hashable) -> Hashable:
    """The largest w with w meet u below v."""
    return F.join(w for w in F.opens if F.le(F.meet(w, u), v))


def predecessor(BF: BasedFrame, u: Hashable) -> Hashable:
    return BF.predecessor(u)


def later_prop(BF: BasedFrame, phi: Hashable) -> Hashable:
    return BF.later(phi)


def check_wellpointed_lex(BF: BasedFrame) -> AxiomReport:
    """
    Check that later is monotone, preserves top and binary meets.

    Also checks the propositional shadow of next (phi below later(phi)) and that the
    predecessor operation is deflationary.
    """
    F = BF.frame
    opens = F.opens

    monotone = next(((a, b) for a in opens for b in opens if F.le(a, b) and not F.le(BF.later(a), BF.later(b))), None)
    top = None if BF.later(F.top) == F.top else (F.top, BF.later(F.top))
    meets = next(
        ((a, b) for a in opens for b in opens if BF.later(F.meet(a, b)) != F.meet(BF.later(a), BF.later(b))),
        None,
    )
    inflationary = next(((a,) for a in opens if not F.le(a, BF.later(a))), None)
    deflationary = next(((a,) for a in opens if not F.le(BF.predecessor(a), a)), None)

    return AxiomReport(
        checks=(
            AxiomCheck("monotone", monotone is None, monotone),
            AxiomCheck("preserves_top", top is None, top),
            AxiomCheck("preserves_meets", meets is None, meets),
            AxiomCheck("next_inflationary", inflationary is None, inflationary),
            AxiomCheck("predecessor_deflationary", deflationary is None, deflationary),
        )
    )


def check_loeb(BF: BasedFrame) -> LoebResult:
    """
    Check Loeb induction: whenever later(phi) implies phi holds globally, phi is top.

    Returns the first open (in frame order) refuting it, if any.
    """
    F = BF.frame
    for phi in F.opens:
        if heyting_implies(F, BF.later(phi), phi) == F.top and phi != F.top:
            logger.debug("Loeb induction fails at %s", F.label(phi))
            return LoebResult(passed=False, counterexample=phi)
    return LoebResult(passed=True)
