"""Tests for frames, the predecessor operation and Loeb induction."""

from concurrent.futures import ThreadPoolExecutor

import pytest

from guarded_lab.errors import ExplosionError, InvalidStructureError
from guarded_lab.frame_logic import (
    BasedFrame,
    FiniteFrame,
    check_loeb,
    check_wellpointed_lex,
    downset_frame,
    heyting_implies,
    later_prop,
    loop_frame,
    predecessor,
)
from guarded_lab.order_core import FinitePreorder, WfRelation, antichain, chain, omega


def _order(opens, pairs):
    return FinitePreorder.closure(opens, pairs)[0].leq


def test_downset_frame_of_chain():
    """Test that the downsets of a 5-chain form a 6-element frame."""
    F = downset_frame(omega(5))
    assert len(F.opens) == 6
    assert F.frame.bottom == frozenset()
    assert F.frame.top == frozenset(range(5))
    assert F.principal(2) == frozenset({0, 1, 2})
    assert F.frame.label(F.principal(1)) == "{0,1}"


def test_meets_joins_and_implication():
    """Test the lattice operations on the downsets of an antichain."""
    F = downset_frame(WfRelation(antichain(["a", "b"])))
    a, b = frozenset({"a"}), frozenset({"b"})

    assert F.frame.meet(a, b) == frozenset()
    assert F.frame.join([a, b]) == frozenset({"a", "b"})
    assert heyting_implies(F.frame, a, frozenset()) == b
    assert F.implies(a, a) == F.frame.top


def test_loeb_holds_on_downset_frames():
    """Test Loeb induction on the downset frame of a well-founded chain."""
    assert check_loeb(downset_frame(omega(5))).passed
    assert check_wellpointed_lex(downset_frame(omega(4))).ok


def test_loop_frame_refutes_loeb():
    """Test that a basis element preceding itself breaks Loeb induction at bot."""
    BF = loop_frame()
    result = check_loeb(BF)

    assert not result.passed
    assert result.counterexample == "bot"
    assert BF.later("bot") == "bot"
    assert not BF.wf_report().ok


def test_later_shifts_by_one_stage():
    """Test predecessor and later on the downsets of a 3-chain."""
    F = downset_frame(omega(3))

    assert predecessor(F, F.principal(2)) == frozenset({0, 1})
    assert predecessor(F, F.principal(0)) == frozenset()
    assert later_prop(F, frozenset()) == frozenset({0})
    assert later_prop(F, frozenset({0})) == frozenset({0, 1})


def test_empty_relation_makes_later_trivial():
    """Test that with no strict pairs later is constantly top and Loeb holds vacuously."""
    F = downset_frame(omega(3)).with_prec(())

    assert F.later(F.frame.bottom) == F.frame.top
    assert check_loeb(F).passed
    assert check_wellpointed_lex(F).ok


def test_frame_rejects_non_lattices():
    """Test that a missing top and a non-distributive lattice are refused."""
    with pytest.raises(InvalidStructureError):
        FiniteFrame(["0", "a", "b"], _order(["0", "a", "b"], [("0", "a"), ("0", "b")]))

    # the diamond with three atoms
    opens = ["0", "a", "b", "c", "1"]
    pairs = [("0", x) for x in "abc"] + [(x, "1") for x in "abc"]
    with pytest.raises(InvalidStructureError):
        FiniteFrame(opens, _order(opens, pairs))


def test_basis_must_generate_the_frame():
    """Test that every open must be the join of the basis elements below it."""
    F = FiniteFrame(range(3), chain(3).leq)
    with pytest.raises(InvalidStructureError):
        BasedFrame(F, [2], [])
    assert BasedFrame(F, [1, 2], [(1, 2)]).predecessor(2) == 1


def test_downset_frame_needs_a_poset():
    """Test that a preorder with collapsed elements is refused."""
    P, _ = FinitePreorder.closure(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(InvalidStructureError):
        downset_frame(WfRelation(P))


def test_downset_frame_size_guard():
    """Test that large carriers are refused before enumeration."""
    with pytest.raises(ExplosionError):
        downset_frame(WfRelation(antichain(list(range(13)))))


def test_shared_frame_across_threads():
    """Test that later and predecessor agree when one frame is queried from many threads."""
    shared = downset_frame(omega(5))
    fresh = downset_frame(omega(5))
    opens = list(shared.opens) * 4

    with ThreadPoolExecutor(max_workers=8) as executor:
        laters = list(executor.map(shared.later, opens))
        predecessors = list(executor.map(shared.predecessor, opens))

    assert laters == [fresh.later(u) for u in opens]
    assert predecessors == [fresh.predecessor(u) for u in opens]
