"""Tests for geometric theories, filter theories and bag models."""

import dataclasses

import pytest

from guarded_lab import theory_kit
from guarded_lab.errors import ExplosionError, InvalidStructureError
from guarded_lab.order_core import FinitePoset, FinitePreorder, antichain, chain
from guarded_lab.theory_kit import (
    BOTTOM,
    TOP,
    GeometricTheory,
    Sequent,
    Symbol,
    TheoryModel,
    bag_theory,
    cartesian_simplify,
    chain_filt_theory,
    conj,
    disj,
    enumerate_bag_models,
    enumerate_models,
    evaluate,
    filt_theory,
    filters_as_models,
    filters_oracle,
    ibag_theory,
    rename_bag_theory,
    restrict_model,
    theory_of_inhabited_object,
    theory_of_object,
)


def _diamond() -> FinitePoset:
    P, _ = FinitePreorder.closure(("bot", "a", "b", "top"), (("bot", "a"), ("bot", "b"), ("a", "top"), ("b", "top")))
    return FinitePoset.from_preorder(P)


def test_formula_evaluation():
    """Test conjunction, disjunction and the empty cases."""
    p, q = Symbol("p"), Symbol("q")
    true = frozenset({"p"})

    assert evaluate(TOP, frozenset())
    assert not evaluate(BOTTOM, true)
    assert evaluate(disj(p, q), true)
    assert not evaluate(conj(p, q), true)
    assert conj(p) == p
    assert str(Sequent(conj(p, q), BOTTOM)) == "(p ∧ q) ⊢ ⊥"


def test_theory_validation():
    """Test that symbols are unique and sequents use declared symbols."""
    with pytest.raises(InvalidStructureError):
        GeometricTheory(("p", "p"))
    with pytest.raises(InvalidStructureError) as excinfo:
        GeometricTheory(("p",), (Sequent(Symbol("p"), Symbol("q")),))
    assert excinfo.value.witness == (0, ("q",))


def test_model_enumeration():
    """Test models of small theories, listed by size."""
    assert enumerate_models(GeometricTheory(())) == (TheoryModel(frozenset()),)

    implication = GeometricTheory(("p", "q"), (Sequent(Symbol("p"), Symbol("q")),))
    assert [sorted(m.true) for m in enumerate_models(implication)] == [[], ["q"], ["p", "q"]]

    inconsistent = GeometricTheory(("p",), (Sequent(TOP, BOTTOM),))
    assert enumerate_models(inconsistent) == ()

    with pytest.raises(ExplosionError):
        enumerate_models(GeometricTheory(tuple(f"p{i}" for i in range(17))))


def test_filters_of_chains_and_antichains():
    """Test that a chain of n has n filters and an antichain one per point."""
    for n in range(1, 5):
        assert len(filters_oracle(chain(n))) == n
        assert set(enumerate_models(filt_theory(chain(n)))) == filters_as_models(chain(n))
        assert set(enumerate_models(chain_filt_theory(chain(n)))) == filters_as_models(chain(n))

    assert len(enumerate_models(filt_theory(antichain(["a", "b"])))) == 2
    assert enumerate_models(filt_theory(chain(0))) == ()


def test_filters_of_diamond():
    """Test the four filters of the diamond, the only one without a least element being excluded."""
    P = _diamond()
    filters = set(filters_oracle(P))

    assert len(filters) == 4
    assert frozenset({"a", "top"}) in filters
    assert frozenset({"a", "b", "top"}) not in filters
    assert set(enumerate_models(filt_theory(P))) == filters_as_models(P)
    assert set(enumerate_models(cartesian_simplify(P))) == filters_as_models(P)


def test_simplified_presentations_need_structure():
    """Test that the chain and cartesian presentations refuse unsuitable posets."""
    with pytest.raises(InvalidStructureError):
        chain_filt_theory(antichain(["a", "b"]))
    with pytest.raises(InvalidStructureError):
        cartesian_simplify(antichain(["a", "b"]))


def test_bag_model_counts():
    """Test raw and up-to-relabelling counts of bag models."""
    T = filt_theory(chain(2))
    bag = enumerate_bag_models(bag_theory(T), 2)

    assert bag.raw_counts == {0: 1, 1: 2, 2: 4}
    assert bag.iso_counts == {0: 1, 1: 2, 2: 3}
    assert bag.raw_total == 7
    assert bag.iso_total == 6

    ibag = enumerate_bag_models(ibag_theory(T), 2)
    assert ibag.raw_counts == {1: 2, 2: 4}
    assert bag.raw_total - ibag.raw_total == 1


def test_bag_of_empty_theory():
    """Test that the theory of an object has exactly one model per index set size."""
    assert enumerate_bag_models(theory_of_object(), 3).raw_counts == {0: 1, 1: 1, 2: 1, 3: 1}
    assert enumerate_bag_models(theory_of_inhabited_object(), 3).raw_counts == {1: 1, 2: 1, 3: 1}
    assert bag_theory(GeometricTheory(())).predicates == theory_of_object().predicates


def test_bag_models_are_decided_by_the_indexed_sequents():
    """Test that every predicate assignment is a candidate and the sequents decide."""
    B = bag_theory(filt_theory(chain(2)))

    # two symbols give four assignments per index, two of which are filters
    unconstrained = dataclasses.replace(B, sequents=())
    assert enumerate_bag_models(unconstrained, 2).raw_counts == {0: 1, 1: 4, 2: 16}
    assert enumerate_bag_models(B, 2).raw_counts == {0: 1, 1: 2, 2: 4}


def test_bag_counts_depend_on_the_verifier(monkeypatch):
    """Test that an accept-everything verifier changes the counts."""
    monkeypatch.setattr(theory_kit, "bag_model_holds", lambda B, model: True)
    assert enumerate_bag_models(bag_theory(filt_theory(chain(2))), 2).raw_counts == {0: 1, 1: 4, 2: 16}


def test_bag_candidate_cap():
    """Test that the candidate families are counted before any is built."""
    with pytest.raises(ExplosionError) as excinfo:
        enumerate_bag_models(bag_theory(filt_theory(chain(3))), 2, cap=50)
    assert excinfo.value.estimate == 1 + 8 + 64


def test_bag_theory_rendering():
    """Test the indexed predicates and axioms of a bag theory."""
    B = ibag_theory(GeometricTheory(("p", "q"), (Sequent(Symbol("p"), Symbol("q")),)))
    assert B.predicates == ("p[k]", "q[k]")
    assert B.render() == [
        "sort K",
        "predicate k : K | p[k]",
        "predicate k : K | q[k]",
        "k : K | p[k] ⊢ q[k]",
        "⊢ ∃k : K. ⊤",
    ]


def test_bag_models_follow_renamings():
    """Test that renaming the base theory carries bag models back unchanged."""
    B = bag_theory(filt_theory(chain(2)))
    mapping = {"<0>": "low", "<1>": "high"}
    renamed = rename_bag_theory(B, mapping)

    assert renamed.predicates == ("low[k]", "high[k]")
    original = enumerate_bag_models(B, 2)
    translated = enumerate_bag_models(renamed, 2)
    assert translated.raw_counts == original.raw_counts
    pulled_back = {tuple(restrict_model(member, mapping) for member in model.family) for model in translated.models}
    assert pulled_back == {model.family for model in original.models}

    with pytest.raises(InvalidStructureError):
        rename_bag_theory(B, {"<0>": "x", "<1>": "x"})
