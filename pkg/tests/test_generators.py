"""Tests for enumerated and seeded instances."""

import random

from guarded_lab.generators import (
    compatible_precs,
    naturally_labelled_posets,
    random_clockless_presheaf,
    random_multipresheaf,
    random_natural_step,
    random_staged_set,
)
from guarded_lab.multiclock import EMPTY_CONTEXT, ClockContext
from guarded_lab.order_core import antichain, chain
from guarded_lab.tree_semantics import check_fix_unique


def test_naturally_labelled_poset_counts():
    """Test the number of naturally labelled posets by size."""
    assert [sum(1 for _ in naturally_labelled_posets(n)) for n in range(6)] == [1, 1, 2, 7, 40, 357]


def test_compatible_precs():
    """Test compatible relations on a 2-chain and an antichain."""
    assert set(compatible_precs(chain(2))) == {frozenset(), frozenset({(0, 1)})}
    assert list(compatible_precs(antichain(["a", "b"]))) == [frozenset()]

    # on a 3-chain, 1 prec 2 forces 0 prec 2
    precs = set(compatible_precs(chain(3)))
    assert frozenset({(1, 2)}) not in precs
    assert frozenset({(0, 2), (1, 2)}) in precs


def test_random_staged_set_is_surjective():
    """Test that every restriction of a generated staged set is onto."""
    rng = random.Random(7)
    for _ in range(10):
        A = random_staged_set(rng, 4)
        for n in range(3):
            assert set(A.at(n)) == {A.restrict(n, x) for x in A.at(n + 1)}
            assert len(A.at(n)) <= len(A.at(n + 1))


def test_random_steps_have_unique_fixed_points():
    """Test that generated steps are natural and have unique fixed points."""
    rng = random.Random(0)
    for i in range(5):
        A = random_staged_set(rng, 5, name=f"A{i}")
        assert check_fix_unique(random_natural_step(rng, A, 5), 5)


def test_generation_is_deterministic():
    """Test that the same seed gives the same instances."""
    first = random_staged_set(random.Random(3), 4)
    second = random_staged_set(random.Random(3), 4)
    assert [first.at(n) for n in range(4)] == [second.at(n) for n in range(4)]


def test_random_presheaves_mention_the_right_clocks():
    """Test the free clocks of generated presheaves."""
    rng = random.Random(1)
    for _ in range(10):
        X = random_multipresheaf(rng, 3)
        assert "k" in X.free_clocks
        assert X.at(ClockContext.of({"k": 2, "l": 2}))

        Y = random_clockless_presheaf(rng, 3)
        assert "k" not in Y.free_clocks
        ctx = ClockContext.of({"l": 1}) if Y.free_clocks else EMPTY_CONTEXT
        assert Y.at(ctx)
