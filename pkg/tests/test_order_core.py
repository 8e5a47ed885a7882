"""Tests for finite preorders and compatible well-founded relations."""

import pytest

from guarded_lab.errors import InvalidStructureError
from guarded_lab.generators import compatible_precs, naturally_labelled_posets
from guarded_lab.order_core import (
    FinitePoset,
    FinitePreorder,
    WfRelation,
    accessible_set,
    antichain,
    chain,
    check_global_adequacy,
    components,
    global_adequacy,
    is_compatible_wf,
    is_connected,
    omega,
    poset_reflection,
)


def test_chain_and_omega():
    """Test the n-point chain and its strict order."""
    c = chain(3)
    assert c.elements == (0, 1, 2)
    assert len(c.leq) == 6
    assert c.strict_pairs() == ((0, 1), (0, 2), (1, 2))

    w = omega(3)
    assert w.prec == frozenset({(0, 1), (0, 2), (1, 2)})
    assert w.strictly_below(2) == frozenset({0, 1})
    assert w.strict_domain() == frozenset({0, 1})
    assert is_compatible_wf(w).ok


def test_preorder_rejects_bad_relations():
    """Test that reflexivity, transitivity and the carrier are enforced."""
    with pytest.raises(InvalidStructureError):
        FinitePreorder(["a", "b"], [("a", "a")])

    with pytest.raises(InvalidStructureError) as excinfo:
        FinitePreorder(["a", "b", "c"], [("a", "a"), ("b", "b"), ("c", "c"), ("a", "b"), ("b", "c")])
    assert excinfo.value.witness == ("a", "b", "c")

    with pytest.raises(InvalidStructureError):
        FinitePreorder(["a"], [("a", "a"), ("a", "z")])

    with pytest.raises(InvalidStructureError):
        FinitePreorder(["a", "a"], [("a", "a")])

    with pytest.raises(InvalidStructureError):
        FinitePoset(["a", "b"], [("a", "a"), ("b", "b"), ("a", "b"), ("b", "a")])


def test_closure_counts_added_pairs():
    """Test reflexive-transitive closure and the number of pairs it adds."""
    P, added = FinitePreorder.closure(["a", "b", "c"], [("a", "b"), ("b", "c")])

    # three loops and a <= c
    assert added == 4
    assert P.le("a", "c")
    assert not P.le("c", "a")
    assert P.down("c") == frozenset({"a", "b", "c"})
    assert P.up("b") == frozenset({"b", "c"})
    assert P.is_antisymmetric()


def test_compatibility_failures_have_witnesses():
    """Test that each failed axiom reports the first counterexample."""
    # a loop is compatible but not well-founded
    loop = is_compatible_wf(WfRelation(chain(1), [(0, 0)]))
    assert [check.axiom for check in loop.failures()] == ["well_foundedness"]
    assert loop.check("well_foundedness").witness == (0, 0)

    outside = is_compatible_wf(WfRelation(antichain(["a", "b"]), [("a", "b")]))
    assert outside.check("subrelation").witness == ("a", "b")

    # 0 <= 1 prec 2 without 0 prec 2
    left = is_compatible_wf(WfRelation(chain(3), [(1, 2)]))
    assert not left.check("left_compatibility").passed
    assert left.check("left_compatibility").witness == (0, 1, 2)
    assert left.check("right_compatibility").passed
    assert left.check("well_foundedness").passed


def test_empty_relation_is_compatible():
    """Test that the empty relation is compatible and well-founded on any poset."""
    assert is_compatible_wf(WfRelation(antichain(["a", "b", "c"]))).ok
    assert is_compatible_wf(WfRelation(chain(0))).ok


def test_accessible_set():
    """Test the least fixed point of the accessibility operator."""
    assert accessible_set(range(3), [(0, 1), (1, 2)]) == frozenset({0, 1, 2})
    assert accessible_set(range(3), [(0, 1), (1, 0)]) == frozenset({2})
    assert accessible_set([], []) == frozenset()


def test_poset_reflection_collapses_equivalent_elements():
    """Test that mutually comparable elements are identified."""
    P, _ = FinitePreorder.closure(["a", "b", "c"], [("a", "b"), ("b", "a"), ("b", "c")])
    reflection = poset_reflection(P, [("a", "c"), ("b", "c")])

    assert reflection.quotient.elements == ("a", "c")
    assert reflection.mapping == {"a": "a", "b": "a", "c": "c"}
    assert reflection.reflected_prec == frozenset({("a", "c")})
    assert reflection.classes() == {"a": ("a", "b"), "c": ("c",)}
    assert is_compatible_wf(reflection.wf).ok


def test_poset_reflection_requires_compatible_relation():
    """Test that reflection refuses a relation that is not well-founded."""
    with pytest.raises(InvalidStructureError):
        poset_reflection(chain(2), [(1, 1)])


def test_components_and_connectivity():
    """Test connected components and zig-zag connectivity."""
    assert components([1, 2, 3, 4], [(1, 2), (3, 4)]) == {1: 0, 2: 0, 3: 1, 4: 1}
    assert is_connected(chain(3))
    assert not is_connected(antichain(["a", "b"]))
    assert is_connected(chain(0))


def test_global_adequacy_on_chains():
    """Test that the comparison map is a bijection on connected chains."""
    for n in range(2, 5):
        assert check_global_adequacy(omega(n), (0, 1))

    comparison = global_adequacy(omega(3), (0, 1))
    assert len(comparison.sections) == 2
    assert len(comparison.later_sections) == 2


def test_global_adequacy_fails_when_disconnected():
    """Test that an antichain has more global sections than its later."""
    comparison = global_adequacy(WfRelation(antichain(["a", "b"])), (0, 1))
    assert len(comparison.sections) == 4
    assert len(comparison.later_sections) == 1
    assert not comparison.bijective

    # a single point has an empty strict part
    assert not check_global_adequacy(omega(1), (0, 1))


def test_accessible_set_rejects_a_reflexive_loop():
    """Test that an element below itself is never accessible."""
    assert accessible_set(["a"], [("a", "a")]) == frozenset()


def _accessibility_step(elements, relation, S):
    return frozenset(u for u in elements if all(v in S for v, w in relation if w == u))


def test_accessible_set_is_the_least_fixed_point():
    """Test that the accessible set is a fixed point inside every prefixed point, for posets up to 5."""
    for n in range(6):
        subsets = [frozenset(u for u in range(n) if mask >> u & 1) for mask in range(1 << n)]
        for P in naturally_labelled_posets(n):
            # well-founded relations, their cyclic symmetric closures and leq with its loops
            relations = {P.leq}
            for prec in compatible_precs(P):
                relations.add(prec)
                relations.add(prec | {(v, u) for u, v in prec})
            for relation in relations:
                accessible = accessible_set(P.elements, relation)
                assert _accessibility_step(P.elements, relation, accessible) == accessible
                for S in subsets:
                    if _accessibility_step(P.elements, relation, S) <= S:
                        assert accessible <= S, (P, relation, S)


def test_poset_reflection_of_generated_relations():
    """Test that reflecting any compatible relation gives a compatible well-founded relation."""
    for n in range(5):
        for P in naturally_labelled_posets(n):
            for prec in compatible_precs(P):
                reflection = poset_reflection(P, prec)
                assert reflection.quotient.elements == P.elements
                assert reflection.reflected_prec == prec
                assert is_compatible_wf(reflection.wf).ok

                # two copies of every element, mutually below each other
                doubled = FinitePreorder(
                    [(u, i) for u in P.elements for i in (0, 1)],
                    [((u, i), (v, j)) for u, v in P.leq for i in (0, 1) for j in (0, 1)],
                )
                lifted = [((u, i), (v, j)) for u, v in prec for i in (0, 1) for j in (0, 1)]
                collapsed = poset_reflection(doubled, lifted)
                assert collapsed.quotient.elements == tuple((u, 0) for u in P.elements)
                assert collapsed.reflected_prec == frozenset(((u, 0), (v, 0)) for u, v in prec)
                assert is_compatible_wf(collapsed.wf).ok


def _graph_components(P):
    """Components of the comparability graph found by depth-first search."""
    unseen = set(P.elements)
    found = []
    while unseen:
        stack = [unseen.pop()]
        component = set(stack)
        while stack:
            u = stack.pop()
            for v in list(unseen):
                if P.le(u, v) or P.le(v, u):
                    unseen.remove(v)
                    component.add(v)
                    stack.append(v)
        found.append(component)
    return found


def test_is_connected_agrees_with_graph_search():
    """Test connectivity of every poset with up to 6 elements against a depth-first search."""
    for n in range(7):
        for P in naturally_labelled_posets(n):
            assert is_connected(P) == (len(_graph_components(P)) <= 1), P
            assert len(set(components(P.elements, P.leq).values())) == len(_graph_components(P))
