"""Operator semigroup: words, the homomorphism law and minimal left ideals."""

import itertools
import random

import numpy as np
import pytest

from balancenets.errors import (
    BoundExceededError,
    NonPotentialError,
    ValidationError,
)
from balancenets.groups import sign_group
from balancenets.network import Marking, RelationGraph
from balancenets.semigroup import (
    ControlMatrix,
    ReactionMatrix,
    control_matrices,
    enumerate_ideals,
    final_states,
    random_product_process,
    rho,
    star_product,
    theorem1_expected,
    word_index_map,
)

G2 = sign_group()


def _triangle_marking(marks):
    graph = RelationGraph.complete([1, 2, 3])
    return Marking.from_names(graph, G2, marks, symmetric=True)


BALANCED_RM = ReactionMatrix.from_marking(
    _triangle_marking({(0, 1): "g", (0, 2): "g", (1, 2): "e"})
)

CHAIN_RM = ReactionMatrix.from_marking(
    Marking.from_names(
        RelationGraph.from_undirected([1, 2, 3], [(1, 2), (2, 3)]),
        G2,
        {(0, 1): "g", (1, 2): "e"},
        symmetric=True,
    )
)

SQUARE_RM = ReactionMatrix.from_marking(
    Marking.from_names(
        RelationGraph.cycle([1, 2, 3, 4]),
        G2,
        {(0, 1): "e", (1, 2): "e", (2, 3): "e", (3, 0): "e"},
        symmetric=True,
    )
)


def _semigroup_closure(rg):
    gens = [star_product(cm, rg) for cm in control_matrices(rg.graph)]
    seen = set(gens)
    queue = list(gens)
    while queue:
        op = queue.pop()
        for g in gens:
            for prod in (op * g, g * op):
                if prod not in seen:
                    seen.add(prod)
                    queue.append(prod)
    return seen


def _minimal_left_ideals_brute(rg):
    """Distinct minimal principal left ideals of the full semigroup."""
    sg = _semigroup_closure(rg)
    principal = {x: frozenset({x} | {s * x for s in sg}) for x in sg}
    return {
        lx
        for x, lx in principal.items()
        if all(principal[y] == lx for y in lx)
    }


def test_control_matrix_validation():
    cm = ControlMatrix.from_matrix([[0, 1, 0], [0, 0, 1], [0, 1, 0]])
    assert cm.rowmap == (1, 2, 1)
    assert np.array_equal(
        cm.matrix, np.array([[0, 1, 0], [0, 0, 1], [0, 1, 0]])
    )
    with pytest.raises(ValidationError):
        ControlMatrix.from_matrix([[1, 1, 0], [0, 0, 1], [0, 1, 0]])
    chain = RelationGraph.from_undirected([1, 2, 3], [(1, 2), (2, 3)])
    with pytest.raises(ValidationError):
        ControlMatrix((2, 0, 1)).validate_on(chain)
    ControlMatrix((1, 0, 1)).validate_on(chain)


def test_control_matrices_enumeration():
    k3 = RelationGraph.complete([1, 2, 3])
    assert len(list(control_matrices(k3))) == 8
    chain = RelationGraph.from_undirected([1, 2, 3], [(1, 2), (2, 3)])
    assert [cm.rowmap for cm in control_matrices(chain)] == [
        (1, 0, 1),
        (1, 2, 1),
    ]


def test_word_index_map_composes_first_factor_first():
    c2 = ControlMatrix.from_matrix([[0, 1, 0], [0, 0, 1], [0, 1, 0]])
    c1 = ControlMatrix.from_matrix([[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    assert word_index_map([c2]) == (1, 2, 1)
    assert word_index_map([c1]) == (2, 0, 1)
    assert word_index_map([c2, c1]) == (0, 1, 0)
    with pytest.raises(ValidationError):
        word_index_map([])


def test_reaction_matrix_construction():
    assert BALANCED_RM.n == 3
    assert BALANCED_RM.entry(0, 1).name == "g"
    assert BALANCED_RM.entry(1, 2).name == "e"
    assert BALANCED_RM.is_potential()
    with pytest.raises(ValidationError):
        ReactionMatrix(G2, [["g", "e"], ["e", "e"]])  # bad diagonal
    with pytest.raises(NonPotentialError):
        ReactionMatrix(
            G2, [["e", "g", "g"], ["g", "e", "g"], ["g", "g", "e"]]
        )
    broken = ReactionMatrix(
        G2,
        [["e", "g", "g"], ["g", "e", "g"], ["g", "g", "e"]],
        validate=False,
    )
    assert not broken.is_potential()


def test_from_marking_requires_potentiality():
    with pytest.raises(NonPotentialError):
        ReactionMatrix.from_marking(
            _triangle_marking({(0, 1): "g", (0, 2): "g", (1, 2): "g"})
        )


def test_from_marking_keeps_the_relation_graph():
    # Entries cover all pairs, but controls stay on the chain.
    assert CHAIN_RM.entry(0, 2).name == "g"
    assert not CHAIN_RM.graph.has_edge(0, 2)


def test_operator_application_and_product():
    op = star_product(ControlMatrix((1, 0, 1)), BALANCED_RM)
    # Nodes 0 and 1 read each other through g, node 2 reads node 1 plainly.
    assert op.apply((0, 0, 0)) == (1, 1, 0)
    assert op.apply((0, 1, 0)) == (0, 1, 1)

    other = star_product(ControlMatrix((2, 2, 0)), BALANCED_RM)
    left = op * other
    for x in itertools.product(range(2), repeat=3):
        assert left.apply(x) == op.apply(other.apply(x))
    assert left.rank <= min(op.rank, other.rank) + 1


def test_rho_homomorphism_on_random_words():
    rng = random.Random(991)
    controls = list(control_matrices(BALANCED_RM.graph))
    for _ in range(1000):
        w1 = [rng.choice(controls) for _ in range(rng.randint(1, 4))]
        w2 = [rng.choice(controls) for _ in range(rng.randint(1, 4))]
        assert rho(w1 + w2, BALANCED_RM) == rho(w1, BALANCED_RM) * rho(
            w2, BALANCED_RM
        )


def test_rho_check_catches_non_potential_matrices():
    broken = ReactionMatrix(
        G2,
        [["e", "g", "g"], ["g", "e", "g"], ["g", "g", "e"]],
        validate=False,
    )
    word = [ControlMatrix((1, 2, 0)), ControlMatrix((1, 2, 0))]
    with pytest.raises(NonPotentialError):
        rho(word, broken)
    # The uncheck variant still produces the accumulated product.
    op = rho(word, broken, check=False)
    assert op.pattern == (2, 0, 1)
    assert all(v.is_identity for v in op.values)


def test_theorem1_expected_counts():
    assert theorem1_expected(RelationGraph.complete([1, 2, 3])) == 3
    assert theorem1_expected(RelationGraph.complete([1, 2, 3, 4, 5])) == 5
    assert theorem1_expected(RelationGraph.cycle([1, 2, 3, 4])) == 4
    assert (
        theorem1_expected(
            RelationGraph.from_undirected([1, 2, 3], [(1, 2), (2, 3)])
        )
        == 2
    )


@pytest.mark.parametrize(
    "rm,expected",
    [(BALANCED_RM, 3), (CHAIN_RM, 2), (SQUARE_RM, 4)],
)
def test_enumerate_ideals_matches_brute_force(rm, expected):
    enumeration = enumerate_ideals(rm)
    assert enumeration.expected_count == expected
    assert enumeration.matches_expected
    assert len(enumeration.ideals) == expected

    brute = _minimal_left_ideals_brute(rm)
    mine = {frozenset(ideal.elements) for ideal in enumeration.ideals}
    assert mine == brute

    # The kernel is exactly the union of the minimal left ideals.
    assert enumeration.kernel_size == sum(
        len(ideal.elements) for ideal in enumeration.ideals
    )
    assert all(
        op.rank == enumeration.min_rank
        for ideal in enumeration.ideals
        for op in ideal.elements
    )


def test_ideal_kinds_and_nodes():
    non_bip = enumerate_ideals(BALANCED_RM)
    assert [ideal.kind for ideal in non_bip.ideals] == ["column"] * 3
    assert sorted(ideal.nodes for ideal in non_bip.ideals) == [(0,), (1,), (2,)]

    bip = enumerate_ideals(CHAIN_RM)
    assert [ideal.kind for ideal in bip.ideals] == ["pair", "pair"]
    assert sorted(ideal.nodes for ideal in bip.ideals) == [(0, 1), (1, 2)]


def test_enumerate_ideals_bound():
    with pytest.raises(BoundExceededError):
        enumerate_ideals(BALANCED_RM, bound=2)


def test_final_states_balanced():
    assert final_states(BALANCED_RM) == frozenset({(0, 1, 1), (1, 0, 0)})


def test_final_states_square_matches_recurrent_classes():
    from balancenets.dynamics import build_markov

    reachable = final_states(SQUARE_RM)
    marking = Marking.constant(SQUARE_RM.graph, G2.identity)
    model = build_markov(marking)
    recurrent = frozenset().union(*model.recurrent_classes())
    assert reachable == recurrent


def test_random_product_process_is_reproducible():
    a = random_product_process(BALANCED_RM, steps=20, seed=7, index=3)
    b = random_product_process(BALANCED_RM, steps=20, seed=7, index=3)
    assert a == b
    c = random_product_process(BALANCED_RM, steps=20, seed=7, index=4)
    assert a.states != c.states or a.start != c.start


def test_random_product_process_absorbs():
    enumeration = enumerate_ideals(BALANCED_RM)
    finals = final_states(BALANCED_RM, enumeration)
    for index in range(16):
        run = random_product_process(
            BALANCED_RM, steps=64, seed=11, index=index,
            min_rank=enumeration.min_rank,
        )
        assert run.absorbed_at is not None
        assert all(r1 >= r2 for r1, r2 in zip(run.ranks, run.ranks[1:]))
        assert run.final_state in finals
        assert run.final_operator.rank == run.ranks[-1]
        assert run.states[-1] == run.final_state


def test_random_product_process_validation():
    with pytest.raises(ValidationError):
        random_product_process(BALANCED_RM, steps=0)
    with pytest.raises(ValidationError):
        random_product_process(BALANCED_RM, steps=5, start=(0, 0))
    fixed = random_product_process(BALANCED_RM, steps=5, start=(1, 0, 1))
    assert fixed.start == (1, 0, 1)
