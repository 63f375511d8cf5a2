"""Synchronous dynamics, the induced chain, the core and its characteristic."""

import collections
import math
import random
from fractions import Fraction

import pytest

from balancenets.dynamics import (
    ChoiceDistribution,
    apply_F,
    build_markov,
    core_set,
    essential_check,
    limit_exists,
    max_nonergodicity_scan,
    state_space,
    stationary_count,
    theoremB_verify,
)
from balancenets.errors import BoundExceededError, ValidationError
from balancenets.groups import sign_group
from balancenets.network import Marking, RelationGraph

G2 = sign_group()


def _triangle(marks):
    graph = RelationGraph.complete([1, 2, 3])
    return Marking.from_names(graph, G2, marks, symmetric=True)


BALANCED = _triangle({(0, 1): "g", (0, 2): "g", (1, 2): "e"})
ONE_HOSTILE = _triangle({(0, 1): "e", (0, 2): "g", (1, 2): "e"})
ALL_G = _triangle({(0, 1): "g", (0, 2): "g", (1, 2): "g"})


def _square(marks):
    graph = RelationGraph.cycle([1, 2, 3, 4])
    return Marking.from_names(graph, G2, marks, symmetric=True)


ALL_E_SQUARE = _square({(0, 1): "e", (1, 2): "e", (2, 3): "e", (3, 0): "e"})


def test_state_space_enumeration():
    states = state_space(BALANCED)
    assert len(states) == 8
    assert states[0] == (0, 0, 0)
    assert states[-1] == (1, 1, 1)
    with pytest.raises(BoundExceededError):
        state_space(BALANCED, bound=4)


def test_apply_F_on_the_oscillating_pair():
    # With one hostile edge the alternating states swap with probability one.
    assert apply_F(ONE_HOSTILE, (0, 1, 0)) == frozenset({(1, 0, 1)})
    assert apply_F(ONE_HOSTILE, (1, 0, 1)) == frozenset({(0, 1, 0)})
    # Elsewhere the image has several options.
    assert len(apply_F(ONE_HOSTILE, (0, 0, 0))) > 1


def test_apply_F_fixes_the_balanced_core():
    assert apply_F(BALANCED, (0, 1, 1)) == frozenset({(0, 1, 1)})
    assert apply_F(BALANCED, (1, 0, 0)) == frozenset({(1, 0, 0)})


def test_choice_distribution_validation():
    graph = BALANCED.graph
    uniform = ChoiceDistribution.uniform(graph)
    assert uniform.prob(0, 1) == Fraction(1, 2)
    with pytest.raises(ValidationError):
        ChoiceDistribution(graph, {(0, 1): Fraction(1)})  # misses neighbors
    weights = {e: Fraction(1) for e in graph.directed_edges}
    weights[(0, 1)] = Fraction(0)
    with pytest.raises(ValidationError):
        ChoiceDistribution(graph, weights)


def test_build_markov_rows_are_probabilities():
    model = build_markov(BALANCED, exact=True)
    assert model.matrix.shape == (8, 8)
    assert all(abs(row.sum() - 1.0) < 1e-12 for row in model.matrix)
    assert all(sum(row.values()) == 1 for row in model.exact_rows)


def test_transition_row_matches_simulation():
    model = build_markov(BALANCED)
    x = (0, 0, 0)
    row = model.matrix[model.index(x)]
    rng = random.Random(20240817)
    trials = 20000
    counts = collections.Counter()
    for _ in range(trials):
        nxt = tuple(
            BALANCED.mark(i, j)(x[j])
            for i in range(3)
            for j in [rng.choice(BALANCED.graph.neighbors(i))]
        )
        counts[nxt] += 1
    for y, hits in counts.items():
        p = row[model.index(y)]
        assert p > 0
        sigma = math.sqrt(p * (1.0 - p) / trials)
        assert abs(hits / trials - p) <= 4.0 * sigma + 1e-9


def test_stationary_counts_and_limits():
    balanced = build_markov(BALANCED)
    assert stationary_count(balanced) == 2
    assert limit_exists(balanced)

    hostile = build_markov(ONE_HOSTILE)
    assert stationary_count(hostile) == 1
    assert not limit_exists(hostile)

    allg = build_markov(ALL_G)
    assert stationary_count(allg) == 1
    assert not limit_exists(allg)


def test_recurrent_classes_of_the_balanced_chain():
    model = build_markov(BALANCED)
    classes = model.recurrent_classes()
    assert [sorted(c) for c in classes] == [[(0, 1, 1)], [(1, 0, 0)]]


def test_essential_check():
    model = build_markov(BALANCED)
    assert essential_check(model, frozenset({(0, 1, 1), (1, 0, 0)}))
    # A non-closed singleton is not essential.
    assert not essential_check(model, frozenset({(0, 0, 0)}))
    assert not essential_check(model, frozenset())


def test_core_set_balanced():
    core = core_set(BALANCED)
    assert core.states == frozenset({(0, 1, 1), (1, 0, 0)})
    assert core.closed
    assert core.a1_ok and core.a2_ok
    assert not core.bipartite
    assert core.matches_closed_form
    # The transport of the root parameter reproduces each member.
    t0 = core.transport[0]
    assert all(x == tuple(core.transport[j](t0.perm.index(x[0]))
                          for j in range(3))
               for x in core.states)


def test_core_set_oscillating():
    core = core_set(ONE_HOSTILE)
    assert core.states == frozenset({(0, 1, 0), (1, 0, 1)})
    assert core.closed
    assert core.matches_closed_form


def test_core_set_square_is_bipartite():
    core = core_set(ALL_E_SQUARE)
    assert core.bipartite
    # Two free parameters, one per part: all states constant on each part.
    assert core.states == frozenset(
        {(t, r, t, r) for t in range(2) for r in range(2)}
    )
    assert core.matches_closed_form


def test_theoremB_non_bipartite():
    report = theoremB_verify(BALANCED)
    assert report.ok
    assert not report.bipartite
    assert report.core_matches
    assert report.realized[0].is_identity
    assert {s.name for s in report.solutions} == {"e", "g"}
    assert report.realized_is_solution
    assert report.second_step_matches
    assert report.best_solution.name == "e"
    assert report.predicted_stationary == 2
    assert report.predicted_stationary == stationary_count(build_markov(BALANCED))


def test_theoremB_predicts_the_oscillating_count():
    report = theoremB_verify(ONE_HOSTILE)
    assert report.ok
    assert report.realized[0].name == "g"
    assert report.predicted_stationary == 1
    assert report.predicted_stationary == stationary_count(build_markov(ONE_HOSTILE))


def test_theoremB_bipartite_square():
    report = theoremB_verify(ALL_E_SQUARE)
    assert report.ok
    assert report.bipartite
    v, w = report.realized
    assert v.is_identity and w.is_identity
    assert report.realized_is_solution
    assert report.second_step_matches
    assert report.predicted_stationary == 3
    assert report.predicted_stationary == stationary_count(
        build_markov(ALL_E_SQUARE)
    )


def test_theoremB_reports_failed_criteria():
    bad_square = _square({(0, 1): "g", (1, 2): "e", (2, 3): "e", (3, 0): "e"})
    report = theoremB_verify(bad_square)
    assert not report.ok
    assert not report.a1_ok


def test_max_nonergodicity_scan_triangle():
    graph = RelationGraph.complete([1, 2, 3])
    result = max_nonergodicity_scan(graph, G2)
    assert result.total_scanned == 8
    assert result.best_count == 2
    assert len(result.argmax) == 4
    # Exactly the potential markings reach the maximum.
    from balancenets.potential import is_potential

    assert all(is_potential(m).ok for m in result.argmax)


def test_max_nonergodicity_scan_caps_enumeration():
    graph = RelationGraph.complete([1, 2, 3])
    with pytest.raises(BoundExceededError):
        max_nonergodicity_scan(graph, G2, max_fields=4)
