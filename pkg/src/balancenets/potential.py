"""Path products, potentiality tests and potential field generation.

A marking is potential when the ordered product of marks along every closed
path is the identity.  That holds exactly when marks are consistent with a
node potential u built along a spanning tree: u(j) * g(j, k) == u(k) for
every edge.  The tree test is sound for non-abelian groups, unlike checks
that only cover a cycle basis.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ValidationError
from .groups import GroupElement, ReactionGroup, sign_group
from .network import (
    Marking,
    Path,
    RelationGraph,
    StarMarking,
    StarPath,
    star_marking,
    two_step,
)


def product_integral(marking: Marking, path: Path) -> GroupElement:
    """Ordered product of marks along the path; empty path gives identity."""
    acc = marking.group.identity
    for i, j in path.edges:
        acc = acc * marking.mark(i, j)
    return acc


def product_integral_star(marks: StarMarking, path: StarPath) -> GroupElement:
    acc = marks.group.identity
    for e in path.edges:
        acc = acc * marks.mark(*e)
    return acc


# -- generic spanning-tree consistency walk ---------------------------------


def _tree_consistency(
    nodes: Sequence[int],
    edges: Sequence[tuple],
    root: int,
    identity,
    compose: Callable,
    equal: Callable,
):
    """Shared potentiality test over one connected component.

    ``edges`` holds tuples (tail, head, value, reverse_value) where
    reverse_value is the mark of the opposite direction (used only to walk
    back along tree edges when building a witness cycle).  Returns
    ``(u, None)`` on success, or ``(None, (cycle_nodes, product))`` where the
    cycle starts and ends at the root and multiplies to something that is
    not the identity.
    """
    adjacency: dict[int, list[int]] = {v: [] for v in nodes}
    for idx, (i, _, _, _) in enumerate(edges):
        adjacency[i].append(idx)

    u = {root: identity}
    parent_edge: dict[int, int] = {}
    queue = deque([root])
    while queue:
        i = queue.popleft()
        for idx in adjacency[i]:
            _, j, val, _ = edges[idx]
            if j not in u:
                u[j] = compose(u[i], val)
                parent_edge[j] = idx
                queue.append(j)
    if len(u) != len(adjacency):
        raise ValidationError("component is not connected from the chosen root")

    def climb(node: int) -> tuple[list, list[int]]:
        """Forward values and node list along the tree path root -> node."""
        vals: list = []
        rev_nodes = [node]
        while node != root:
            idx = parent_edge[node]
            i, j, val, _ = edges[idx]
            vals.append(val)
            node = i
            rev_nodes.append(node)
        vals.reverse()
        rev_nodes.reverse()
        return vals, rev_nodes

    def descend(node: int) -> tuple[list, list[int]]:
        """Reverse values and node list along the tree path node -> root."""
        vals: list = []
        nodes_out = [node]
        while node != root:
            idx = parent_edge[node]
            i, _, _, rval = edges[idx]
            vals.append(rval)
            node = i
            nodes_out.append(node)
        return vals, nodes_out

    def fold(vals: Iterable):
        acc = identity
        for v in vals:
            acc = compose(acc, v)
        return acc

    for i, j, val, _ in edges:
        if equal(compose(u[i], val), u[j]):
            continue
        out_vals, out_nodes = climb(i)
        back_vals, back_nodes = descend(j)
        cycle_vals = out_vals + [val] + back_vals
        cycle_nodes = out_nodes + back_nodes
        product = fold(cycle_vals)
        if not equal(product, identity):
            return None, (tuple(cycle_nodes), product)
        # The round trip through j alone must then fail instead.
        out_vals, out_nodes = climb(j)
        back_vals, back_nodes = descend(j)
        cycle_vals = out_vals + back_vals
        cycle_nodes = out_nodes + back_nodes[1:]
        return None, (tuple(cycle_nodes), fold(cycle_vals))
    return u, None


@dataclass(frozen=True)
class PotentialFunction:
    """Node potential with u(root) = identity and u(j) * g(j,k) = u(k)."""

    root: int
    values: dict[int, GroupElement]

    def check(self, marking: Marking) -> bool:
        return all(
            self.values[i] * marking.mark(i, j) == self.values[j]
            for i, j in marking.graph.directed_edges
        )


@dataclass(frozen=True)
class PotentialVerdict:
    ok: bool
    potential: PotentialFunction | None
    witness_cycle_nodes: tuple[int, ...] | None
    witness_product: GroupElement | None


def is_potential(marking: Marking) -> PotentialVerdict:
    """Spanning-tree potentiality test with a closed-cycle witness on failure."""
    graph = marking.graph
    edges = [
        (i, j, marking.mark(i, j), marking.mark(j, i))
        for i, j in graph.directed_edges
    ]
    identity = marking.group.identity
    u, witness = _tree_consistency(
        range(len(graph)),
        edges,
        0,
        identity,
        lambda a, b: a * b,
        lambda a, b: a == b,
    )
    if witness is None:
        return PotentialVerdict(True, PotentialFunction(0, u), None, None)
    cycle_nodes, product = witness
    return PotentialVerdict(False, None, cycle_nodes, product)


@dataclass(frozen=True)
class StarPotentialReport:
    """Potentiality of the induced two-step marking, per component."""

    ok: bool
    potentials: tuple[PotentialFunction, ...] | None
    witness_cycle_nodes: tuple[int, ...] | None
    witness_product: GroupElement | None


def check_A1(marking: Marking) -> StarPotentialReport:
    """Potentiality of the induced marks on every two-step component."""
    marks = star_marking(marking)
    star = marks.star
    identity = marking.group.identity
    potentials = []
    for comp in star.components:
        root = min(comp)
        edges = [
            (i, j, marks.mark(i, j, k), marks.mark(j, i, k))
            for i, j, k in star.star_edges
            if i in comp
        ]
        u, witness = _tree_consistency(
            sorted(comp),
            edges,
            root,
            identity,
            lambda a, b: a * b,
            lambda a, b: a == b,
        )
        if witness is not None:
            cycle_nodes, product = witness
            return StarPotentialReport(False, None, cycle_nodes, product)
        potentials.append(PotentialFunction(root, u))
    return StarPotentialReport(True, tuple(potentials), None, None)


@dataclass(frozen=True)
class CharacteristicReactions:
    """Per-node element a_i = g(i,j) * g(j,i), independent of the neighbor j."""

    values: dict[int, GroupElement]

    def uniform(self) -> GroupElement | None:
        elems = list(self.values.values())
        return elems[0] if all(e == elems[0] for e in elems) else None


def check_A2(marking: Marking) -> CharacteristicReactions | None:
    """Round-trip marks g(i,j)*g(j,i) must agree across neighbors of i."""
    graph = marking.graph
    values: dict[int, GroupElement] = {}
    for i in range(len(graph)):
        candidates = [
            marking.mark(i, j) * marking.mark(j, i) for j in graph.neighbors(i)
        ]
        if any(c != candidates[0] for c in candidates[1:]):
            return None
        values[i] = candidates[0]
    return CharacteristicReactions(values)


# -- potential field generation ---------------------------------------------


def generate_potential_fields(n: int, group: ReactionGroup | None = None):
    """All potential symmetric markings of the complete graph over {e, g}.

    The first-row marks g(1, m) are free binary choices; every other mark is
    forced to g(j, m) = g(1, j) * g(1, m).  Yields exactly 2**(n-1) distinct
    markings, in lexicographic order of the choice vector.
    """
    if n < 3:
        raise ValidationError("field generation needs at least three nodes")
    if group is None:
        group = sign_group()
    if len(group) != 2 or not group.involutive:
        raise ValidationError("field generation runs over a two-element group")
    e = group.identity
    g = next(x for x in group if not x.is_identity)
    graph = RelationGraph.complete(tuple(range(1, n + 1)))
    for bits in itertools.product((0, 1), repeat=n - 1):
        first_row = {m: (g if bits[m - 2] else e) for m in range(2, n + 1)}
        values: dict[tuple[int, int], GroupElement] = {}
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                if a == 1:
                    mark = first_row[b]
                else:
                    mark = first_row[a] * first_row[b]
                i, j = a - 1, b - 1
                values[(i, j)] = mark
                values[(j, i)] = mark
        yield Marking(graph, group, values)


def gamma3_solution_family(
    x1: GroupElement, x2: GroupElement, x3: GroupElement
) -> Marking:
    """Triangle marking with potential two-step marks, from three free elements.

    For any triple the induced marks satisfy a(1,2) * a(2,3) * a(3,1) = e on
    the two-step triangle, which is the single relation that matters there.
    """
    group = x1.group
    if x2.group is not group or x3.group is not group:
        raise ValidationError("family parameters must share one group")
    i2, i3 = x2.inverse(), x3.inverse()
    g12 = x1
    g31 = x2
    g32 = x3
    g21 = i3 * x2 * x1 * i3 * x2
    g13 = x1 * i3 * x2 * x1 * i3
    g23 = i3 * x2 * x1 * i3 * x2 * x1 * i3
    graph = RelationGraph.complete((1, 2, 3))
    values = {
        (0, 1): g12,
        (1, 0): g21,
        (0, 2): g13,
        (2, 0): g31,
        (1, 2): g23,
        (2, 1): g32,
    }
    return Marking(graph, group, values)


# -- two-block balance --------------------------------------------------------


@dataclass(frozen=True)
class BalancePartition:
    part_a: frozenset[int]
    part_b: frozenset[int]
    signs: dict[tuple[int, int], int]


def sign_by_identity(g: GroupElement) -> int:
    """Identity marks are friendly (+1), everything else hostile (-1)."""
    return 1 if g.is_identity else -1


def partition_from_signs(
    graph: RelationGraph, signs: Mapping[tuple[int, int], int]
) -> BalancePartition | None:
    """Two-block split with negative edges across and positive edges within.

    Returns None when no such split exists.  An all-positive network comes
    back as (all nodes, empty set).
    """
    n = len(graph)
    color = [-1] * n
    color[0] = 0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in graph.neighbors(i):
            want = color[i] if signs[(i, j)] > 0 else 1 - color[i]
            if color[j] < 0:
                color[j] = want
                queue.append(j)
            elif color[j] != want:
                return None
    part_a = frozenset(i for i in range(n) if color[i] == 0)
    part_b = frozenset(i for i in range(n) if color[i] == 1)
    return BalancePartition(part_a, part_b, dict(signs))


def balance_partition(
    marking: Marking, sign_rule: Callable[[GroupElement], int] = sign_by_identity
) -> BalancePartition | None:
    signs = {edge: sign_rule(g) for edge, g in marking.items()}
    bad = [e for e, s in signs.items() if s not in (-1, 1)]
    if bad:
        raise ValidationError(f"sign rule must return +1 or -1, got {signs[bad[0]]!r}")
    return partition_from_signs(marking.graph, signs)


def balance_witness(
    marking: Marking, sign_rule: Callable[[GroupElement], int] = sign_by_identity
) -> tuple[int, ...] | None:
    """Closed walk crossing an odd number of hostile edges, or None.

    The walk explains why no two-faction split exists; a balanced marking
    returns None.
    """
    signs = {edge: sign_rule(g) for edge, g in marking.items()}
    graph = marking.graph
    n = len(graph)
    color = [-1] * n
    parent: list[int] = [-1] * n
    color[0] = 0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in graph.neighbors(i):
            want = color[i] if signs[(i, j)] > 0 else 1 - color[i]
            if color[j] < 0:
                color[j] = want
                parent[j] = i
                queue.append(j)
            elif color[j] != want:
                up_i = _ancestry(parent, i)
                up_j = _ancestry(parent, j)
                shared = set(up_i) & set(up_j)
                pivot = next(v for v in up_i if v in shared)
                head = list(reversed(up_i[: up_i.index(pivot) + 1]))
                tail = up_j[: up_j.index(pivot)]
                return tuple(head + tail + [pivot])
    return None


def _ancestry(parent: list[int], node: int) -> list[int]:
    chain = [node]
    while parent[chain[-1]] >= 0:
        chain.append(parent[chain[-1]])
    return chain
