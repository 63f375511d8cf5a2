"""Operator semigroup of the perception process.

A control matrix picks one neighbor per node; paired with a reaction
matrix it becomes an operator on joint states.  Products of these
operators form a finite semigroup whose minimal left ideals pin down
where the random process can end up.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .config import BOUND_SEMIGROUP, BOUND_STATES, trajectory_seed
from .errors import BoundExceededError, NonPotentialError, ValidationError
from .groups import GroupElement, ReactionGroup
from .network import Marking, RelationGraph, bipartition, complete_extension


@dataclass(frozen=True)
class ControlMatrix:
    """0/1 matrix with a single unit per row, supported on graph edges.

    Row i holds its unit in the column of the neighbor that node i reads
    this step; rowmap[i] is that column.
    """

    rowmap: tuple[int, ...]

    @property
    def matrix(self) -> np.ndarray:
        n = len(self.rowmap)
        out = np.zeros((n, n), dtype=int)
        for i, j in enumerate(self.rowmap):
            out[i, j] = 1
        return out

    @classmethod
    def from_matrix(cls, array, graph: RelationGraph | None = None) -> "ControlMatrix":
        arr = np.asarray(array)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError("control matrix must be square")
        rowmap = []
        for i, row in enumerate(arr):
            hits = np.flatnonzero(row)
            if len(hits) != 1 or row[hits[0]] != 1:
                raise ValidationError(f"row {i} must have exactly one unit entry")
            rowmap.append(int(hits[0]))
        cm = cls(tuple(rowmap))
        if graph is not None:
            cm.validate_on(graph)
        return cm

    def validate_on(self, graph: RelationGraph) -> None:
        if len(self.rowmap) != len(graph):
            raise ValidationError("control matrix size does not match the graph")
        for i, j in enumerate(self.rowmap):
            if not graph.has_edge(i, j):
                raise ValidationError(
                    f"row {i} points at {j}, which is not a neighbor"
                )


def control_matrices(graph: RelationGraph) -> Iterator[ControlMatrix]:
    """All control matrices of the graph, lexicographic in the rowmap."""
    pools = [graph.neighbors(i) for i in range(len(graph))]
    for rowmap in itertools.product(*pools):
        yield ControlMatrix(rowmap)


def word_index_map(word: Sequence[ControlMatrix]) -> tuple[int, ...]:
    """Index map of a product of control matrices, first factor acting first."""
    if not word:
        raise ValidationError("empty control word")
    n = len(word[0].rowmap)
    out = tuple(range(n))
    for cm in word:
        if len(cm.rowmap) != n:
            raise ValidationError("control matrices have mixed sizes")
        out = tuple(cm.rowmap[i] for i in out)
    return out


class ReactionMatrix:
    """Square matrix of reactions with identity diagonal.

    Entry (i, j) carries the element a state travels through when node i
    reads node j.  A full matrix is potential when entry(i,j)*entry(j,k)
    == entry(i,k) for all triples; construction checks this unless
    validate=False, which exists for deliberately broken fixtures.
    """

    def __init__(
        self,
        group: ReactionGroup,
        entries: Sequence[Sequence],
        graph: RelationGraph | None = None,
        validate: bool = True,
    ):
        self.group = group
        n = len(entries)
        if n < 2:
            raise ValidationError("reaction matrix needs at least two nodes")
        grid = []
        for i, row in enumerate(entries):
            if len(row) != n:
                raise ValidationError("reaction matrix must be square")
            grid.append(tuple(group.element(v) for v in row))
        self.entries = tuple(grid)
        self.n = n
        if graph is None:
            labels = tuple(range(1, n + 1))
            graph = RelationGraph.complete(labels)
        elif len(graph) != n:
            raise ValidationError("graph size does not match the reaction matrix")
        self.graph = graph
        for i in range(n):
            if not self.entries[i][i].is_identity:
                raise ValidationError(f"diagonal entry ({i}, {i}) is not the identity")
        if validate:
            self._check_potential()

    def _check_potential(self) -> None:
        for i, j, k in itertools.product(range(self.n), repeat=3):
            if self.entries[i][j] * self.entries[j][k] != self.entries[i][k]:
                raise NonPotentialError(
                    f"entries ({i},{j})*({j},{k}) do not match entry ({i},{k})"
                )

    @classmethod
    def from_marking(cls, marking: Marking, validate: bool = True) -> "ReactionMatrix":
        """Extend the marking to all node pairs and wrap it as a matrix.

        The extension exists exactly when the marking is potential, so a
        non-potential marking raises before any matrix is built.
        """
        full = complete_extension(marking)
        n = len(marking.graph)
        identity = marking.group.identity
        entries = [
            [identity if i == j else full.mark(i, j) for j in range(n)]
            for i in range(n)
        ]
        return cls(marking.group, entries, graph=marking.graph, validate=validate)

    def entry(self, i: int, j: int) -> GroupElement:
        return self.entries[i][j]

    def is_potential(self) -> bool:
        try:
            self._check_potential()
        except NonPotentialError:
            return False
        return True


@dataclass(frozen=True)
class OperatorMatrix:
    """Action on joint states: node i reads position pattern[i] through values[i]."""

    pattern: tuple[int, ...]
    values: tuple[GroupElement, ...]

    def __post_init__(self) -> None:
        if len(self.pattern) != len(self.values):
            raise ValidationError("pattern and values must have equal length")

    def apply(self, x: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(v(x[p]) for p, v in zip(self.pattern, self.values))

    def __mul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        """Composite acting as self after other on states."""
        if len(self.pattern) != len(other.pattern):
            raise ValidationError("operators act on different node counts")
        pattern = tuple(other.pattern[p] for p in self.pattern)
        values = tuple(
            v * other.values[p] for p, v in zip(self.pattern, self.values)
        )
        return OperatorMatrix(pattern, values)

    @property
    def rank(self) -> int:
        return len(set(self.pattern))

    def sort_key(self) -> tuple:
        return (self.pattern, tuple(v.index for v in self.values))


def star_product(control, rg: ReactionMatrix) -> OperatorMatrix:
    """Operator of one step: pattern from the control, reactions from rg."""
    pattern = control.rowmap if isinstance(control, ControlMatrix) else tuple(control)
    if len(pattern) != rg.n:
        raise ValidationError("control size does not match the reaction matrix")
    values = tuple(rg.entry(i, j) for i, j in enumerate(pattern))
    return OperatorMatrix(pattern, values)


def rho(word: Sequence[ControlMatrix], rg: ReactionMatrix, check: bool = True) -> OperatorMatrix:
    """Operator of a control word, first factor acting first on indices.

    With check=True the product is compared against the one-step operator
    of the composite index map; a mismatch means the reaction matrix is
    not potential and raises with the offending entry.
    """
    if not word:
        raise ValidationError("empty control word")
    acc = star_product(word[0], rg)
    for cm in word[1:]:
        acc = acc * star_product(cm, rg)
    if check:
        direct = star_product(word_index_map(word), rg)
        if acc != direct:
            bad = next(
                i
                for i in range(rg.n)
                if acc.values[i] != direct.values[i] or acc.pattern[i] != direct.pattern[i]
            )
            raise NonPotentialError(
                f"word operator deviates from the one-step operator at row {bad}: "
                "the reaction matrix is not potential"
            )
    return acc


# -- minimal left ideals -------------------------------------------------------


def _achievable_images(graph: RelationGraph):
    """Breadth-first search over images of control words, as bitmasks.

    Children of an image T are the sets T' such that some neighbor choice
    on T covers T' exactly: every member of T needs a neighbor in T', and
    a matching argument (Hall's condition) must saturate T'.
    """
    n = len(graph)
    nbr = [0] * n
    for i in range(n):
        for j in graph.neighbors(i):
            nbr[i] |= 1 << j
    full = (1 << n) - 1

    def children(t_mask: int) -> list[int]:
        members = [i for i in range(n) if t_mask >> i & 1]
        reach = 0
        for i in members:
            reach |= nbr[i]
        out = []
        sub = reach
        while sub:
            # Images never grow along a word, so larger candidates are dead.
            if bin(sub).count("1") <= len(members) and _coverable(
                members, nbr, sub
            ):
                out.append(sub)
            sub = (sub - 1) & reach
        return out

    parent: dict[int, int] = {}
    seen = {full}
    queue = deque([full])
    while queue:
        t_mask = queue.popleft()
        for child in children(t_mask):
            if child not in parent:
                parent[child] = t_mask
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return parent, full


def _coverable(members: list[int], nbr: list[int], target: int) -> bool:
    """Does some choice c(t) in N(t) map the members onto target exactly?"""
    if any(not nbr[t] & target for t in members):
        return False
    # Hall's condition over subsets of the target.
    sub = target
    while sub:
        hits = sum(1 for t in members if nbr[t] & sub)
        if hits < bin(sub).count("1"):
            return False
        sub = (sub - 1) & target
    return True


def _choice_matrix(
    graph: RelationGraph, source: int, target: int
) -> ControlMatrix:
    """Control matrix sending the source image onto the target image."""
    n = len(graph)
    nbr = [set(graph.neighbors(i)) for i in range(n)]
    members = [i for i in range(n) if source >> i & 1]
    wanted = [j for j in range(n) if target >> j & 1]

    match: dict[int, int] = {}

    def augment(j: int, banned: set[int]) -> bool:
        for t in members:
            if t in banned or j not in nbr[t]:
                continue
            banned.add(t)
            if t not in match or augment(match[t], banned):
                match[t] = j
                return True
        return False

    for j in wanted:
        if not augment(j, set()):
            raise ValidationError("image step is not coverable")

    rowmap = []
    for i in range(n):
        if i in match:
            rowmap.append(match[i])
        elif source >> i & 1:
            rowmap.append(min(j for j in nbr[i] if target >> j & 1))
        else:
            rowmap.append(min(nbr[i]))
    return ControlMatrix(tuple(rowmap))


def _min_rank_witness(graph: RelationGraph) -> list[ControlMatrix]:
    """A control word whose operator has the smallest achievable image."""
    parent, full = _achievable_images(graph)
    best = min(parent, key=lambda m: (bin(m).count("1"), m))
    path = [best]
    while path[-1] != full:
        path.append(parent[path[-1]])
    path.reverse()
    if len(path) == 1:
        # Only the full image is achievable; one explicit step realizes it.
        path = [full, full]
    return [
        _choice_matrix(graph, src, dst) for src, dst in zip(path, path[1:])
    ]


def _left_children(op: OperatorMatrix, rg: ReactionMatrix) -> Iterator[OperatorMatrix]:
    """All g*op for one-step operators g; choices decouple per node."""
    options = []
    for i in range(rg.n):
        seen = {}
        for c in rg.graph.neighbors(i):
            key = (op.pattern[c], rg.entry(i, c) * op.values[c])
            seen[(key[0], key[1].index)] = key
        options.append([seen[k] for k in sorted(seen)])
    for combo in itertools.product(*options):
        yield OperatorMatrix(
            tuple(p for p, _ in combo), tuple(v for _, v in combo)
        )


def _right_children(op: OperatorMatrix, rg: ReactionMatrix) -> Iterator[OperatorMatrix]:
    """All op*g for one-step operators g; only choices on the image matter."""
    image = sorted(set(op.pattern))
    pools = [sorted(rg.graph.neighbors(t)) for t in image]
    for combo in itertools.product(*pools):
        dest = dict(zip(image, combo))
        pattern = tuple(dest[p] for p in op.pattern)
        values = tuple(
            v * rg.entry(p, dest[p]) for p, v in zip(op.pattern, op.values)
        )
        yield OperatorMatrix(pattern, values)


_CLOSURE_CAP = 200000


def _two_sided_closure(seed: OperatorMatrix, rg: ReactionMatrix) -> frozenset:
    out = {seed}
    queue = [seed]
    while queue:
        op = queue.pop()
        for child in itertools.chain(
            _left_children(op, rg), _right_children(op, rg)
        ):
            if child not in out:
                out.add(child)
                queue.append(child)
                if len(out) > _CLOSURE_CAP:
                    raise BoundExceededError(
                        "two-sided closure exceeded the safety cap"
                    )
    return frozenset(out)


def _left_closure(seed: OperatorMatrix, rg: ReactionMatrix) -> frozenset:
    out = {seed}
    queue = [seed]
    while queue:
        op = queue.pop()
        for child in _left_children(op, rg):
            if child not in out:
                out.add(child)
                queue.append(child)
                if len(out) > _CLOSURE_CAP:
                    raise BoundExceededError(
                        "left closure exceeded the safety cap"
                    )
    return frozenset(out)


def _kernel(rg: ReactionMatrix) -> frozenset:
    """Smallest two-sided ideal, found by shrinking closures to a fixpoint."""
    witness = _min_rank_witness(rg.graph)
    current = _two_sided_closure(rho(witness, rg, check=False), rg)
    while True:
        for op in sorted(current, key=OperatorMatrix.sort_key):
            candidate = _two_sided_closure(op, rg)
            if len(candidate) < len(current):
                current = candidate
                break
        else:
            return current


@dataclass(frozen=True)
class LeftIdeal:
    """Minimal left ideal of the operator semigroup."""

    elements: tuple[OperatorMatrix, ...]
    kind: str
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class IdealEnumeration:
    ideals: tuple[LeftIdeal, ...]
    kernel_size: int
    min_rank: int
    expected_count: int | None
    matches_expected: bool | None


def theorem1_expected(graph: RelationGraph) -> int:
    """Predicted number of minimal left ideals for a potential matrix."""
    parts = bipartition(graph)
    if parts is None:
        return len(graph)
    return len(parts[0]) * len(parts[1])


def _classify(elements: tuple[OperatorMatrix, ...], graph: RelationGraph) -> tuple[str, tuple[int, ...]]:
    if len(elements) == 1 and elements[0].rank == 1:
        return "column", (elements[0].pattern[0],)
    parts = bipartition(graph)
    if parts is not None and len(elements) == 2:
        pats = [el.pattern for el in elements]
        images = [set(p) for p in pats]
        if all(len(im) <= 2 for im in images) and images[0] == images[1]:
            part_sets = [set(parts[0]), set(parts[1])]
            def constant_on_parts(pat):
                vals = []
                for ps in part_sets:
                    got = {pat[i] for i in ps}
                    if len(got) != 1:
                        return None
                    vals.append(got.pop())
                return tuple(vals)
            c0 = constant_on_parts(pats[0])
            c1 = constant_on_parts(pats[1])
            if c0 is not None and c1 is not None and c0 == (c1[1], c1[0]):
                return "pair", tuple(sorted(images[0]))
    return "other", tuple(sorted(set().union(*(el.pattern for el in elements))))


def enumerate_ideals(
    rg: ReactionMatrix, bound: int = BOUND_SEMIGROUP
) -> IdealEnumeration:
    """All minimal left ideals of the semigroup generated by one-step operators.

    Works through the kernel: every minimal left ideal lives inside the
    smallest two-sided ideal and is the left closure of any of its own
    members, so the distinct left closures of kernel elements are exactly
    the minimal left ideals.
    """
    if rg.n > bound:
        raise BoundExceededError(
            f"semigroup enumeration limited to {bound} nodes, got {rg.n}"
        )
    kernel = _kernel(rg)
    min_rank = min(op.rank for op in kernel)
    closures: dict[frozenset, frozenset] = {}
    assigned: set[OperatorMatrix] = set()
    for op in sorted(kernel, key=OperatorMatrix.sort_key):
        if op in assigned:
            continue
        cls = _left_closure(op, rg)
        closures[cls] = cls
        assigned.update(cls)
    ideals = []
    for cls in closures:
        elements = tuple(sorted(cls, key=OperatorMatrix.sort_key))
        kind, nodes = _classify(elements, rg.graph)
        ideals.append(LeftIdeal(elements, kind, nodes))
    ideals.sort(key=lambda ideal: ideal.elements[0].sort_key())
    expected = theorem1_expected(rg.graph) if rg.is_potential() else None
    matches = (len(ideals) == expected) if expected is not None else None
    return IdealEnumeration(
        ideals=tuple(ideals),
        kernel_size=len(kernel),
        min_rank=min_rank,
        expected_count=expected,
        matches_expected=matches,
    )


def final_states(
    rg: ReactionMatrix,
    enumeration: IdealEnumeration | None = None,
    bound: int = BOUND_STATES,
) -> frozenset[tuple[int, ...]]:
    """Joint states reachable under minimal-ideal operators from anywhere."""
    if enumeration is None:
        enumeration = enumerate_ideals(rg)
    k = len(rg.group.states)
    size = k ** rg.n
    if size > bound:
        raise BoundExceededError(
            f"state space has {size} elements, which exceeds the bound {bound}"
        )
    out = set()
    for ideal in enumeration.ideals:
        for op in ideal.elements:
            for x in itertools.product(range(k), repeat=rg.n):
                out.add(op.apply(x))
    return frozenset(out)


# -- random products -----------------------------------------------------------


@dataclass(frozen=True)
class ProductTrajectory:
    """One run of the random perception process with its operator trail."""

    start: tuple[int, ...]
    states: tuple[tuple[int, ...], ...]
    ranks: tuple[int, ...]
    absorbed_at: int | None
    final_state: tuple[int, ...]
    final_operator: OperatorMatrix


def random_product_process(
    rg: ReactionMatrix,
    steps: int,
    seed: int = 0,
    index: int = 0,
    start: tuple[int, ...] | None = None,
    min_rank: int | None = None,
) -> ProductTrajectory:
    """Multiply random one-step operators and track the state they drive.

    Each trajectory draws from its own stream, derived from the root seed
    and the trajectory index, so batches are reproducible and independent
    of evaluation order.  Absorption is the first step where the
    accumulated operator reaches the given minimal rank.
    """
    if steps < 1:
        raise ValidationError("need at least one step")
    rng = random.Random(trajectory_seed(seed, index))
    k = len(rg.group.states)
    if start is None:
        start = tuple(rng.randrange(k) for _ in range(rg.n))
    elif len(start) != rg.n:
        raise ValidationError("start state length does not match the matrix")
    pools = [sorted(rg.graph.neighbors(i)) for i in range(rg.n)]

    acc: OperatorMatrix | None = None
    x = start
    states = [start]
    ranks = []
    absorbed = None
    for t in range(1, steps + 1):
        rowmap = tuple(rng.choice(pool) for pool in pools)
        step_op = star_product(ControlMatrix(rowmap), rg)
        acc = step_op if acc is None else step_op * acc
        x = step_op.apply(x)
        states.append(x)
        ranks.append(acc.rank)
        if absorbed is None and min_rank is not None and acc.rank <= min_rank:
            absorbed = t
    return ProductTrajectory(
        start=start,
        states=tuple(states),
        ranks=tuple(ranks),
        absorbed_at=absorbed,
        final_state=x,
        final_operator=acc,
    )
