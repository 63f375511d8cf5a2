"""Finite permutation groups acting on a shared state alphabet.

A reaction group is stored as an explicit list of permutations of the state
set together with a composition table.  The product convention matches how
marks act on states along a path: ``(g * h)(x) == g(h(x))``, so in a written
product the right factor is applied first.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .config import BOUND_GRP
from .errors import BoundExceededError, GroupMismatchError, ValidationError


@dataclass(frozen=True)
class StateSet:
    """Ordered alphabet of automaton states."""

    labels: tuple

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValidationError("state set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("state labels must be distinct")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown state label {label!r}") from None


class GroupElement:
    """One permutation of the state set, tied to its owning group."""

    __slots__ = ("group", "index")

    def __init__(self, group: "ReactionGroup", index: int):
        self.group = group
        self.index = index

    @property
    def perm(self) -> tuple[int, ...]:
        return self.group.perms[self.index]

    @property
    def name(self) -> str:
        return self.group.names[self.index]

    def __call__(self, state: int) -> int:
        """Apply the permutation to a state index."""
        return self.perm[state]

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.group.compose(self, other)

    def inverse(self) -> "GroupElement":
        return self.group.inverse(self)

    @property
    def is_identity(self) -> bool:
        return self.index == self.group.identity_index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupElement)
            and other.group is self.group
            and other.index == self.index
        )

    def __hash__(self) -> int:
        return hash((id(self.group), self.index))

    def __repr__(self) -> str:
        return f"GroupElement({self.name!r})"


class ReactionGroup:
    """Finite permutation group with a precomputed composition table."""

    def __init__(
        self,
        states: StateSet | Sequence,
        perms: Iterable[Sequence[int]],
        names: Sequence[str] | None = None,
        bound: int = BOUND_GRP,
    ):
        if not isinstance(states, StateSet):
            states = StateSet(tuple(states))
        self.states = states
        k = len(states)
        self.perms: tuple[tuple[int, ...], ...] = tuple(tuple(p) for p in perms)
        order = len(self.perms)
        if order == 0:
            raise ValidationError("group needs at least one element")
        if order > bound:
            raise BoundExceededError(
                f"group order {order} exceeds the bound {bound}"
            )
        for p in self.perms:
            if sorted(p) != list(range(k)):
                raise ValidationError(f"{p!r} is not a permutation of {k} states")
        if len(set(self.perms)) != order:
            raise ValidationError("duplicate permutations in group description")

        if names is None:
            names = [f"g{i}" for i in range(order)]
        self.names = tuple(names)
        if len(self.names) != order or len(set(self.names)) != order:
            raise ValidationError("element names must be distinct, one per element")

        self._index_of = {p: i for i, p in enumerate(self.perms)}
        identity_perm = tuple(range(k))
        if identity_perm not in self._index_of:
            raise ValidationError("group does not contain the identity permutation")
        self.identity_index = self._index_of[identity_perm]

        table = []
        for pg in self.perms:
            row = []
            for ph in self.perms:
                comp = tuple(pg[ph[s]] for s in range(k))
                idx = self._index_of.get(comp)
                if idx is None:
                    raise ValidationError(
                        "element list is not closed under composition"
                    )
                row.append(idx)
            table.append(tuple(row))
        self.table: tuple[tuple[int, ...], ...] = tuple(table)

        inverse_index = [-1] * order
        for i in range(order):
            for j in range(order):
                if self.table[i][j] == self.identity_index:
                    inverse_index[i] = j
                    break
            if inverse_index[i] < 0:
                raise ValidationError(f"element {self.names[i]} has no inverse")
        self.inverse_index = tuple(inverse_index)

        self.involutive = all(
            self.table[i][i] == self.identity_index for i in range(order)
        )

    # -- element access -------------------------------------------------

    @property
    def identity(self) -> GroupElement:
        return GroupElement(self, self.identity_index)

    def element(self, key) -> GroupElement:
        if isinstance(key, GroupElement):
            if key.group is not self:
                raise GroupMismatchError("element belongs to a different group")
            return key
        if isinstance(key, str):
            try:
                return GroupElement(self, self.names.index(key))
            except ValueError:
                raise ValidationError(f"unknown element name {key!r}") from None
        if isinstance(key, int):
            if not (0 <= key < len(self.perms)):
                raise ValidationError(f"element index {key} out of range")
            return GroupElement(self, key)
        raise ValidationError(f"cannot interpret {key!r} as a group element")

    def element_by_perm(self, perm: Sequence[int]) -> GroupElement:
        idx = self._index_of.get(tuple(perm))
        if idx is None:
            raise ValidationError(f"permutation {tuple(perm)} is not in the group")
        return GroupElement(self, idx)

    def __len__(self) -> int:
        return len(self.perms)

    def __iter__(self):
        return (GroupElement(self, i) for i in range(len(self.perms)))

    # -- operations ------------------------------------------------------

    def _check(self, g: GroupElement) -> None:
        if g.group is not self:
            raise GroupMismatchError("elements belong to different groups")

    def compose(self, g: GroupElement, h: GroupElement) -> GroupElement:
        """Product g*h, the permutation applying h first and then g."""
        self._check(g)
        self._check(h)
        return GroupElement(self, self.table[g.index][h.index])

    def inverse(self, g: GroupElement) -> GroupElement:
        self._check(g)
        return GroupElement(self, self.inverse_index[g.index])

    def orbit_count(self, g: GroupElement) -> int:
        """Number of cycles of g on the state set, fixed points included."""
        self._check(g)
        perm = g.perm
        seen = [False] * len(perm)
        count = 0
        for start in range(len(perm)):
            if seen[start]:
                continue
            count += 1
            s = start
            while not seen[s]:
                seen[s] = True
                s = perm[s]
        return count


def orbit_count(g: GroupElement) -> int:
    return g.group.orbit_count(g)


def pair_orbit_count(v: GroupElement, w: GroupElement) -> int:
    """Cycles of the two-step shift (x, y) -> (v(y), w(x)) on state pairs."""
    if v.group is not w.group:
        raise GroupMismatchError("elements belong to different groups")
    k = len(v.group.states)
    pv, pw = v.perm, w.perm
    seen = set()
    count = 0
    for start in itertools.product(range(k), repeat=2):
        if start in seen:
            continue
        count += 1
        x, y = start
        while (x, y) not in seen:
            seen.add((x, y))
            x, y = pv[y], pw[x]
    return count


def solve_characteristic(group: ReactionGroup, a: GroupElement) -> list[GroupElement]:
    """All v with v*v == a, sorted by descending orbit count.

    The sort order puts first the solution that splits the state set into
    the largest number of invariant pieces, which is the one a most
    nonergodic network realizes.  Ties break on element index so the result
    is deterministic.
    """
    group._check(a)
    hits = [v for v in group if (v * v) == a]
    hits.sort(key=lambda v: (-group.orbit_count(v), v.index))
    return hits


def solve_characteristic_pair(
    group: ReactionGroup, a_i: GroupElement, a_j: GroupElement
) -> list[tuple[GroupElement, GroupElement]]:
    """All pairs (v, w) with v*w == a_i and w*v == a_j, most orbits first."""
    group._check(a_i)
    group._check(a_j)
    hits = [
        (v, w)
        for v in group
        for w in group
        if (v * w) == a_i and (w * v) == a_j
    ]
    hits.sort(key=lambda vw: (-pair_orbit_count(*vw), vw[0].index, vw[1].index))
    return hits


# -- stock groups ---------------------------------------------------------


def sign_group() -> ReactionGroup:
    """The two-element group flipping the states +1 and -1."""
    return ReactionGroup(StateSet((1, -1)), [(0, 1), (1, 0)], names=("e", "g"))


def cyclic_group(n: int) -> ReactionGroup:
    if n < 1:
        raise ValidationError("cyclic group order must be positive")
    perms = [tuple((s + shift) % n for s in range(n)) for shift in range(n)]
    names = ["e"] + [f"r{shift}" for shift in range(1, n)]
    return ReactionGroup(StateSet(tuple(range(n))), perms, names=names)


def symmetric_group(n: int) -> ReactionGroup:
    if n < 1:
        raise ValidationError("symmetric group degree must be positive")
    perms = sorted(itertools.permutations(range(n)))
    names = []
    for p in perms:
        if p == tuple(range(n)):
            names.append("e")
        else:
            names.append("s" + "".join(str(i) for i in p))
    return ReactionGroup(StateSet(tuple(range(n))), perms, names=names)


# -- JSON interchange ------------------------------------------------------


def load_group(source) -> ReactionGroup:
    """Build a group from a JSON object, a JSON string or a file path.

    Expected shape::

        {"states": [...],
         "elements": [{"name": "e", "perm": [0, 1]}, ...],
         "identity": "e"}
    """
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"group file {source}: line {exc.lineno}: {exc.msg}"
            ) from exc
    elif isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"group JSON: line {exc.lineno}: {exc.msg}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ValidationError("group description must be a JSON object")
    for key in ("states", "elements", "identity"):
        if key not in data:
            raise ValidationError(f"group description is missing {key!r}")
    states = StateSet(tuple(data["states"]))
    perms = []
    names = []
    for i, entry in enumerate(data["elements"]):
        if not isinstance(entry, dict) or "name" not in entry or "perm" not in entry:
            raise ValidationError(f"element #{i} needs 'name' and 'perm'")
        perm = entry["perm"]
        if (
            not isinstance(perm, list)
            or len(perm) != len(states)
            or sorted(perm) != list(range(len(states)))
        ):
            raise ValidationError(
                f"element {entry.get('name', i)!r}: perm must be a bijection "
                f"on {len(states)} state indices"
            )
        perms.append(tuple(perm))
        names.append(str(entry["name"]))
    group = ReactionGroup(states, perms, names=names)
    declared = data["identity"]
    if declared not in names:
        raise ValidationError(f"identity {declared!r} is not an element name")
    if names.index(declared) != group.identity_index:
        raise ValidationError(
            f"declared identity {declared!r} is not the identity permutation"
        )
    return group


def group_to_json(group: ReactionGroup) -> dict:
    return {
        "states": list(group.states.labels),
        "elements": [
            {"name": group.names[i], "perm": list(group.perms[i])}
            for i in range(len(group))
        ],
        "identity": group.names[group.identity_index],
    }
