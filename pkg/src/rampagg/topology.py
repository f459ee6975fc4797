"""Grouping of users and the aggregation tree above the groups.

Users 0..N-1 are packed into consecutive groups of size K+T+D: user n sits
in group n // group_size at slot n % group_size.  Groups form a tree whose
root is the server; the server has exactly one child, the last group, so a
single group's messages ever touch the server.  Messages between adjacent
groups travel slot-to-slot: slot t of a group talks only to slot t of its
parent.
"""

from dataclasses import dataclass
from typing import Mapping, Union

from .errors import (
    BadK,
    BadRoot,
    IndivisibleGroups,
    InvalidParams,
    NotATree,
    ThresholdViolation,
    UnknownGroup,
)

#: Receiver sentinel for the tree root.
SERVER = "server"

TreeShape = Union[str, Mapping[int, Union[int, str]]]


@dataclass(frozen=True)
class ProtocolParams:
    """Validated sizing of one aggregation run.

    ``t_max`` is the collusion tolerance (how many users may pool their
    views), ``d_max`` the dropout budget the design must survive, and
    ``k_parts`` how many segments each model is cut into.  Group size is
    k_parts + t_max + d_max and must divide ``n_users``.
    """

    n_users: int
    t_max: int
    d_max: int
    k_parts: int
    model_len: int
    entry_bound: int

    @property
    def group_size(self) -> int:
        return self.k_parts + self.t_max + self.d_max

    @property
    def num_groups(self) -> int:
        return self.n_users // self.group_size

    @property
    def seg_len(self) -> int:
        return -(-self.model_len // self.k_parts)


def make_params(
    n_users: int,
    t_max: int,
    d_max: int,
    k_parts: int,
    model_len: int,
    entry_bound: int,
) -> ProtocolParams:
    """Validate and freeze protocol parameters.

    Raises ThresholdViolation when t_max >= n_users - d_max (no room for a
    single honest survivor's worth of sharing), BadK when k_parts falls
    outside [1, n_users - t_max - d_max], and IndivisibleGroups when the
    implied group size does not divide n_users.
    """
    if n_users < 1:
        raise InvalidParams(f"n_users must be >= 1, got {n_users}")
    if t_max < 0 or d_max < 0:
        raise InvalidParams(f"t_max and d_max must be >= 0, got {t_max}, {d_max}")
    if model_len < 1:
        raise InvalidParams(f"model_len must be >= 1, got {model_len}")
    if entry_bound < 2:
        raise InvalidParams(f"entry_bound must be >= 2, got {entry_bound}")
    if t_max >= n_users - d_max:
        raise ThresholdViolation(
            f"t_max={t_max} must be < n_users - d_max = {n_users - d_max}"
        )
    k_cap = n_users - t_max - d_max
    if not 1 <= k_parts <= k_cap:
        raise BadK(f"k_parts={k_parts} outside [1, {k_cap}]")
    group_size = k_parts + t_max + d_max
    if n_users % group_size != 0:
        raise IndivisibleGroups(
            f"group size {group_size} does not divide n_users={n_users}"
        )
    return ProtocolParams(
        n_users=n_users,
        t_max=t_max,
        d_max=d_max,
        k_parts=k_parts,
        model_len=model_len,
        entry_bound=entry_bound,
    )


@dataclass(frozen=True)
class UserId:
    """Global index plus its derived (group, slot) coordinates."""

    index: int
    group: int
    slot: int

    @classmethod
    def from_index(cls, index: int, group_size: int) -> "UserId":
        return cls(index=index, group=index // group_size, slot=index % group_size)


def index_of(group: int, slot: int, group_size: int) -> int:
    """Global user index of (group, slot)."""
    return group * group_size + slot


def assign_groups(params: ProtocolParams) -> list[list[int]]:
    """Group g holds users [g*size, (g+1)*size)."""
    size = params.group_size
    return [
        list(range(g * size, (g + 1) * size)) for g in range(params.num_groups)
    ]


class AggregationTree:
    """Tree over group indices 0..num_groups-1 rooted at the server.

    Construct via :func:`build_tree`, or directly from a full parent map
    {group: parent-group-or-SERVER}.  Validation enforces: every group
    appears once, exactly the last group hangs under the server, and every
    group reaches the server (no cycles, no orphans).
    """

    def __init__(self, parent: Mapping[int, Union[int, str]]):
        groups = sorted(parent)
        num = len(groups)
        if num == 0 or groups != list(range(num)):
            raise NotATree(f"parent map must cover groups 0..{num - 1} exactly")
        server_children = [g for g, par in parent.items() if par == SERVER]
        if server_children != [num - 1]:
            raise BadRoot(
                f"the server must have exactly one child, group {num - 1}; "
                f"got {sorted(server_children)}"
            )
        children: dict[int, list[int]] = {g: [] for g in groups}
        for g in groups:
            par = parent[g]
            if par == SERVER:
                continue
            if not isinstance(par, int) or par not in children:
                raise NotATree(f"group {g} has unknown parent {par!r}")
            if par == g:
                raise NotATree(f"group {g} is its own parent")
            children[par].append(g)
        # every group must reach the server; a walk longer than num groups
        # means a cycle
        for g in groups:
            seen = 0
            node: Union[int, str] = g
            while node != SERVER:
                node = parent[node]  # type: ignore[index]
                seen += 1
                if seen > num:
                    raise NotATree(f"cycle detected starting from group {g}")
        self._parent = dict(parent)
        self._children = {g: tuple(sorted(c)) for g, c in children.items()}
        self.num_groups = num

    # -- queries ----------------------------------------------------------

    def _check(self, group: int) -> None:
        if group not in self._parent:
            raise UnknownGroup(f"group {group} not in tree of {self.num_groups}")

    @property
    def last_group(self) -> int:
        return self.num_groups - 1

    def parent_of(self, group: int) -> Union[int, str]:
        self._check(group)
        return self._parent[group]

    def children_of(self, group: int) -> tuple[int, ...]:
        self._check(group)
        return self._children[group]

    def descendants(self, group: int) -> set[int]:
        """All groups strictly below ``group``."""
        self._check(group)
        out: set[int] = set()
        stack = list(self._children[group])
        while stack:
            g = stack.pop()
            out.add(g)
            stack.extend(self._children[g])
        return out

    def ancestors(self, group: int) -> set[int]:
        """All groups strictly above ``group``; the server is excluded."""
        self._check(group)
        out: set[int] = set()
        node = self._parent[group]
        while node != SERVER:
            out.add(node)  # type: ignore[arg-type]
            node = self._parent[node]  # type: ignore[index]
        return out

    def inter_hops(self, group: int) -> int:
        """Group-to-group edges between ``group`` and the server's child."""
        return len(self.ancestors(group))

    def upward_order(self) -> list[int]:
        """Groups ordered leaves-first, so every child is processed before
        its parent; deterministic."""
        return sorted(range(self.num_groups), key=lambda g: (-self.inter_hops(g), g))


def build_tree(num_groups: int, shape: TreeShape = "chain") -> AggregationTree:
    """Build the aggregation tree for ``num_groups`` groups.

    ``shape`` is "chain" (0 -> 1 -> ... -> last -> server), "star" (every
    other group a direct child of the last group), or an explicit parent
    map which is validated as-is.
    """
    if num_groups < 1:
        raise NotATree(f"num_groups must be >= 1, got {num_groups}")
    if isinstance(shape, str):
        if shape == "chain":
            parent: dict[int, Union[int, str]] = {
                g: g + 1 for g in range(num_groups - 1)
            }
        elif shape == "star":
            parent = {g: num_groups - 1 for g in range(num_groups - 1)}
        else:
            raise ValueError(f"unknown tree shape {shape!r}")
        parent[num_groups - 1] = SERVER
        return AggregationTree(parent)
    return AggregationTree(shape)


def count_edges(params: ProtocolParams) -> int:
    """Closed form for the number of distinct links that can ever carry a
    message: N * (K + T + D + 1) / 2.

    Per group, all size*(size-1)/2 internal pairs; one slot-to-slot link
    per user for each tree edge between groups; and one link per last-group
    user to the server.  The total is shape-independent.
    """
    return params.n_users * (params.group_size + 1) // 2


def potential_links(params: ProtocolParams, tree: AggregationTree) -> set[frozenset]:
    """Enumerate the distinct links of :func:`count_edges` explicitly.

    Each link is a frozenset of two endpoints (user index or SERVER).
    """
    size = params.group_size
    links: set[frozenset] = set()
    for g in range(params.num_groups):
        members = range(g * size, (g + 1) * size)
        for a in members:
            for b in members:
                if a < b:
                    links.add(frozenset((a, b)))
        par = tree.parent_of(g)
        for slot in range(size):
            sender = index_of(g, slot, size)
            if par == SERVER:
                links.add(frozenset((sender, SERVER)))
            else:
                links.add(frozenset((sender, index_of(par, slot, size))))
    return links


@dataclass(frozen=True)
class DelayModel:
    """Per-hop latencies: ``inter`` for any group-to-group or group-to-server
    hop, ``intra`` for the in-group exchange round."""

    inter: float
    intra: float

    def __post_init__(self) -> None:
        if self.inter < 0 or self.intra < 0:
            raise ValueError("delays must be >= 0")


def total_delay(tree: AggregationTree, delays: DelayModel):
    """End-to-end latency: one intra round, then the longest upward path.

    The deepest group sits inter_hops group-to-group edges below the
    server's child, plus the final hop into the server, so the total is
    (max inter_hops + 1) * inter + intra.  For a chain of G groups that is
    G*inter + intra; for a star (G >= 2) it is 2*inter + intra.
    """
    deepest = max(tree.inter_hops(g) for g in range(tree.num_groups))
    return (deepest + 1) * delays.inter + delays.intra
