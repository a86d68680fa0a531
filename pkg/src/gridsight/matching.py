"""Bipartite maximum matching and distinct-representative search.

Both bipartite constructions of the analysis (assigned injections against
their backup injections, and critical sets against system measurements)
run through :func:`maximum_matching`.  Node labels are opaque; the order of
``left``/``right`` is the visiting order, which makes results reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple
    right: tuple
    edges: frozenset = field(default_factory=frozenset)  # {(left index, right index)}

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        object.__setattr__(self, "edges", frozenset(self.edges))
        for i, j in self.edges:
            if not (0 <= i < len(self.left) and 0 <= j < len(self.right)):
                raise ValueError(f"edge {(i, j)} out of range")

    @classmethod
    def from_sets(cls, sets: Mapping[Hashable, Iterable], right: Sequence | None = None):
        """Left node per key, edge to every member; labels sorted ascending."""
        left = sorted(sets)
        if right is None:
            right = sorted({x for members in sets.values() for x in members})
        index = {x: j for j, x in enumerate(right)}
        edges = {(i, index[x]) for i, key in enumerate(left) for x in sets[key] if x in index}
        return cls(tuple(left), tuple(right), frozenset(edges))

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.left]
        for i, j in sorted(self.edges):
            adj[i].append(j)
        return adj

    def without_right(self, labels: Iterable) -> "BipartiteGraph":
        """Same node lists, with every edge into the given right labels removed."""
        drop = {j for j, x in enumerate(self.right) if x in set(labels)}
        return BipartiteGraph(self.left, self.right,
                              frozenset(e for e in self.edges if e[1] not in drop))


@dataclass(frozen=True)
class Matching:
    pairs: Mapping[int, int]  # left index -> right index

    def __len__(self) -> int:
        return len(self.pairs)

    def labelled(self, g: BipartiteGraph) -> dict:
        return {g.left[i]: g.right[j] for i, j in sorted(self.pairs.items())}

    def is_valid_for(self, g: BipartiteGraph) -> bool:
        rights = list(self.pairs.values())
        return (len(set(rights)) == len(rights)
                and all((i, j) in g.edges for i, j in self.pairs.items()))


def maximum_matching(g: BipartiteGraph) -> Matching:
    """Maximum-cardinality matching by repeated augmenting-path search.

    Left nodes are processed in index order and each DFS tries right
    neighbours in index order, so equal graphs give equal matchings.
    """
    adj = g.adjacency()
    match_right: dict[int, int] = {}

    def augment(u: int, seen: set[int]) -> bool:
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_right or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(len(g.left)):
        augment(u, set())
    return Matching({u: v for v, u in sorted(match_right.items(), key=lambda kv: kv[1])})


def left_deficiency(g: BipartiteGraph, m: Matching) -> tuple[int, list]:
    unmatched = [g.left[i] for i in range(len(g.left)) if i not in m.pairs]
    return len(g.left) - len(m.pairs), unmatched


@dataclass(frozen=True)
class HallViolation:
    """Sub-family whose union has fewer members than the family has sets."""
    witness: tuple
    union: frozenset = frozenset()

    def __bool__(self) -> bool:
        return False


def _hall_witness(g: BipartiteGraph, m: Matching, root: int) -> list[int]:
    # left nodes reachable from an unmatched root along alternating paths
    adj = g.adjacency()
    match_right = {v: u for u, v in m.pairs.items()}
    reached, stack = {root}, [root]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            w = match_right.get(v)
            if w is not None and w not in reached:
                reached.add(w)
                stack.append(w)
    return sorted(reached)


def distinct_representatives(sets: Sequence[tuple[Hashable, Iterable]]):
    """One distinct member per labelled set, or a :class:`HallViolation`.

    ``sets`` is a list of ``(label, members)``.  On success the returned dict
    maps each label to a member of its own set, injectively.
    """
    family = {label: frozenset(members) for label, members in sets}
    g = BipartiteGraph.from_sets(family)
    m = maximum_matching(g)
    if len(m) == len(g.left):
        return m.labelled(g)
    root = min(i for i in range(len(g.left)) if i not in m.pairs)
    idx = _hall_witness(g, m, root)
    labels = tuple(g.left[i] for i in idx)
    union = frozenset().union(*(family[label] for label in labels))
    return HallViolation(labels, union)
