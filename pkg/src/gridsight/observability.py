"""Topological observability: measurement-assignment spanning trees.

An assignment maps measurements to lines (a flow only to its own line, an
injection only to an unmeasured line at its bus, never two measurements on
one line).  The system is observable iff some assignment covers a spanning
tree.  :func:`assignment_forest` finds a largest assignable forest exactly:
flows are placed first, injections are placed greedily in id order, and the
result is then grown to maximum with matroid-intersection augmenting paths
(graphic matroid of the flow-contracted network against the one-line-per-
injection partition matroid).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .model import Case, ValidationError, checked

InvalidCase = ValidationError


class _DSU:
    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # smaller root wins so component representatives are stable
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def groups(self) -> list[frozenset[int]]:
        out: dict[int, set[int]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return sorted((frozenset(g) for g in out.values()), key=min)


@dataclass(frozen=True)
class SpanningTreeCertificate:
    assignment: Mapping[int, int]  # measurement id -> line id
    branches: frozenset[int]
    assigned_measurements: tuple[int, ...]

    def line_of(self, mid: int) -> int:
        return self.assignment[mid]

    def measurement_on(self, line_id: int) -> Optional[int]:
        for mid, ln in self.assignment.items():
            if ln == line_id:
                return mid
        return None

    def __contains__(self, mid: int) -> bool:
        return mid in self.assignment


@dataclass(frozen=True)
class UnobservabilityWitness:
    components: tuple[frozenset[int], ...]

    def __bool__(self) -> bool:
        return False


def _injection_pairs(case: Case, meas, region: set[int], measured: set[int]):
    pairs = []
    for mid in meas:
        m = case.measurement(mid)
        if not m.is_injection or m.target not in region:
            continue
        for lid in case.incident.get(m.target, ()):
            ln = case.line(lid)
            if lid in measured or ln.from_bus not in region or ln.to_bus not in region:
                continue
            pairs.append((mid, lid))
    return sorted(pairs)


def _forest_path(edges: dict[tuple[int, int], tuple[int, int]], a: int, b: int):
    """Pairs on the unique forest path between contracted nodes a and b."""
    adj: dict[int, list[tuple[int, tuple]]] = {}
    for pair, (u, v) in edges.items():
        adj.setdefault(u, []).append((v, pair))
        adj.setdefault(v, []).append((u, pair))
    prev: dict[int, tuple[int, tuple]] = {a: (a, None)}
    queue = deque([a])
    while queue:
        u = queue.popleft()
        if u == b:
            break
        for v, pair in sorted(adj.get(u, ()), key=lambda t: t[1]):
            if v not in prev:
                prev[v] = (u, pair)
                queue.append(v)
    if b not in prev:
        return None
    path, node = [], b
    while node != a:
        node, pair = prev[node]
        path.append(pair)
    return path


def _augment(case: Case, pairs, node, chosen: list[tuple[int, int]]):
    """One shortest augmenting path in the exchange graph; None if maximum."""
    ends = {p: (node(case.line(p[1]).from_bus), node(case.line(p[1]).to_bus)) for p in pairs}
    current = set(chosen)
    used = {mid for mid, _ in chosen}
    forest = {p: ends[p] for p in chosen}
    dsu = _DSU({n for e in ends.values() for n in e})
    for u, v in forest.values():
        dsu.union(u, v)
    outside = [p for p in pairs if p not in current]
    sources = [p for p in outside if p[0] not in used]
    sinks = {p for p in outside if dsu.find(ends[p][0]) != dsu.find(ends[p][1])}

    prev: dict[tuple, Optional[tuple]] = {}
    queue: deque = deque()
    for p in sources:
        prev[p] = None
        queue.append(p)
    by_measurement: dict[int, list[tuple]] = {}
    for p in outside:
        by_measurement.setdefault(p[0], []).append(p)

    hit = None
    while queue:
        x = queue.popleft()
        if x in current:
            # swap a chosen pair for another line of the same injection
            for z in by_measurement.get(x[0], ()):
                if z not in prev:
                    prev[z] = x
                    queue.append(z)
            continue
        if x in sinks:
            hit = x
            break
        # x closes a cycle; any chosen pair on that cycle may leave
        cycle = _forest_path(forest, *ends[x]) or []
        for y in sorted(cycle):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if hit is None:
        return None
    path = []
    node_ = hit
    while node_ is not None:
        path.append(node_)
        node_ = prev[node_]
    return sorted(current.symmetric_difference(path))


def assignment_forest(case: Case, measurements: Optional[Iterable[int]] = None,
                      buses: Optional[Iterable[int]] = None,
                      premerged: Iterable[Iterable[int]] = ()) -> dict[int, int]:
    """Largest rule-respecting assignment forest, as ``{measurement: line}``.

    Only lines with both ends in ``buses`` (default: all) take part, and
    "measured" means measured by a flow among ``measurements``.  Each group
    in ``premerged`` is treated as already connected by other means.
    """
    region = set(case.bus_ids if buses is None else buses)
    meas = sorted(case.measurement_ids if measurements is None else set(measurements))
    measured = {case.measurement(m).target for m in meas if case.measurement(m).is_flow}

    base = _DSU(region)
    for group in premerged:
        group = sorted(set(group) & region)
        for b in group[1:]:
            base.union(group[0], b)

    assignment: dict[int, int] = {}
    for mid in meas:
        m = case.measurement(mid)
        if not m.is_flow:
            continue
        ln = case.line(m.target)
        if ln.from_bus in region and ln.to_bus in region and base.union(*ln.ends):
            assignment[mid] = ln.id

    node = {b: base.find(b) for b in region}
    pairs = [p for p in _injection_pairs(case, meas, region, measured)
             if node[case.line(p[1]).from_bus] != node[case.line(p[1]).to_bus]]

    # greedy pass in id order, lowest admissible line first
    greedy = _DSU(set(node.values()))
    chosen: list[tuple[int, int]] = []
    taken: set[int] = set()
    for mid, lid in pairs:
        if mid in taken:
            continue
        a, b = (node[x] for x in case.line(lid).ends)
        if greedy.union(a, b):
            chosen.append((mid, lid))
            taken.add(mid)

    while True:
        nxt = _augment(case, pairs, node.__getitem__, chosen)
        if nxt is None:
            break
        chosen = nxt

    for mid, lid in chosen:
        assignment[mid] = lid
    return dict(sorted(assignment.items()))


def forest_components(case: Case, assignment: Mapping[int, int],
                      buses: Optional[Iterable[int]] = None,
                      premerged: Iterable[Iterable[int]] = ()) -> list[frozenset[int]]:
    dsu = _DSU(set(case.bus_ids if buses is None else buses))
    for group in premerged:
        group = sorted(group)
        for b in group[1:]:
            dsu.union(group[0], b)
    for lid in assignment.values():
        dsu.union(*case.line(lid).ends)
    return dsu.groups()


def observable_rank(case: Case, measurements: Optional[Iterable[int]] = None) -> int:
    """Number of lines in a maximum assignment forest (the topological rank)."""
    return len(assignment_forest(case, measurements))


def build_assignment(case: Case):
    """Spanning-tree certificate of observability, or an unobservability witness."""
    checked(case)
    assignment = assignment_forest(case)
    if len(assignment) == case.n_buses - 1:
        return SpanningTreeCertificate(assignment, frozenset(assignment.values()),
                                       tuple(sorted(assignment)))
    return UnobservabilityWitness(tuple(forest_components(case, assignment)))


def boundary_injections(case: Case, cert: Optional[SpanningTreeCertificate] = None) -> frozenset[int]:
    """Injections at buses touching both a flow-measured and an unmeasured line."""
    measured = {m.target for m in case.measurements if m.is_flow}
    out = set()
    for m in case.measurements:
        if not m.is_injection:
            continue
        lines = case.incident.get(m.target, ())
        if any(l in measured for l in lines) and any(l not in measured for l in lines):
            out.add(m.id)
    return frozenset(out)


@dataclass(frozen=True)
class Reconnection:
    ok: bool
    assignment: Mapping[int, int]

    def __bool__(self) -> bool:
        return self.ok


def reconnectable(case: Case, region: Iterable[int], part_a: Iterable[int],
                  part_b: Iterable[int], usable: Iterable[int],
                  anchored: Optional[Iterable[int]] = None) -> Reconnection:
    """Can the ``usable`` measurements join ``part_a`` to ``part_b`` inside ``region``?

    Without ``anchored`` the two parts count as already spanned by fixed
    assignments, so a usable measurement must land on a line between them.
    With ``anchored`` (the measurements currently spanning the parts) those
    may be reassigned too, which finds chains where a usable measurement
    frees an anchored injection that then bridges the parts.
    """
    region = set(region)
    part_a, part_b = set(part_a), set(part_b)
    usable = set(usable)
    if not usable:
        return Reconnection(False, {})
    if anchored is None:
        meas, premerged = usable, (part_a, part_b)
    else:
        meas, premerged = usable | set(anchored), ()
    assignment = assignment_forest(case, meas, region, premerged)
    groups = forest_components(case, assignment, region, premerged)
    joined = any(g & part_a and g & part_b for g in groups)
    if anchored is not None:
        joined = len(groups) == 1
    return Reconnection(joined, assignment if joined else {})
