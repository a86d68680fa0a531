"""Critical measurement sets from a spanning-tree certificate.

Removing the line assigned to a measurement ``m`` splits the measurement tree
into two sides.  Every measurement that could bridge the sides again is a
candidate: flows on the cut lines and injections at buses on the cut.  Flows
and unassigned injections join the critical set at once.  An assigned
injection joins only if some spare measurement inside its own side can take
over its tree duty, freeing it to bridge the cut; a maximum matching decides
which of them can be freed simultaneously.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .matching import BipartiteGraph, maximum_matching
from .model import Case, GridSightError
from .observability import SpanningTreeCertificate, _DSU, reconnectable

SELF = "self"
CUT_FLOW = "cut-flow"
UNASSIGNED_INJECTION = "unassigned-injection"
MATCHED_INJECTION = "matched-assigned-injection"


class NotAssigned(GridSightError):
    pass


class NotApplicable(GridSightError):
    pass


@dataclass(frozen=True)
class TreeSplit:
    measurement: int
    line: int
    n1: frozenset[int]
    n2: frozenset[int]
    b1: frozenset[int]
    b2: frozenset[int]
    n12: frozenset[int]   # buses of n1 on a cut line
    n21: frozenset[int]
    cut_lines: tuple[int, ...]
    candidates: frozenset[int]
    candidate_flows: frozenset[int]

    def side_of(self, bus: int) -> int:
        return 1 if bus in self.n1 else 2


def split_tree(case: Case, cert: SpanningTreeCertificate, m: int) -> TreeSplit:
    if m not in cert:
        raise NotAssigned(f"measurement {case.label(m) if case.has_measurement(m) else m} "
                          "is not in the spanning tree")
    line = cert.line_of(m)
    rest = cert.branches - {line}
    dsu = _DSU(case.bus_ids)
    for lid in rest:
        dsu.union(*case.line(lid).ends)
    anchor = min(case.line(line).ends)
    n1 = frozenset(b for b in case.bus_ids if dsu.find(b) == dsu.find(anchor))
    n2 = frozenset(case.bus_ids) - n1
    b1 = frozenset(l for l in rest if case.line(l).from_bus in n1)
    b2 = frozenset(rest - b1)
    cut = tuple(l for l in case.line_ids
                if (case.line(l).from_bus in n1) != (case.line(l).to_bus in n1))
    n12 = frozenset(b for l in cut for b in case.line(l).ends if b in n1)
    n21 = frozenset(b for l in cut for b in case.line(l).ends if b in n2)
    flows = {case.flow_on(l) for l in cut} - {None, m}
    injections = {case.injection_at(b) for b in n12 | n21} - {None, m}
    return TreeSplit(m, line, n1, n2, b1, b2, n12, n21, cut,
                     frozenset(flows | injections), frozenset(flows))


def backup_boundary_injections(case: Case, cert: SpanningTreeCertificate,
                               split: TreeSplit, m_prime: int) -> frozenset[int]:
    """Spare measurements that can take over the tree duty of ``m_prime``.

    A backup is an unassigned injection inside the same side as ``m_prime``
    that is not itself a candidate.  It qualifies when the side stays spanned by
    the backup plus the other tree measurements of that side, reassigned if
    needed, so that ``m_prime`` becomes free to cover a cut line.
    """
    mp = case.measurement(m_prime)
    if mp.is_flow or m_prime not in cert or m_prime not in split.candidates:
        raise NotApplicable(f"{mp.label} is not an assigned injection candidate")
    side, side_lines = ((split.n1, split.b1) if mp.target in split.n1
                        else (split.n2, split.b2))
    own = cert.line_of(m_prime)
    dsu = _DSU(side)
    for lid in side_lines - {own}:
        dsu.union(*case.line(lid).ends)
    groups = dsu.groups()
    if len(groups) != 2:
        return frozenset()
    part_a, part_b = groups
    anchored = {k for k, l in cert.assignment.items() if l in side_lines and k != m_prime}
    pool = [k for k in case.measurement_ids
            if case.measurement(k).is_injection and k not in cert
            and k not in split.candidates and k != split.measurement
            and case.measurement_bus_set(k) <= side]
    return frozenset(k for k in pool
                     if reconnectable(case, side, part_a, part_b, {k}, anchored))


@dataclass(frozen=True)
class Provenance:
    kind: str
    backups: tuple[int, ...] = ()
    matched_backup: Optional[int] = None


@dataclass(frozen=True)
class CriticalSet:
    owner: int
    members: frozenset[int]
    provenance: Mapping[int, Provenance] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, mid: int) -> bool:
        return mid in self.members

    def sorted_members(self) -> list[int]:
        return [self.owner] + sorted(self.members - {self.owner})


def critical_set(case: Case, cert: SpanningTreeCertificate, m: int) -> CriticalSet:
    split = split_tree(case, cert, m)
    prov: dict[int, Provenance] = {m: Provenance(SELF)}
    backups: dict[int, frozenset[int]] = {}
    for k in sorted(split.candidates):
        if k in split.candidate_flows:
            prov[k] = Provenance(CUT_FLOW)
        elif k not in cert:
            prov[k] = Provenance(UNASSIGNED_INJECTION)
        else:
            found = backup_boundary_injections(case, cert, split, k)
            if found:
                backups[k] = found
    if backups:
        g = BipartiteGraph.from_sets(backups)
        for k, b in maximum_matching(g).labelled(g).items():
            prov[k] = Provenance(MATCHED_INJECTION, tuple(sorted(backups[k])), b)
    return CriticalSet(m, frozenset(prov), dict(sorted(prov.items())))


def all_critical_sets(case: Case, cert: SpanningTreeCertificate) -> dict[int, CriticalSet]:
    return {m: critical_set(case, cert, m) for m in cert.assigned_measurements}


def is_critical_measurement(case: Case, cert: SpanningTreeCertificate, m: int) -> bool:
    """A measurement whose critical set is just itself."""
    return len(critical_set(case, cert, m)) == 1
