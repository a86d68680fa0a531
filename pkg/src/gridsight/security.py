"""Attack and defense analysis on the critical-sets / measurements graph.

Left nodes are critical sets (named by their owner), right nodes are
measurements, and a set is joined to each of its members.  When the system
is observable a maximum matching covers every set; removing measurements
that leave some set unmatched is what an observability attack does.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .critical_sets import CriticalSet
from .matching import (BipartiteGraph, HallViolation, Matching, distinct_representatives,
                       left_deficiency, maximum_matching)
from .model import GridSightError
from .observability import SpanningTreeCertificate, observable_rank


class UnknownMeasurement(GridSightError):
    pass


class NoCoveringSet(GridSightError):
    pass


@dataclass(frozen=True)
class CsmGraph:
    graph: BipartiteGraph
    baseline: Matching
    sets: Mapping[int, CriticalSet]

    @property
    def owners(self) -> tuple[int, ...]:
        return self.graph.left

    @property
    def measurements(self) -> tuple[int, ...]:
        return self.graph.right

    @property
    def saturated(self) -> bool:
        return len(self.baseline) == len(self.graph.left)


def _as_family(critical_sets) -> dict[int, CriticalSet]:
    if isinstance(critical_sets, Mapping):
        return dict(sorted(critical_sets.items()))
    return {cs.owner: cs for cs in sorted(critical_sets, key=lambda cs: cs.owner)}


def build_csm_graph(critical_sets, measurements: Optional[Iterable[int]] = None) -> CsmGraph:
    """Graph of the family; ``measurements`` defaults to the union of members."""
    family = _as_family(critical_sets)
    if not family:
        raise ValueError("empty critical-set family")
    right = sorted(set(measurements) if measurements is not None
                   else {x for cs in family.values() for x in cs.members})
    g = BipartiteGraph.from_sets({m: cs.members for m, cs in family.items()}, right)
    return CsmGraph(g, maximum_matching(g), family)


@dataclass(frozen=True)
class AttackVerdict:
    attacked: frozenset[int]
    deficiency: int
    unmatched: tuple[int, ...]
    stealthy: bool
    strictness_failures: tuple[int, ...] = ()


def _deficiency(g: CsmGraph, removed) -> tuple[int, BipartiteGraph, Matching]:
    sub = g.graph.without_right(removed)
    m = maximum_matching(sub)
    return left_deficiency(sub, m)[0], sub, m


def _exposed(sub: BipartiteGraph, m: Matching) -> tuple[int, ...]:
    # left nodes that some maximum matching leaves uncovered: alternating
    # reachability from the free left nodes
    adj = sub.adjacency()
    match_right = {v: u for u, v in m.pairs.items()}
    stack = [i for i in range(len(sub.left)) if i not in m.pairs]
    seen = set(stack)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            w = match_right.get(v)
            if w is not None and w not in seen:
                seen.add(w)
                stack.append(w)
    return tuple(sub.left[i] for i in sorted(seen))


def assess_removal(g: CsmGraph, removed: Iterable[int]) -> AttackVerdict:
    """Does removing ``removed`` strictly knock critical sets out of the matching?

    ``unmatched`` lists every critical set that some maximum matching of the
    reduced graph leaves uncovered.  The removal is stealthy when it leaves a
    deficiency and every attacked measurement is necessary: putting any one
    back lowers the deficiency by exactly one.
    """
    removed = frozenset(removed)
    unknown = removed - set(g.measurements)
    if unknown:
        raise UnknownMeasurement(f"not a measurement of the graph: {sorted(unknown)}")
    d, sub, m = _deficiency(g, removed)
    failures = []
    if d >= 1:
        for a in sorted(removed):
            if _deficiency(g, removed - {a})[0] != d - 1:
                failures.append(a)
    unmatched = _exposed(sub, m) if d else ()
    return AttackVerdict(removed, d, unmatched, d >= 1 and not failures, tuple(failures))


def sparsest_attack(critical_sets) -> tuple[frozenset[int], int]:
    """Smallest critical set; the lowest owner id wins ties."""
    family = _as_family(critical_sets)
    if not family:
        raise ValueError("empty critical-set family")
    best = min(family.values(), key=lambda cs: (len(cs), cs.owner))
    return best.members, len(best)


def sparsest_attack_including(critical_sets, k: int,
                              measurements: Optional[Iterable[int]] = None) -> tuple[frozenset[int], int]:
    """Smallest critical set containing ``k``; its size is the security index of ``k``."""
    family = _as_family(critical_sets)
    if measurements is not None and k not in set(measurements):
        raise UnknownMeasurement(f"unknown measurement {k}")
    covering = [cs for cs in family.values() if k in cs.members]
    if not covering:
        raise NoCoveringSet(f"measurement {k} is in no critical set")
    best = min(covering, key=lambda cs: (len(cs), cs.owner))
    return best.members, len(best)


def security_indices(critical_sets) -> dict[int, int]:
    family = _as_family(critical_sets)
    members = sorted({x for cs in family.values() for x in cs.members})
    return {k: sparsest_attack_including(family, k)[1] for k in members}


@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class Threshold:
    tau: int


@dataclass(frozen=True)
class DefensePlan:
    protected: frozenset[int]
    guarantee: Union[All, Threshold]
    representatives: Mapping[int, int] = None  # owner -> protected member


def full_defense(cert: SpanningTreeCertificate) -> DefensePlan:
    return DefensePlan(frozenset(cert.assigned_measurements), All(),
                       {m: m for m in cert.assigned_measurements})


def threshold_defense(critical_sets, tau: int):
    """Protect one distinct member of every critical set smaller than ``tau``.

    Any stealthy attack must then touch at least ``tau`` measurements.
    Returns a :class:`HallViolation` when no distinct choice exists.
    """
    if tau < 2:
        raise ValueError("tau must be at least 2")
    family = _as_family(critical_sets)
    small = [(m, cs.members) for m, cs in family.items() if len(cs) < tau]
    if not small:
        return DefensePlan(frozenset(), Threshold(tau), {})
    reps = distinct_representatives(small)
    if isinstance(reps, HallViolation):
        return reps
    return DefensePlan(frozenset(reps.values()), Threshold(tau), reps)


def structural_verdict(case, removed: Iterable[int]) -> AttackVerdict:
    """Stealth verdict from the topological rank instead of the matching.

    Uses the maximum assignment forest (a purely graph computation) as the
    rank function: the removal is stealthy when it lowers the rank and every
    attacked measurement raises it by exactly one when put back.  Unlike the
    matching test this also sees cuts that are not a single critical set.
    """
    removed = frozenset(removed)
    unknown = removed - set(case.measurement_ids)
    if unknown:
        raise UnknownMeasurement(f"not a measurement of the case: {sorted(unknown)}")
    rest = [m for m in case.measurement_ids if m not in removed]
    base = observable_rank(case, rest)
    d = case.n_buses - 1 - base
    failures = tuple(a for a in sorted(removed)
                     if observable_rank(case, rest + [a]) != base + 1) if d else ()
    return AttackVerdict(removed, d, (), d >= 1 and not failures, failures)
