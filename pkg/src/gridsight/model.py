"""Network, measurement and case data model.

A :class:`Case` is the single input artifact of every analysis: a connected
bus/line graph, a real-power measurement placement and a reference bus.
Cases are immutable once built and are always validated on the way in.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Iterable, Optional

FLOW = "flow"
INJECTION = "injection"

CASE_FORMATS = ("json", "matpower")


class GridSightError(Exception):
    """Base class for all library errors."""


class CaseSyntaxError(GridSightError):
    """The input stream is not well-formed JSON / MATPOWER text."""


class SchemaError(GridSightError):
    """A required field is missing or has the wrong type."""


class ValidationError(GridSightError):
    """The case violates one of the model invariants."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(issue.message for issue in report.issues))


@dataclass(frozen=True)
class Bus:
    id: int
    name: Optional[str] = None


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    susceptance: Optional[Fraction] = None

    @property
    def ends(self) -> tuple[int, int]:
        return (self.from_bus, self.to_bus)

    def other(self, bus: int) -> int:
        return self.to_bus if bus == self.from_bus else self.from_bus


@dataclass(frozen=True)
class Measurement:
    id: int
    kind: str  # FLOW or INJECTION
    target: int  # line id for flows, bus id for injections

    @property
    def is_flow(self) -> bool:
        return self.kind == FLOW

    @property
    def is_injection(self) -> bool:
        return self.kind == INJECTION

    @property
    def label(self) -> str:
        return ("F" if self.is_flow else "I") + str(self.target)


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    ids: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    def __bool__(self) -> bool:
        # truthy when something is wrong
        return bool(self.issues)

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [issue.code for issue in self.issues]


@dataclass(frozen=True)
class Case:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    measurements: tuple[Measurement, ...]
    reference_bus: int = 1
    name: Optional[str] = field(default=None, compare=False)

    # ---- lookups -------------------------------------------------------
    @cached_property
    def bus_ids(self) -> tuple[int, ...]:
        return tuple(sorted(b.id for b in self.buses))

    @cached_property
    def _lines(self) -> dict[int, Line]:
        return {ln.id: ln for ln in self.lines}

    @cached_property
    def _measurements(self) -> dict[int, Measurement]:
        return {m.id: m for m in self.measurements}

    @cached_property
    def _by_label(self) -> dict[str, int]:
        return {m.label: m.id for m in self.measurements}

    @cached_property
    def incident(self) -> dict[int, tuple[int, ...]]:
        """bus id -> sorted ids of the lines touching it"""
        out: dict[int, list[int]] = {b: [] for b in self.bus_ids}
        for ln in sorted(self.lines, key=lambda x: x.id):
            out.setdefault(ln.from_bus, []).append(ln.id)
            out.setdefault(ln.to_bus, []).append(ln.id)
        return {b: tuple(v) for b, v in out.items()}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def measurement_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._measurements))

    @property
    def line_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._lines))

    def line(self, line_id: int) -> Line:
        return self._lines[line_id]

    def measurement(self, mid: int) -> Measurement:
        return self._measurements[mid]

    def has_measurement(self, mid: int) -> bool:
        return mid in self._measurements

    def label(self, mid: int) -> str:
        return self._measurements[mid].label

    def labels(self, mids: Iterable[int]) -> list[str]:
        return [self.label(m) for m in sorted(mids)]

    def resolve(self, token) -> int:
        """Measurement id from an int, a numeric string or a label like ``I4``."""
        if isinstance(token, int):
            if token in self._measurements:
                return token
            raise KeyError(f"unknown measurement id {token}")
        text = str(token).strip()
        if text in self._by_label:
            return self._by_label[text]
        if text.isdigit() and int(text) in self._measurements:
            return int(text)
        raise KeyError(f"unknown measurement {text!r}")

    def measurement_bus_set(self, mid: int) -> frozenset[int]:
        """Buses a measurement touches (line ends for flows, the bus for injections)."""
        m = self._measurements[mid]
        if m.is_flow:
            return frozenset(self._lines[m.target].ends)
        return frozenset((m.target,))

    def flow_on(self, line_id: int) -> Optional[int]:
        for m in self.measurements:
            if m.is_flow and m.target == line_id:
                return m.id
        return None

    def injection_at(self, bus: int) -> Optional[int]:
        for m in self.measurements:
            if m.is_injection and m.target == bus:
                return m.id
        return None

    def without_measurements(self, mids: Iterable[int]) -> "Case":
        drop = set(mids)
        return Case(self.buses, self.lines,
                    tuple(m for m in self.measurements if m.id not in drop),
                    self.reference_bus, self.name)

    def digest(self) -> str:
        return hashlib.sha256(dumps_case(self).encode()).hexdigest()


# ---- validation --------------------------------------------------------

def _connected(bus_ids, lines) -> list[set[int]]:
    parent = {b: b for b in bus_ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ln in lines:
        if ln.from_bus in parent and ln.to_bus in parent:
            parent[find(ln.from_bus)] = find(ln.to_bus)
    groups: dict[int, set[int]] = {}
    for b in bus_ids:
        groups.setdefault(find(b), set()).add(b)
    return sorted(groups.values(), key=min)


def validate_case(case: Case) -> ValidationReport:
    """Check every model invariant and list each violation with offending ids."""
    issues: list[Issue] = []
    ids = [b.id for b in case.buses]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        issues.append(Issue("duplicate bus id", f"duplicate bus id {dup}", tuple(dup)))
    if sorted(set(ids)) != list(range(1, len(set(ids)) + 1)):
        issues.append(Issue("bus ids not contiguous",
                            "bus ids not contiguous from 1..N", tuple(sorted(set(ids)))))
    bus_set = set(ids)

    line_ids = [ln.id for ln in case.lines]
    if len(set(line_ids)) != len(line_ids):
        dup = sorted({i for i in line_ids if line_ids.count(i) > 1})
        issues.append(Issue("duplicate line id", f"duplicate line id {dup}", tuple(dup)))
    seen_pairs: dict[frozenset, int] = {}
    for ln in case.lines:
        if ln.from_bus not in bus_set or ln.to_bus not in bus_set:
            issues.append(Issue("dangling reference",
                                f"line {ln.id} references unknown bus", (ln.id,)))
        if ln.from_bus == ln.to_bus:
            issues.append(Issue("self-loop", f"line {ln.id} is a self-loop", (ln.id,)))
            continue
        pair = frozenset(ln.ends)
        if pair in seen_pairs:
            issues.append(Issue("parallel lines",
                                f"lines {seen_pairs[pair]} and {ln.id} are parallel",
                                (seen_pairs[pair], ln.id)))
        else:
            seen_pairs[pair] = ln.id
        if ln.susceptance is not None and ln.susceptance == 0:
            issues.append(Issue("zero susceptance",
                                f"line {ln.id} has zero susceptance", (ln.id,)))

    mids = [m.id for m in case.measurements]
    if len(set(mids)) != len(mids):
        dup = sorted({i for i in mids if mids.count(i) > 1})
        issues.append(Issue("duplicate measurement id",
                            f"duplicate measurement id {dup}", tuple(dup)))
    known_lines = set(line_ids)
    flows: dict[int, int] = {}
    injections: dict[int, int] = {}
    for m in case.measurements:
        if m.kind not in (FLOW, INJECTION):
            issues.append(Issue("unknown kind",
                                f"measurement {m.id} has unknown kind {m.kind!r}", (m.id,)))
            continue
        if m.is_flow:
            if m.target not in known_lines:
                issues.append(Issue("dangling reference",
                                    f"measurement {m.id} references line {m.target} "
                                    f"which does not exist", (m.id, m.target)))
            elif m.target in flows:
                issues.append(Issue("duplicate flow measurement",
                                    f"duplicate flow measurement on line {m.target}",
                                    (flows[m.target], m.id)))
            else:
                flows[m.target] = m.id
        else:
            if m.target not in bus_set:
                issues.append(Issue("dangling reference",
                                    f"measurement {m.id} references bus {m.target} "
                                    f"which does not exist", (m.id, m.target)))
            elif m.target in injections:
                issues.append(Issue("duplicate injection measurement",
                                    f"duplicate injection measurement on bus {m.target}",
                                    (injections[m.target], m.id)))
            else:
                injections[m.target] = m.id

    if case.reference_bus not in bus_set:
        issues.append(Issue("unknown reference bus",
                            f"reference bus {case.reference_bus} does not exist",
                            (case.reference_bus,)))
    if bus_set and len(_connected(sorted(bus_set), case.lines)) > 1:
        issues.append(Issue("graph not connected", "graph not connected"))
    return ValidationReport(tuple(issues))


def checked(case: Case) -> Case:
    report = validate_case(case)
    if report:
        raise ValidationError(report)
    return case


# ---- JSON --------------------------------------------------------------

def _fraction(text, where) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"{where}: bad susceptance {text!r}") from exc


def _int(obj, key, where) -> int:
    if key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise SchemaError(f"{where}: field {key!r} must be a positive integer")
    return value


def case_from_dict(data: dict, name: Optional[str] = None) -> Case:
    if not isinstance(data, dict):
        raise SchemaError("case must be a JSON object")
    for key in ("buses", "lines", "measurements"):
        if key not in data:
            raise SchemaError(f"missing field {key!r}")
        if not isinstance(data[key], list):
            raise SchemaError(f"field {key!r} must be a list")
    buses = []
    for i, b in enumerate(data["buses"]):
        if not isinstance(b, dict):
            raise SchemaError(f"buses[{i}] must be an object")
        buses.append(Bus(_int(b, "id", f"buses[{i}]"), b.get("name")))
    lines = []
    for i, ln in enumerate(data["lines"]):
        if not isinstance(ln, dict):
            raise SchemaError(f"lines[{i}] must be an object")
        where = f"lines[{i}]"
        sus = ln.get("susceptance")
        lines.append(Line(_int(ln, "id", where), _int(ln, "from", where), _int(ln, "to", where),
                          None if sus is None else _fraction(sus, where)))
    meas = []
    for i, m in enumerate(data["measurements"]):
        if not isinstance(m, dict):
            raise SchemaError(f"measurements[{i}] must be an object")
        where = f"measurements[{i}]"
        kind = m.get("kind")
        if kind not in (FLOW, INJECTION):
            raise SchemaError(f"{where}: kind must be 'flow' or 'injection'")
        meas.append(Measurement(_int(m, "id", where), kind, _int(m, "target", where)))
    ref = data.get("reference_bus", 1)
    if isinstance(ref, bool) or not isinstance(ref, int):
        raise SchemaError("reference_bus must be an integer")
    return checked(Case(tuple(buses), tuple(lines), tuple(meas), ref, name))


def case_to_dict(case: Case) -> dict:
    buses = []
    for b in sorted(case.buses, key=lambda x: x.id):
        entry = {"id": b.id}
        if b.name is not None:
            entry["name"] = b.name
        buses.append(entry)
    lines = []
    for ln in sorted(case.lines, key=lambda x: x.id):
        entry = {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus}
        if ln.susceptance is not None:
            s = ln.susceptance
            entry["susceptance"] = f"{s.numerator}/{s.denominator}"
        lines.append(entry)
    meas = [{"id": m.id, "kind": m.kind, "target": m.target}
            for m in sorted(case.measurements, key=lambda x: x.id)]
    return {"buses": buses, "lines": lines, "measurements": meas,
            "reference_bus": case.reference_bus}


def dumps_case(case: Case) -> str:
    """Canonical serialization (sorted ids, compact separators)."""
    return json.dumps(case_to_dict(case), sort_keys=True, separators=(",", ":"))


# ---- MATPOWER ----------------------------------------------------------

_SECTION = re.compile(r"mpc\.(bus|branch)\s*=\s*\[(.*?)\]\s*;", re.S)


def _matpower_rows(body: str) -> list[list[str]]:
    rows = []
    for raw in body.split(";"):
        raw = raw.split("%")[0].strip()
        if raw:
            rows.append(raw.split())
    return rows


def case_from_matpower(text: str, name: Optional[str] = None) -> Case:
    """Bus ids and (from, to, x) of a MATPOWER case; susceptance = 1/x.

    MATPOWER files carry no measurement placement, so the case comes back
    with an empty measurement list.
    """
    sections = {}
    # drop line comments first so commented-out rows do not leak in
    cleaned = "\n".join(ln.split("%")[0] for ln in text.splitlines())
    for key, body in _SECTION.findall(cleaned):
        sections[key] = _matpower_rows(body)
    if "bus" not in sections or "branch" not in sections:
        raise CaseSyntaxError("MATPOWER text needs both mpc.bus and mpc.branch sections")
    try:
        bus_ids = [int(float(r[0])) for r in sections["bus"]]
        branches = [(int(float(r[0])), int(float(r[1])), Fraction(r[3]))
                    for r in sections["branch"]]
    except (IndexError, ValueError) as exc:
        raise CaseSyntaxError(f"malformed MATPOWER row: {exc}") from exc
    lines = []
    for i, (f, t, x) in enumerate(branches, start=1):
        if x == 0:
            raise SchemaError(f"branch {i} has zero reactance")
        lines.append(Line(i, f, t, 1 / x))
    buses = tuple(Bus(b) for b in bus_ids)
    return checked(Case(buses, tuple(lines), (), min(bus_ids) if bus_ids else 1, name))


def parse_case(stream, format: str = "json", name: Optional[str] = None) -> Case:
    """Parse and validate a case from bytes, text or a binary/text file object."""
    if hasattr(stream, "read"):
        stream = stream.read()
    if isinstance(stream, bytes):
        try:
            stream = stream.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CaseSyntaxError(str(exc)) from exc
    if format == "json":
        try:
            data = json.loads(stream)
        except json.JSONDecodeError as exc:
            raise CaseSyntaxError(str(exc)) from exc
        return case_from_dict(data, name)
    if format == "matpower":
        return case_from_matpower(stream, name)
    raise ValueError(f"unknown case format {format!r}; expected one of {CASE_FORMATS}")


def load_case(path, format: Optional[str] = None) -> Case:
    path = str(path)
    if format is None:
        format = "matpower" if path.endswith(".m") else "json"
    with open(path, "rb") as fh:
        return parse_case(fh, format, name=path)


BUNDLED = ("ieee14_paper.json",)


def bundled_case(name: str = "ieee14_paper.json") -> Case:
    """Load one of the case files shipped inside the package."""
    data = resources.files("gridsight.data").joinpath(name).read_bytes()
    return parse_case(data, "json", name=name)


def ieee14() -> Case:
    return bundled_case("ieee14_paper.json")
