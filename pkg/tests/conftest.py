from fractions import Fraction

import pytest

from gridsight.critical_sets import all_critical_sets
from gridsight.model import Bus, Case, Line, Measurement, ieee14
from gridsight.observability import build_assignment
from gridsight.oracle import build_jacobian

# reference critical sets of the bundled case, owner -> members
REFERENCE_SETS = {
    "F2": {"F2", "I4", "I11", "I13"},
    "F8": {"F8", "I4", "I7", "I9"},
    "F9": {"F9", "I4", "I7", "I11", "I13"},
    "F15": {"F15", "I7"},
    "I1": {"I1", "I4", "I11", "I13"},
    "I2": {"I2", "I4", "I11", "I13"},
    "I3": {"I3", "I2", "I4"},
    "I5": {"I5", "I11", "I13"},
    "I6": {"I6", "I11"},
    "I9": {"I9", "I11"},
    "I13": {"I6", "I12", "I13"},
    "F17": {"F17", "I9", "I13"},
    "F19": {"F19", "I6", "I12"},
}


def two_bus(b=1) -> Case:
    return Case((Bus(1), Bus(2)), (Line(1, 1, 2, Fraction(b)),),
                (Measurement(1, "flow", 1),))


def make_case(n, edges, flows=(), injections=(), susceptance=None) -> Case:
    """Small case from an edge list; flows by line id, injections by bus."""
    lines = tuple(Line(i + 1, f, t, None if susceptance is None else Fraction(susceptance))
                  for i, (f, t) in enumerate(edges))
    meas = [Measurement(k + 1, "flow", l) for k, l in enumerate(flows)]
    meas += [Measurement(len(meas) + k + 1, "injection", b) for k, b in enumerate(injections)]
    return Case(tuple(Bus(b) for b in range(1, n + 1)), lines, tuple(meas))


def labels(case, ids):
    return {case.label(m) for m in ids}


@pytest.fixture(scope="session")
def case():
    return ieee14()


@pytest.fixture(scope="session")
def cert(case):
    return build_assignment(case)


@pytest.fixture(scope="session")
def sets(case, cert):
    return all_critical_sets(case, cert)


@pytest.fixture(scope="session")
def H(case):
    return build_jacobian(case)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


def record(n, passed, detail=""):
    ACCEPTANCE[n] = (bool(passed), detail)
    line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE, key=int):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
