import pytest

from gridsight.critical_sets import (CUT_FLOW, MATCHED_INJECTION, SELF, UNASSIGNED_INJECTION,
                                     NotApplicable, NotAssigned, all_critical_sets,
                                     backup_boundary_injections, critical_set,
                                     is_critical_measurement, split_tree)
from gridsight.observability import _DSU, build_assignment
from gridsight.oracle import RandomGeneric, build_jacobian, rank_of, verify_critical_set
from gridsight.synthetic import random_case

from conftest import REFERENCE_SETS, labels, two_bus


def test_reference_sets(case, sets):
    got = {case.label(m): labels(case, cs.members) for m, cs in sets.items()}
    assert got == REFERENCE_SETS


def test_split_f2(case, cert):
    s = split_tree(case, cert, case.resolve("F2"))
    assert s.n1 == {1, 5, 6, 10, 12, 13}
    assert s.n2 == {2, 3, 4, 7, 8, 9, 11, 14}
    assert s.b1 == {1, 10, 13, 12, 19}
    assert s.b2 == {4, 6, 8, 15, 9, 16, 17}
    assert s.n12 == {1, 5, 10, 13} and s.n21 == {2, 4, 11, 14}
    assert set(s.cut_lines) == {2, 3, 7, 18, 20}
    assert labels(case, s.candidates) == {"I4", "I11", "I2", "I1", "I5", "I13"}
    assert s.candidate_flows == frozenset()


@pytest.mark.parametrize("m_prime, expected", [("I13", {"I12"}), ("I2", set()), ("I1", set())])
def test_backups_under_f2(case, cert, m_prime, expected):
    s = split_tree(case, cert, case.resolve("F2"))
    got = backup_boundary_injections(case, cert, s, case.resolve(m_prime))
    assert labels(case, got) == expected


def test_backup_not_applicable(case, cert):
    s = split_tree(case, cert, case.resolve("F2"))
    with pytest.raises(NotApplicable):
        backup_boundary_injections(case, cert, s, case.resolve("I4"))  # unassigned
    s9 = split_tree(case, cert, case.resolve("F17"))
    with pytest.raises(NotApplicable):
        backup_boundary_injections(case, cert, s9, case.resolve("F2"))


def test_not_assigned(case, cert):
    with pytest.raises(NotAssigned):
        split_tree(case, cert, case.resolve("I4"))
    with pytest.raises(NotAssigned):
        critical_set(case, cert, case.resolve("I7"))


def test_provenance(case, sets):
    f2 = sets[case.resolve("F2")]
    kinds = {case.label(k): p.kind for k, p in f2.provenance.items()}
    assert kinds == {"F2": SELF, "I4": UNASSIGNED_INJECTION, "I11": UNASSIGNED_INJECTION,
                     "I13": MATCHED_INJECTION}
    assert labels(case, f2.provenance[case.resolve("I13")].backups) == {"I12"}
    f15 = sets[case.resolve("F15")]
    assert f15.provenance[case.resolve("I7")].kind == UNASSIGNED_INJECTION


def test_two_bus_case():
    case = two_bus()
    cert = build_assignment(case)
    s = split_tree(case, cert, 1)
    assert s.n1 == {1} and s.n2 == {2} and s.cut_lines == (1,) and not s.candidates
    assert {m: set(cs.members) for m, cs in all_critical_sets(case, cert).items()} == {1: {1}}
    assert is_critical_measurement(case, cert, 1)


def test_is_critical_bundled(case, cert):
    assert not is_critical_measurement(case, cert, case.resolve("F2"))


def test_deterministic(case, cert, sets):
    assert all_critical_sets(case, cert) == sets


def test_split_sides_match_union_find():
    checked = 0
    for seed in range(60):
        case = random_case(seed)
        cert = build_assignment(case)
        if not cert:
            continue
        for m, line in cert.assignment.items():
            s = split_tree(case, cert, m)
            dsu = _DSU(case.bus_ids)
            for l in cert.branches - {line}:
                dsu.union(*case.line(l).ends)
            groups = {frozenset(g) for g in dsu.groups()}
            assert groups == {s.n1, s.n2}
            assert s.b1 | s.b2 | {line} == cert.branches
            assert m not in s.candidates
            for l in s.cut_lines:
                a, b = case.line(l).ends
                assert {a, b} & s.n12 and {a, b} & s.n21
            checked += 1
    assert checked > 100


def test_random_sets_pass_rank_checks():
    for seed in range(80):
        case = random_case(seed)
        cert = build_assignment(case)
        if not cert:
            continue
        H = build_jacobian(case, RandomGeneric())
        for m, cs in all_critical_sets(case, cert).items():
            report = verify_critical_set(H, cs, cert)
            assert report.passed, (seed, m, report)
            # critical measurement iff removing it alone drops the rank
            alone = rank_of(H, [k for k in H.rows if k != m]) < H.n_states
            assert (len(cs) == 1) == alone, (seed, m)


def test_member_categories(case, cert, sets):
    for m, cs in sets.items():
        s = split_tree(case, cert, m)
        for k, p in cs.provenance.items():
            if p.kind == CUT_FLOW:
                assert case.measurement(k).target in s.cut_lines
            if p.kind == UNASSIGNED_INJECTION:
                assert k not in cert
            if p.kind == MATCHED_INJECTION:
                assert p.backups and p.matched_backup in p.backups
