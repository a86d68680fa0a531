import io
import json
import re

import pytest

from gridsight.cli import run
from gridsight.model import dumps_case
from gridsight.synthetic import random_case

from conftest import REFERENCE_SETS, two_bus


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = call(*argv)
    return code, json.loads(out) if out.strip().startswith("{") else out


def strip_time(text):
    return re.sub(r'"generated_at": "[^"]*"', "", text)


def parse_dot(text):
    nodes, edges = set(), []
    for line in text.splitlines():
        line = line.strip()
        m = re.match(r'^"([^"]+)" -- "([^"]+)"', line)
        if m:
            edges.append(m.groups())
            continue
        m = re.match(r'^"([^"]+)" \[', line)
        if m:
            nodes.add(m.group(1))
    return nodes, edges


@pytest.fixture
def random_file(tmp_path):
    path = tmp_path / "rand.json"
    path.write_text(dumps_case(random_case(12)))
    return str(path)


def test_observability():
    code, rep = report("observability", "--case", "ieee14_paper.json")
    assert code == 0
    assert rep["command"] == "observability" and len(rep["case_digest"]) == 64
    assert rep["result"]["branches"] == [1, 2, 4, 6, 8, 9, 10, 12, 13, 15, 16, 17, 19]


def test_observability_oracle():
    code, rep = report("observability", "--oracle")
    assert rep["oracle_crosscheck"] == {"passed": True, "rank": 13}


def test_unobservable_exit_2(tmp_path):
    path = tmp_path / "bare.json"
    path.write_text(json.dumps({"buses": [{"id": 1}, {"id": 2}],
                                "lines": [{"id": 1, "from": 1, "to": 2}], "measurements": []}))
    code, rep = report("observability", "--case", str(path))
    assert code == 2 and rep["result"]["observable"] is False
    assert report("critical-sets", "--case", str(path))[0] == 2


def test_critical_sets_table():
    code, out, _ = call("critical-sets", "--case", "ieee14_paper.json", "--format", "table")
    assert code == 0
    rows = out.strip().splitlines()[2:]
    got = {}
    for row in rows:
        owner, members = row.split(None, 1)
        got[owner] = set(members.strip("{}").split(", "))
    assert got == REFERENCE_SETS


def test_critical_sets_oracle():
    code, rep = report("critical-sets", "--oracle")
    assert rep["oracle_crosscheck"] == {"failed": [], "passed": True}
    assert len(rep["result"]["critical_sets"]) == 13


def test_sparsest_attack_commands(tmp_path):
    code, rep = report("sparsest-attack", "--oracle")
    assert code == 0 and rep["result"]["cardinality"] == 2
    assert rep["oracle_crosscheck"]["passed"]
    code, rep = report("sparsest-attack", "--include", "I4")
    assert set(rep["result"]["members"]) == {"I2", "I3", "I4"}
    prot = tmp_path / "p.json"
    prot.write_text(json.dumps(["I6", "I7", 15]))
    code, rep = report("sparsest-attack", "--protected", str(prot), "--max-card", "2")
    assert code == 2 and rep["result"]["method"] == "brute-force"
    code, rep = report("sparsest-attack", "--protected", str(prot), "--max-card", "3")
    assert code == 0 and rep["result"]["cardinality"] == 3


def test_defense_commands():
    code, rep = report("defense", "--all")
    assert code == 0 and len(rep["result"]["protected"]) == 13
    code, rep = report("defense", "--tau", "3", "--oracle")
    assert len(rep["result"]["protected"]) == 3 and rep["oracle_crosscheck"]["passed"]
    assert report("defense", "--tau", "1")[0] == 1


def test_verify_attack():
    code, rep = report("verify-attack", "--measurements", "F2,I1,I2,I3,I4,I5", "--oracle")
    assert code == 0 and rep["result"]["stealthy"]
    assert rep["oracle_crosscheck"]["realizable"] and rep["oracle_crosscheck"]["residual_deviation_ok"]
    code, rep = report("verify-attack", "--measurements", "F15")
    assert code == 2 and not rep["result"]["stealthy"]


def test_oracle_subcommands():
    code, rep = report("oracle", "rank", "--without", "I6,I9")
    assert rep["result"]["rank"] == 12
    code, rep = report("oracle", "realizable", "--measurements", "F15,I7")
    assert code == 0 and set(rep["result"]["attack"]) == {"F15", "I7"}
    assert report("oracle", "realizable", "--measurements", "F15")[0] == 2
    code, rep = report("oracle", "brute-force", "--include", "I4", "--max-card", "3")
    assert set(rep["result"]["members"]) == {"I2", "I3", "I4"}
    code, rep = report("oracle", "residual", "--trials", "20")
    assert rep["result"]["within_tolerance"]
    code, rep = report("oracle", "residual", "--state", "1,2", "--trials", "2")
    assert code == 1
    assert report("oracle", "brute-force", "--max-card", "7")[0] == 1


def test_export_counts(tmp_path):
    code, out, _ = call("export", "csm", "--format", "table")
    nodes, edges = parse_dot(out)
    assert len([n for n in nodes if n.startswith("C_")]) == 13
    assert len([n for n in nodes if n.startswith("m_")]) == 17
    assert len(edges) == sum(len(s) for s in REFERENCE_SETS.values())
    two = tmp_path / "two.json"
    two.write_text(dumps_case(two_bus()))
    target = tmp_path / "net.dot"
    code, rep = report("export", "network", "--case", str(two), "--output", str(target))
    assert code == 0 and rep["result"]["output"] == str(target)
    nodes, edges = parse_dot(target.read_text())
    assert len(nodes) == 2 and len(edges) == 1


def test_export_split():
    code, out, _ = call("export", "split", "--owner", "F2", "--format", "table")
    assert "cluster_n1" in out and out.count("style=dashed") == 5
    assert call("export", "split")[0] == 1


def test_usage_and_input_errors():
    assert call()[0] == 64
    assert call("defense")[0] == 64
    assert call("nonsense")[0] == 64
    code, _, err = call("observability", "--case", "missing.json")
    assert code == 1 and "missing.json" in err
    assert call("verify-attack", "--measurements", "Z1")[0] == 1


def test_bad_case_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    assert call("observability", "--case", str(path))[0] == 1


def test_matpower_case(tmp_path):
    path = tmp_path / "c.m"
    path.write_text("mpc.bus = [1 3; 2 1;];\nmpc.branch = [1 2 0 0.5;];\n")
    code, rep = report("observability", "--case", str(path))
    assert code == 2  # no measurements in a MATPOWER file


def test_seed_env_override(random_file, monkeypatch):
    every = ",".join(str(m) for m in random_case(12).measurement_ids)
    argv = ["oracle", "realizable", "--measurements", every, "--case", random_file]
    a = call(*argv, "--seed", "1")
    monkeypatch.setenv("GRIDSIGHT_SEED", "2")
    b = call(*argv, "--seed", "1")
    c = call(*argv, "--seed", "2")
    monkeypatch.delenv("GRIDSIGHT_SEED")
    assert a[0] == b[0] == 0
    assert strip_time(b[1]) == strip_time(c[1])
    assert strip_time(a[1]) != strip_time(b[1])


@pytest.mark.parametrize("argv", [
    ["observability"], ["critical-sets"], ["sparsest-attack"], ["sparsest-attack", "--include", "I4"],
    ["defense", "--all"], ["defense", "--tau", "3"],
    ["verify-attack", "--measurements", "F2,I1,I2,I3,I4,I5"],
    ["oracle", "rank"], ["oracle", "residual", "--trials", "5"], ["export", "csm"],
])
def test_deterministic(argv):
    first = call(*argv, "--oracle")
    second = call(*argv, "--oracle")
    assert first[0] == second[0]
    assert strip_time(first[1]) == strip_time(second[1])
