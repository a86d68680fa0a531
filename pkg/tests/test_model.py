import json
from fractions import Fraction

import pytest

from gridsight.model import (Bus, Case, CaseSyntaxError, Line, Measurement, SchemaError,
                             ValidationError, bundled_case, case_to_dict, dumps_case,
                             load_case, parse_case, validate_case)

from conftest import two_bus


def _doc(**over):
    doc = {
        "buses": [{"id": 1}, {"id": 2}, {"id": 3}],
        "lines": [{"id": 1, "from": 1, "to": 2, "susceptance": "5"},
                  {"id": 2, "from": 2, "to": 3, "susceptance": "10/3"}],
        "measurements": [{"id": 1, "kind": "flow", "target": 1},
                         {"id": 2, "kind": "injection", "target": 3}],
    }
    doc.update(over)
    return doc


def test_parse_json_roundtrip():
    case = parse_case(json.dumps(_doc()))
    assert case.n_buses == 3
    assert case.line(2).susceptance == Fraction(10, 3)
    assert case.labels([1, 2]) == ["F1", "I3"]
    again = parse_case(dumps_case(case))
    assert again == case
    assert again.digest() == case.digest()


def test_digest_ignores_input_order():
    doc = _doc()
    doc["lines"] = doc["lines"][::-1]
    assert parse_case(json.dumps(doc)).digest() == parse_case(json.dumps(_doc())).digest()


def test_resolve_tokens():
    case = parse_case(json.dumps(_doc()))
    assert case.resolve("I3") == 2
    assert case.resolve("1") == 1
    assert case.resolve(2) == 2
    with pytest.raises(KeyError):
        case.resolve("F9")


@pytest.mark.parametrize("over, code", [
    ({"lines": [{"id": 1, "from": 1, "to": 1}, {"id": 2, "from": 2, "to": 3}]}, "self-loop"),
    ({"lines": [{"id": 1, "from": 1, "to": 2}, {"id": 2, "from": 2, "to": 1},
                {"id": 3, "from": 2, "to": 3}]}, "parallel lines"),
    ({"lines": [{"id": 1, "from": 1, "to": 2}]}, "graph not connected"),
    ({"lines": [{"id": 1, "from": 1, "to": 2}, {"id": 2, "from": 2, "to": 9}]},
     "dangling reference"),
    ({"measurements": [{"id": 1, "kind": "flow", "target": 7}]}, "dangling reference"),
    ({"measurements": [{"id": 1, "kind": "flow", "target": 1},
                       {"id": 2, "kind": "flow", "target": 1}]}, "duplicate flow measurement"),
    ({"measurements": [{"id": 1, "kind": "injection", "target": 2},
                       {"id": 2, "kind": "injection", "target": 2}]},
     "duplicate injection measurement"),
    ({"measurements": [{"id": 1, "kind": "flow", "target": 1},
                       {"id": 1, "kind": "flow", "target": 2}]}, "duplicate measurement id"),
    ({"buses": [{"id": 1}, {"id": 2}, {"id": 4}]}, "bus ids not contiguous"),
    ({"lines": [{"id": 1, "from": 1, "to": 2, "susceptance": "0"},
                {"id": 2, "from": 2, "to": 3}]}, "zero susceptance"),
    ({"reference_bus": 5}, "unknown reference bus"),
])
def test_validation_errors(over, code):
    with pytest.raises(ValidationError) as err:
        parse_case(json.dumps(_doc(**over)))
    assert code in err.value.report.codes()


def test_validate_reports_all_issues():
    case = Case((Bus(1), Bus(2), Bus(3)), (Line(1, 1, 1), Line(2, 2, 2)), ())
    codes = validate_case(case).codes()
    assert codes.count("self-loop") == 2
    assert "graph not connected" in codes


def test_schema_and_syntax_errors():
    with pytest.raises(CaseSyntaxError):
        parse_case("{not json")
    with pytest.raises(SchemaError):
        parse_case(json.dumps({"buses": []}))
    with pytest.raises(SchemaError):
        parse_case(json.dumps(_doc(measurements=[{"id": 1, "kind": "voltage", "target": 1}])))
    with pytest.raises(SchemaError):
        parse_case(json.dumps(_doc(buses=[{"id": "a"}])))


MATPOWER = """
function mpc = case3
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.05	0.95;
	2	1	0	0	0	0	1	1	0	135	1	1.05	0.95;
%	9	1	0	0	0	0	1	1	0	135	1	1.05	0.95;
	3	2	0	0	0	0	1	1	0	135	1	1.05	0.95;
];
mpc.branch = [
	1	2	0.01	0.25	0	0	0	0	0	0	1	-360	360;
	2	3	0.02	0.5	0	0	0	0	0	0	1	-360	360;
];
"""


def test_matpower_parse(tmp_path):
    path = tmp_path / "case3.m"
    path.write_text(MATPOWER)
    case = load_case(path)
    assert case.bus_ids == (1, 2, 3)
    assert [ln.susceptance for ln in case.lines] == [Fraction(4), Fraction(2)]
    assert case.measurements == ()


def test_matpower_missing_section():
    with pytest.raises(CaseSyntaxError):
        parse_case("mpc.bus = [1 3 0;];", format="matpower")


def test_bundled_case_shape():
    case = bundled_case()
    assert case.n_buses == 14 and len(case.lines) == 20 and len(case.measurements) == 17
    assert validate_case(case).ok
    assert case_to_dict(case)["reference_bus"] == 1
    assert two_bus().n_buses == 2
