import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import pytest

from hn_persistence.core.errors import ParseError, ValidationError
from hn_persistence.core.gridcomb import INF, Cube, GridFunction
from hn_persistence.core.hncore import hn_filtration
from hn_persistence.core.hninvariants import discretise_at
from hn_persistence.core.persmod import Presentation, from_presentation
from hn_persistence.core.stabcond import (NEGATIVE_POINT_MASS, NON_STEP_ALPHA_DENSITY, STEP, UNBOUNDED_ALPHA_CARRIER,
                                          pullback_Z)
from hn_persistence.utils.formats import (csv_header, emit_firep, emit_stability_json, filtration_to_dict,
                                          load_module, load_stability, parse_firep, parse_module_text,
                                          parse_point_text, parse_rational, parse_stability_json, parse_thetas,
                                          parse_window, render_rational, save_module, save_stability, write_csv,
                                          write_json)

EXAMPLES = Path(__file__).resolve().parent.parent / "data" / "examples"
HALF = Fraction(1, 2)


def beta_doc(n=1):
    return {"window": {"lows": ["0"] * n, "highs": ["1"] * n}, "values": [[["1"]] * n]}


# Scalars

def test_rationals_are_exact():
    assert parse_rational("3/6") == HALF
    assert parse_rational(-2) == -2
    assert parse_rational(" 7 ") == 7
    for bad in (0.5, "0.5", "1e3", True, "one", "1/0", None):
        with pytest.raises(ParseError):
            parse_rational(bad)
    assert render_rational(HALF) == "1/2"
    assert render_rational(INF) == "inf"


def test_cli_values():
    assert parse_point_text("1/2,0") == (HALF, 0)
    assert parse_window("0:2,-1/2:1") == [(0, 2), (-HALF, 1)]
    assert parse_thetas("auto") == "auto"
    assert parse_thetas("0, 1/2") == [0, HALF]
    with pytest.raises(ParseError):
        parse_window("2:0")
    with pytest.raises(ParseError):
        parse_window("0-2")


# Modules

def test_example_modules_load():
    two_chain = load_module(EXAMPLES / "two_chain.json")
    assert two_chain.characteristic == 2
    assert from_presentation(two_chain).dimension_vector() == (2, 1, 0)
    interval = load_module(EXAMPLES / "interval.firep")
    assert interval.generators == ((0,),)
    assert interval.relations == (((1,), (1,)),)
    assert load_module(EXAMPLES / "zero.json").generators == ()


def test_modules_survive_both_layouts(tmp_path):
    pres = load_module(EXAMPLES / "two_chain.json")
    for name in ("copy.json", "copy.firep"):
        save_module(pres, tmp_path / name)
        assert load_module(tmp_path / name) == pres


def test_firep_layout():
    text = "# two generators\nfirep prime=3\n2 1\n0 0 ;\n1/2 0 ;\n1 1 ; 1 -1  # relation\n"
    pres = parse_firep(text)
    assert pres.characteristic == 3
    assert pres.generators == ((0, 0), (HALF, 0))
    assert pres.relations == (((1, 1), (1, -1)),)
    assert parse_firep(emit_firep(pres)) == pres
    assert parse_module_text(text) == pres


@pytest.mark.parametrize("text, line, column", [
    ("frep\n1 0\n0 ;\n", 1, 1),
    ("firep prim=2\n1 0\n0 ;\n", 1, 7),
    ("firep\n1\n0 ;\n", 2, 1),
    ("firep\n1 0\n0 x ;\n", 3, 3),
    ("firep\n1 0\n0.5 ;\n", 3, 1),
    ("firep\n1 1\n0 ;\n1 ; 1 1\n", 4, 4),
    ("firep\n1 0\n0 ; 1\n", 3, 5),
    ("firep\n2 0\n0 ;\n", 4, 1),
    ("firep\n2 0\n0 ;\n0 0 ;\n", 4, 1),
])
def test_firep_errors_carry_their_position(text, line, column):
    with pytest.raises(ParseError) as e:
        parse_firep(text)
    assert (e.value.line, e.value.column) == (line, column)


def test_json_errors_carry_their_position():
    with pytest.raises(ParseError) as e:
        parse_module_text('{\n  "n": 1,\n  "generators": [["0"]],,\n}')
    assert e.value.line == 3
    with pytest.raises(ParseError):
        parse_module_text('{"n": 1, "generators": [[0.5]]}')
    with pytest.raises(ParseError):
        parse_module_text('{"n": 1, "field": "complex", "generators": []}')
    with pytest.raises(ValidationError):
        parse_module_text('{"n": 1, "generators": [["1"]], "relations": [{"point": ["0"], "coeffs": ["1"]}]}')


# Stability conditions

def test_example_conditions_load():
    z = load_stability(EXAMPLES / "two_chain_stab.json")
    ds = pullback_Z(z, GridFunction(((0, 1, 2, 3),)))
    assert [ds.beta[(k,)] for k in range(4)] == [1, 1, HALF, HALF]
    fitted = load_stability(EXAMPLES / "skyscraper_stab.json", points=[(0,), (2,)])
    assert fitted.beta.window == Cube.half_open((-1,), (3,))


def test_conditions_survive_a_save(tmp_path):
    z = load_stability(EXAMPLES / "square_stab.json")
    save_stability(z, tmp_path / "z.json")
    assert load_stability(tmp_path / "z.json") == z


def test_carriers():
    doc = {"n": 2, "mode": STEP, "beta": beta_doc(2), "alpha": [
        {"point": ["0", "0"], "coeff": "1"},
        {"cube": {"lows": ["0", "0"], "highs": ["1/2", "1/2"]}, "coeff": "1/2"},
        {"face": {"lows": ["0", "0"], "highs": ["1", "0"]}, "coeff": "2"},
    ]}
    z = parse_stability_json(doc)
    face = z.alpha[2].carrier
    assert face.low_closed == (True, True) and face.high_closed == (False, True)
    assert z.alpha[1].coeff == HALF
    assert parse_stability_json(emit_stability_json(z)) == z


def test_beta_grid_defaults_to_the_window(tmp_path):
    doc = {"n": 1, "mode": "eval", "beta": {"window": {"lows": ["-1"], "highs": ["1/2"]}, "values": [[["2"]]]},
           "alpha": [{"point": ["0"], "coeff": "1"}]}
    z = parse_stability_json(doc)
    assert z.beta.window_grid.axes == ((-1, HALF),)
    path = tmp_path / "no_grid.json"
    path.write_text(json.dumps(doc), encoding='utf-8')
    assert load_stability(path) == z


def test_condition_diagnostics():
    def alpha(entry, mode="eval"):
        return {"n": 1, "mode": mode, "beta": beta_doc(), "alpha": [entry]}

    cases = [
        (alpha({"point": ["0"], "coeff": "-1"}), NEGATIVE_POINT_MASS),
        (alpha({"density": "x^2"}, STEP), NON_STEP_ALPHA_DENSITY),
        (alpha({"limit": "+inf"}), UNBOUNDED_ALPHA_CARRIER),
        (alpha({"cube": {"lows": ["0"], "highs": [None]}, "coeff": "1"}, STEP), UNBOUNDED_ALPHA_CARRIER),
    ]
    for doc, name in cases:
        with pytest.raises(ValidationError) as e:
            parse_stability_json(doc)
        assert e.value.diagnostics[0].startswith(name)
    with pytest.raises(ParseError):
        parse_stability_json(alpha({"point": ["0"], "coeff": 1.0}))
    with pytest.raises(ParseError):
        parse_stability_json(alpha({"point": ["0"], "coeff": "1"}, mode="smooth"))


# Reports

def test_filtration_report():
    pres = Presentation(1, ((0,), (0,)), (((1,), (1, 0)), ((2,), (0, 1))), 2)
    u = from_presentation(pres)
    z = load_stability(EXAMPLES / "two_chain_stab.json")
    fine, ds = discretise_at(u, z, (0,))
    report = filtration_to_dict(hn_filtration(fine, ds))
    assert report['slopes'] == ["1", "1/2"]
    assert report['step_dims'][1] == [1, 0, 0, 0]
    assert json.loads(write_json(report, None)) == report


def test_csv_output(tmp_path):
    rows = [["0", "1", "1/2", "1"], ["0", "0", "", "inf"]]
    stream = io.StringIO()
    write_csv(csv_header(1), rows, None, stream)
    assert stream.getvalue().splitlines()[0] == "x1,y1,theta,value"
    write_csv(csv_header(1), rows, tmp_path / "out.csv", None)
    with open(tmp_path / "out.csv", encoding='utf-8', newline='') as f:
        assert list(csv.reader(f))[1:] == rows
    assert csv_header(2, with_theta=False) == ["x1", "x2", "y1", "y2", "value"]
