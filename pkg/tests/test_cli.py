import csv
import json
from fractions import Fraction
from pathlib import Path
from unittest import mock

import pytest

import hn_cli
from hn_persistence.config.settings import RunConfig
from hn_persistence.core.errors import ValidationError
from hn_persistence.core.persmod import GridModule, Presentation

EXAMPLES = Path(__file__).resolve().parent.parent / "data" / "examples"
TWO_CHAIN = str(EXAMPLES / "two_chain.json")
TWO_CHAIN_STAB = str(EXAMPLES / "two_chain_stab.json")


def run(capsys, *argv):
    code = hn_cli.main(list(argv) + ["--quiet"])
    return code, capsys.readouterr().out


def test_hn_report(capsys):
    code, out = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB, "--oracle")
    assert code == 0
    report = json.loads(out)
    assert report['slopes'] == ["1", "1/2"]
    assert report['step_dims'] == [[0, 0, 0, 0], [1, 0, 0, 0], [2, 1, 0, 0]]
    assert report['oracle_agrees'] is True


def test_hn_report_to_file(capsys, tmp_path):
    target = tmp_path / "hn.json"
    code, out = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB, "--out", str(target))
    assert code == 0
    assert "[OK]" in out
    with open(target, encoding='utf-8') as f:
        assert json.load(f)['hn_type'][0] == {'slope': "1", 'dims': [1, 0, 0, 0]}


def test_s_point_queries(capsys):
    code, out = run(capsys, "s", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB,
                    "--x", "0", "--y", "1/2", "--theta", "1/2,1")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["x1", "y1", "theta", "value"]
    assert rows[1:] == [["0", "1/2", "1/2", "2"], ["0", "1/2", "1", "1"]]


def test_negative_coordinates_reach_the_command(capsys):
    code, out = run(capsys, "s", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB,
                    "--x", "-1/2", "--y", "0", "--theta", "0")
    assert code == 0
    assert list(csv.reader(out.splitlines()))[1] == ["-1/2", "0", "0", "0"]
    code, out = run(capsys, "s", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB,
                    "--window", "-1:1", "--res", "1", "--theta", "0")
    assert code == 0
    assert ["-1", "0", "0", "0"] in list(csv.reader(out.splitlines()))


def test_signed_values_are_joined():
    assert hn_cli.join_signed_values(["s", "--x", "-1/2", "--quiet"]) == ["s", "--x=-1/2", "--quiet"]
    assert hn_cli.join_signed_values(["s", "--x", "--quiet"]) == ["s", "--x", "--quiet"]
    assert hn_cli.join_signed_values(["s", "--out", "-"]) == ["s", "--out", "-"]


def test_beta_without_grid(capsys, tmp_path):
    stab = tmp_path / "no_grid.json"
    stab.write_text('{"n": 1, "mode": "eval", "alpha": [{"point": ["0"], "coeff": "1"}], '
                    '"beta": {"window": {"lows": ["0"], "highs": ["2"]}, "values": [[["1"]]]}}', encoding='utf-8')
    code, out = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", str(stab))
    assert code == 0
    assert json.loads(out)['slopes'][0] == "1"


def test_s_sampled_to_csv(capsys, tmp_path):
    target = tmp_path / "s.csv"
    code, _ = run(capsys, "s", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB,
                  "--window", "0:1", "--res", "1/2", "--theta", "0", "--out", str(target))
    assert code == 0
    with open(target, encoding='utf-8', newline='') as f:
        rows = list(csv.reader(f))
    assert len(rows) == 1 + 6
    assert ["0", "0", "0", "2"] in rows


def test_s_profile_and_skyscraper(capsys):
    code, out = run(capsys, "s", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB, "--profile", "0")
    assert code == 0
    report = json.loads(out)
    assert report['breakpoints'] == ["1", "1/2"]
    assert report['theta_min'] == "0"
    code, out = run(capsys, "s", "--module", str(EXAMPLES / "interval.firep"), "--skyscraper")
    assert code == 0
    assert json.loads(out)['skyscraper'][0]['point'] == ["0"]


def test_distance_report(capsys):
    code, out = run(capsys, "distance", "--module", TWO_CHAIN, "--other", str(EXAMPLES / "two_chain_moved.json"),
                    "--stab", TWO_CHAIN_STAB, "--window", "0:2", "--res", "1/2", "--theta", "0,1", "--ks", "1")
    assert code == 0
    report = json.loads(out)
    assert set(report['erosion_per_theta']) == {"0", "1"}
    assert Fraction(report['rank_erosion']) <= Fraction(1, 2)
    assert set(report['landscape_distance']) == {"0"}


def test_breakpoints(capsys):
    code, out = run(capsys, "breakpoints", "--module", str(EXAMPLES / "interval.firep"),
                    "--stab", str(EXAMPLES / "skyscraper_stab.json"), "--region", "-1:2")
    assert code == 0
    assert json.loads(out)['breakpoints'] == ["0", "1"]
    code, _ = run(capsys, "breakpoints", "--module", str(EXAMPLES / "square.json"),
                  "--stab", str(EXAMPLES / "square_stab.json"))
    assert code == 2


def test_harness_verb(capsys, tmp_path):
    code, out = run(capsys, "harness", "--quick", "--suite", "guardrails", "--out", str(tmp_path / "h.json"))
    assert code == 0
    assert "[OK] All invariants hold" in out
    code, out = run(capsys, "harness", "--quick", "--suite", "oracle_equivalence", "--mutate", "slope-sign-flip")
    assert code == 6
    assert "[ERROR] Violated invariants" in out


@pytest.mark.parametrize("name, text, code", [
    ("bad.firep", "firep\n1 0\n0 x ;\n", 3),
    ("bad.json", '{"n": 1, "generators": [[0.5]]}', 3),
])
def test_malformed_modules(capsys, tmp_path, name, text, code):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    got, out = run(capsys, "hn", "--module", str(path), "--stab", TWO_CHAIN_STAB)
    assert got == code
    assert out.startswith("[ERROR]")


def test_modules_failing_validation_exit_with_diagnostics(capsys):
    broken = ValidationError(["square at (0,) on axes 0,1 does not commute"])
    with mock.patch.object(GridModule, "validate", autospec=True, side_effect=broken):
        code, out = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB)
    assert code == ValidationError.exit_code == 4
    assert out.startswith("[ERROR]") and "does not commute" in out


def test_invalid_condition_and_budget(capsys, tmp_path):
    stab = tmp_path / "neg.json"
    stab.write_text('{"n": 1, "mode": "eval", "alpha": [{"point": ["0"], "coeff": "-1"}]}', encoding='utf-8')
    code, out = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", str(stab))
    assert code == 4
    assert "negative-point-mass" in out
    code, _ = run(capsys, "hn", "--module", TWO_CHAIN, "--stab", TWO_CHAIN_STAB, "--oracle", "--oracle-budget", "1")
    assert code == 5
    code, _ = run(capsys, "hn", "--module", str(tmp_path / "missing.json"), "--stab", TWO_CHAIN_STAB)
    assert code == 2


def test_run_config_validation():
    with pytest.raises(ValidationError) as e:
        RunConfig(resolution=Fraction(0), window=[(Fraction(1), Fraction(0))]).validate()
    assert len(e.value.diagnostics) == 2
    assert RunConfig().validate().thetas == "auto"


def test_default_window_pads_upwards():
    pres = Presentation(1, ((0,), (0,)), (((1,), (1, 0)), ((2,), (0, 1))), 2)
    assert hn_cli.default_window([pres]) == [(0, 3)]
    assert hn_cli.default_window([Presentation(2, (), ())]) == [(0, 1), (0, 1)]
