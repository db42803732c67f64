import json
from pathlib import Path

import pytest

from cobar_forge.cli import SCENARIO_DIR, main
from cobar_forge.hopf import builtin_hopf
from cobar_forge.render import pretty, render_ascii
from cobar_forge.scenario import ScenarioError, run_scenario


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_verify_ok(capsys):
    code, out = run(capsys, "verify", "--algebra", "A-tmf-p3", "--max-deg", "23", "--comodule", "hZ")
    assert code == 0 and "FAILED" not in out


def test_verify_mutated_coproduct(tmp_path, capsys):
    data = builtin_hopf("A-tmf-p3").to_json()
    a2 = next(g for g in data["generators"] if g["name"] == "a2")
    a2["coproduct"][2][2] = 2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, out = run(capsys, "verify", "--algebra", str(path), "--max-deg", "23")
    assert code == 1 and "FAILED" in out


def test_ext_ascii_is_deterministic(capsys):
    args = ("ext", "--comodule", "hZ", "--max-s", "5", "--max-t", "20")
    _, a = run(capsys, *args)
    _, b = run(capsys, *args)
    assert a == b
    rows = [line for line in a.splitlines() if line.startswith("  0 |")]
    assert rows and rows[0].split("|")[1].split()[0] == "1"


def test_ext_svg_labels(tmp_path, capsys):
    names = tmp_path / "names.json"
    names.write_text(json.dumps([{"name": "c4t", "s": 1, "t": 9}]))
    out = tmp_path / "chart.svg"
    code, _ = run(capsys, "ext", "--comodule", "hZ", "--max-s", "4", "--max-t", "20",
                  "--format", "svg", "--names", str(names), "--out", str(out))
    text = out.read_text()
    assert code == 0 and "c̃₄" in text and 'class="v0"' in text


def test_chart_roundtrip(tmp_path, capsys):
    out = tmp_path / "chart.json"
    run(capsys, "ext", "--max-s", "4", "--max-t", "16", "--format", "json", "--out", str(out))
    code, text = run(capsys, "chart", str(out))
    assert code == 0 and text.startswith("# Ext over A-tmf-p3")


def test_empty_chart_is_header_only():
    text = render_ascii({"prime": 3, "algebra": "A", "comodule": "M", "window": {"max_s": 0, "max_t": 0},
                         "classes": []})
    assert text.splitlines()[1] == "  0 | ."


def test_malformed_chart(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"prime": 3}))
    assert main(["chart", str(bad)]) == 2


def test_pretty_names():
    assert pretty("c4t") == "c̃₄" and pretty("v0") == "v₀" and pretty("[alphae4]") == "[alphae4]"


def test_witness_command(capsys):
    code, out = run(capsys, "witness", "--algebra", "A1-p3", "--comodule", "hZ", "[xi1]i0")
    assert code == 0 and out.strip() == "d([]i4) = [xi1]i0"
    code, out = run(capsys, "witness", "--algebra", "A1-p3", "--comodule", "hZ", "[tau0]i0")
    assert code == 1 and "no bounding chain" in out


def test_les_command(capsys):
    code, out = run(capsys, "les", "--comodule", "hZ", "--sub", "i0,i4,i8", "--max-s", "2", "--max-t", "14")
    data = json.loads(out)
    assert code == 0 and data["exact"] and "0,5" in data["connecting"]


def test_adams_command(capsys):
    code, out = run(capsys, "adams", "--comodule", "R3-skeleton:4", "--max-s", "11", "--max-t", "70")
    assert code == 0 and "d2: (6, 54) -> (8, 55)" not in out
    assert "d2: (4, 35) -> (6, 36)" in out and "d3:" in out


def test_groups_command(capsys):
    code, out = run(capsys, "groups", "--max-n", "48")
    assert code == 0 and "24  Z/3 + Z/729" in out and "MISMATCH" not in out


def test_tate_command_reports_growth(capsys):
    code, out = run(capsys, "tate")
    data = json.loads(out)
    assert code == 1 and "-1" in data["report"]["unstable"]


def test_jobs_env(monkeypatch, capsys):
    monkeypatch.setenv("COBAR_FORGE_JOBS", "2")
    a = run(capsys, "ext", "--engine", "cobar", "--max-s", "3", "--max-t", "14")
    monkeypatch.setenv("COBAR_FORGE_JOBS", "1")
    b = run(capsys, "ext", "--engine", "cobar", "--max-s", "3", "--max-t", "14")
    assert a == b and a[0] == 0


def test_bad_input_exit_code(capsys):
    assert main(["ext", "--algebra", "nope"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["scenario", "no-such-scenario"]) == 2


SCENARIOS = sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


@pytest.mark.parametrize("name", SCENARIOS)
def test_shipped_scenarios_pass(name, tmp_path):
    result = run_scenario(SCENARIO_DIR / f"{name}.json", out_dir=tmp_path)
    assert result.ok, result.log
    for fname, text in result.artifacts.items():
        assert (tmp_path / fname).read_text() == text


def test_golden_mismatch_exit_code(tmp_path, capsys):
    src = json.loads((SCENARIO_DIR / "G-groups.json").read_text())
    path = tmp_path / "g.json"
    path.write_text(json.dumps(src))
    (tmp_path / "golden").mkdir()
    (tmp_path / "golden" / "G-groups.series.json").write_text("{}\n")
    assert main(["scenario", str(path)]) == 1


def test_scenario_unknown_label(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"name": "x", "steps": [{"op": "adams", "chart": "missing"}]}))
    with pytest.raises(ScenarioError):
        run_scenario(path)
