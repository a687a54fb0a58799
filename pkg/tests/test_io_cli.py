import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from extspec import cli
from extspec.io import dumps, load_schema, loads, manifest_name, resolve_out_dir

SCHEMA_FOR = {
    "admissibility.json": "admissibility",
    "eig_principal.json": "eigen_result",
    "eig_second.json": "eigen_result",
    "eig_spectrum.json": "eig_spectrum",
    "rearrangement.json": "rearrangement",
    "sweep_summary.json": "sweep_summary",
    "verify.json": "verify",
}


def validate_dir(path):
    """Every JSON artifact in ``path`` against its shipped schema."""
    seen = 0
    for f in sorted(path.glob("*.json")):
        doc = json.loads(f.read_text())
        if f.name.startswith("manifest_"):
            name = "manifest"
        elif f.name.startswith("cell_"):
            name = "sweep_cell"
        else:
            name = SCHEMA_FOR[f.name]
        jsonschema.validate(doc, load_schema(name))
        if name != "manifest":
            assert (path / doc["manifest"]).exists()
        seen += 1
    return seen


def run(tmp_path, *argv):
    return cli.main(list(argv) + ["--out", str(tmp_path)])


# ---------------------------------------------------------------------------
# serialisation


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert loads(dumps({"x": x}))["x"] == x


def test_non_finite_values_are_strings():
    text = dumps({"a": math.inf, "b": -math.inf, "c": math.nan, "d": np.float64(0.1), "e": [np.int64(3)]})
    raw = json.loads(text)
    assert raw["a"] == "inf" and raw["b"] == "-inf" and raw["c"] == "nan"
    assert "0.10000000000000001" in text
    back = loads(text)
    assert back["a"] == math.inf and math.isnan(back["c"]) and back["e"] == [3]


def test_out_dir_precedence(monkeypatch):
    monkeypatch.delenv("EXTSPEC_OUT", raising=False)
    assert resolve_out_dir(None) == "extspec_out"
    assert resolve_out_dir(None, "from_cfg") == "from_cfg"
    monkeypatch.setenv("EXTSPEC_OUT", "env_dir")
    assert resolve_out_dir(None, "from_cfg") == "env_dir"
    assert resolve_out_dir("flag_dir", "from_cfg") == "flag_dir"
    assert manifest_name("eig") == "manifest_eig.json"


def test_schemas_load():
    for name in set(SCHEMA_FOR.values()) | {"manifest", "sweep_cell"}:
        jsonschema.Draft202012Validator.check_schema(load_schema(name))


# ---------------------------------------------------------------------------
# commands


def test_weight_check_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "weight-check", "--kind", "power", "--c", "1", "--q", "4") == 0
    rep = json.loads((tmp_path / "admissibility.json").read_text())
    assert rep["class_A"] is True and rep["x_norm"] == 0.5
    assert run(tmp_path, "weight-check", "--kind", "power", "--c", "-1", "--q", "4") == 2
    assert "g+ = 0" in capsys.readouterr().out
    assert run(tmp_path, "weight-check", "--kind", "powerlog", "--N", "3", "--p", "2") == 0
    rep = json.loads((tmp_path / "admissibility.json").read_text())
    assert rep["x_norm"] == "inf" and rep["route"] == "L^{N/p}"
    assert validate_dir(tmp_path) == 2


def test_malformed_input_exit_1(tmp_path, capsys):
    bad = tmp_path / "w.json"
    bad.write_text('{"kind": "triangle"}')
    assert run(tmp_path, "weight-check", "--weight-file", str(bad)) == 1
    assert run(tmp_path, "weight-check", "--kind", "piecewise") == 1
    assert run(tmp_path, "weight-check", "--p", "nope") == 1
    assert run(tmp_path, "eig", "--mode", "principal", "--R", "0.5", "--n", "16") == 1
    capsys.readouterr()


def test_weight_file(tmp_path):
    wf = tmp_path / "w.json"
    wf.write_text(json.dumps({"kind": "sum", "terms": [{"kind": "power", "c": 1, "q": 4},
                                                       {"kind": "power", "c": -2, "q": 6}]}))
    assert run(tmp_path, "weight-check", "--weight-file", str(wf)) == 0
    man = json.loads((tmp_path / "manifest_weight-check.json").read_text())
    assert str(wf) in man["inputs"]


def test_rearrange_command(tmp_path, capsys):
    assert run(tmp_path, "rearrange", "--kind", "power", "--q", "2", "--samples", "50") == 0
    doc = json.loads((tmp_path / "rearrangement.json").read_text())
    assert doc["norm"] == pytest.approx(7.7956, abs=1e-3)
    rows = (tmp_path / "rearrangement.csv").read_text().splitlines()
    assert rows[0] == "t,fstar,fstarstar" and len(rows) == 51
    assert validate_dir(tmp_path) == 2


def test_eig_principal_prints_reference(tmp_path, capsys):
    code = run(tmp_path, "eig", "--mode", "principal", "--N", "3", "--p", "2", "--kind", "power",
               "--c", "1", "--q", "4", "--R", "64", "--n", "8192")
    assert code == 0
    assert float(capsys.readouterr().out.split()[-1]) == pytest.approx(2.5464, abs=1e-4)
    assert (tmp_path / "eigenfunction_principal.csv").exists()
    assert validate_dir(tmp_path) == 2


def test_eig_spectrum_and_second(tmp_path, capsys):
    assert run(tmp_path, "eig", "--mode", "spectrum", "--k", "5", "--lmax", "2", "--R", "32",
               "--n", "1024") == 0
    doc = json.loads((tmp_path / "eig_spectrum.json").read_text())
    assert len(doc["eigenvalues"]) == 5 and doc["eigenvalues"] == sorted(doc["eigenvalues"])
    assert run(tmp_path, "eig", "--mode", "second", "--R", "32", "--n", "256", "--p", "3",
               "--q", "6") == 0
    assert validate_dir(tmp_path) == 3


def test_eig_negative_weight(tmp_path, capsys):
    code = run(tmp_path, "eig", "--mode", "principal", "--kind", "power", "--c", "-1", "--q", "4",
               "--n", "64", "--R", "8")
    assert code == 1
    assert "constraint unreachable" in capsys.readouterr().err


def test_sweep_reference_ladder(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--R-list", "16,32,64", "--n-list", "4096", "--jobs", "1") == 0
    summ = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert summ["extrapolation"]["limit"] == pytest.approx(math.pi**2 / 4, rel=1e-2)
    assert validate_dir(tmp_path) == 5


def test_sweep_single_cell_refused(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--R-list", "16", "--n-list", "128", "--jobs", "1") == 0
    summ = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert summ["extrapolation"] is None and "at least 3" in summ["refused"]
    assert (tmp_path / "cell_R16_n128.json").exists()


def test_sweep_parallel_matches_serial(tmp_path, capsys):
    args = ["sweep", "--R-list", "8,16,32", "--n-list", "64,128,256", "--p", "2.5", "--q", "5"]
    a, b = tmp_path / "serial", tmp_path / "parallel"
    assert cli.main(args + ["--jobs", "1", "--out", str(a)]) == 0
    assert cli.main(args + ["--jobs", "4", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.glob("*.json") if not p.name.startswith("manifest"))
    assert len(names) == 10
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_mirrors_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "power", "c": 2.0, "q": 4, "R": 16, "n": 256, "mode": "principal"}))
    assert cli.main(["eig", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "eig_principal.json").read_text())
    assert doc["n"] == 256 and doc["weight"]["c"] == 2.0
    # an explicit flag beats the config value
    assert cli.main(["eig", "--config", str(cfg), "--n", "128", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "eig_principal.json").read_text())["n"] == 128
    man = json.loads((tmp_path / "manifest_eig.json").read_text())
    assert str(cfg) in man["inputs"]
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["eig", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_env_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EXTSPEC_OUT", str(tmp_path / "env"))
    assert cli.main(["weight-check"]) == 0
    assert (tmp_path / "env" / "admissibility.json").exists()
    assert cli.main(["weight-check", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "admissibility.json").exists()


def test_verify_suites(tmp_path, capsys):
    assert run(tmp_path, "verify", "--suite", "hardy-sobolev", "--N", "3", "--p", "2", "--family", "50") == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert 3.6 <= doc["suites"][0]["worst_ratio"] <= 4.0
    assert run(tmp_path, "verify", "--suite", "hardy-littlewood", "--trials", "1000") == 0
    assert run(tmp_path, "verify", "--suite", "all", "--trials", "50", "--family", "10") == 0
    assert validate_dir(tmp_path) == 2


def test_verify_broken_constant_exit_3(tmp_path, capsys):
    assert run(tmp_path, "verify", "--suite", "hardy-sobolev", "--family", "10",
               "--constant-override", "0.1") == 3
    assert "violation" in capsys.readouterr().out
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["holds"] is False and doc["witnesses"]
