import json
from pathlib import Path

import pytest

from oneinc.cli import ConfigError, load_config, main, resolve_config
from oneinc.scenarios import SCENARIOS, parse_class_spec, scenarios

GOLDEN = Path(__file__).parent / "golden"
NAMES = ["improper-gap", "erm-gap-cantor1", "erm-gap-cantor2", "sandwich-oneinclusion", "dims-table",
         "compression-curve", "perceptron-margin", "verify-embeddings", "dim-ratio-scan"]


def test_nine_scenarios_with_descriptions():
    listed = scenarios()
    assert [s["name"] for s in listed] == NAMES
    for s in listed:
        assert s["description"] and isinstance(s["defaults"], dict)
        json.dumps(s)


def test_scenarios_command(capsys):
    assert main(["scenarios"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 9


def test_parse_class_spec(tmp_path):
    assert len(parse_class_spec("first-cantor:n=3")) == 8
    assert len(parse_class_spec("hd:d=4")) == 6
    assert len(parse_class_spec("boolean:n=2")) == 4
    assert len(parse_class_spec("random:n=3,k=2,rows=5,seed=1")) <= 5
    with pytest.raises(ValueError, match="missing"):
        parse_class_spec("hd:x=3")
    with pytest.raises(ValueError, match="unknown"):
        parse_class_spec("nope:n=3")
    p = tmp_path / "c.json"
    p.write_text('{"domain": ["a", "b"], "labels": ["0", "1"], "hypotheses": [["0", "1"], ["1", "1"]]}')
    assert len(parse_class_spec(str(p))) == 2


def test_golden_csv_tiny_seed(tmp_path):
    out = tmp_path / "run"
    rc = main(["run", "erm-gap-cantor1", "--trials", "2", "--m-grid", "1,3", "--seed", "7",
               "--class", "first-cantor:n=4", "--out", str(out)])
    assert rc == 0
    assert (out / "curve.csv").read_text() == (GOLDEN / "erm_gap_cantor1_tiny.csv").read_text()
    assert {p.name for p in out.iterdir()} == {"summary.json", "curve.csv", "summary.csv", "manifest.json"}


def test_rerun_is_byte_identical(tmp_path):
    args = ["run", "improper-gap", "--trials", "5", "--m-grid", "1,4", "--seed", "3"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("curve.csv", "summary.csv", "summary.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_records_hashes(tmp_path):
    main(["run", "dims-table", "--out", str(tmp_path)])
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["scenario"] == "dims-table" and len(man["config_sha256"]) == 64
    assert set(man["files"]) == {"summary.json", "curve.csv", "summary.csv"}
    assert "numpy" in man["versions"]


def test_unknown_key_reports_line(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text('{\n  "seed": 1,\n  "trails": 5\n}\n')
    with pytest.raises(ConfigError, match=r"cfg.json:3: unknown key 'trails'"):
        load_config(p)
    assert main(["run", "erm-gap-cantor1", "--config", str(p)]) == 2
    assert ":3:" in capsys.readouterr().err


def test_syntax_error_reports_line_and_column(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{\n  "seed": 1,\n}\n')
    with pytest.raises(ConfigError, match=r":3:1:"):
        load_config(p)


def test_wrong_type_reports_line(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{\n "trials": "many"\n}')
    with pytest.raises(ConfigError, match=":2:"):
        load_config(p)


def test_precedence_flags_over_file_over_defaults():
    cfg = resolve_config("erm-gap-cantor1", {"trials": 9, "seed": 4}, {"seed": 5, "trials": None})
    assert cfg["trials"] == 9 and cfg["seed"] == 5
    assert cfg["m_grid"] == SCENARIOS["erm-gap-cantor1"].defaults["m_grid"]
    with pytest.raises(ConfigError):
        resolve_config("erm-gap-cantor1", {"params": {"bogus": 1}}, {})
    with pytest.raises(ConfigError):
        resolve_config("erm-gap-cantor1", {"scenario": "dims-table"}, {})
    with pytest.raises(ConfigError):
        resolve_config("nope", {}, {})


def test_graph_and_orient_commands(capsys):
    assert main(["graph", "--class", "boolean:n=2", "--points", "0,1"]) == 0
    g = json.loads(capsys.readouterr().out)
    assert len(g["vertices"]) == 4 and len(g["edges"]) == 4
    assert g["max_avg_degree"]["value"] == "2"
    assert main(["orient", "--class", "boolean:n=3", "--points", "0,1,2"]) == 0
    assert json.loads(capsys.readouterr().out)["max_out_degree"] == 2
    assert main(["graph", "--class", "boolean:n=2", "--points", "0,9"]) == 2


def test_dims_command(capsys):
    assert main(["dims", "--class", "first-cantor:n=3"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert (d["Ndim"], d["dim"], d["Gdim"]) == (1, 1, 3)
    assert main(["dims", "boolean:n=2"]) == 0
    assert json.loads(capsys.readouterr().out)["dim"] == 2
    assert main(["dims"]) == 2


def test_learn_command(capsys):
    assert main(["learn", "--class", "boolean:n=2", "--m-grid", "1,2", "--trials", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("experiment,class,learner,m,trials") and len(lines) == 3


def test_verify_command(capsys):
    assert main(["verify", "--n-max", "3", "--t-max", "2"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 10


def test_failing_scenario_sets_exit_code(tmp_path, monkeypatch):
    from oneinc import scenarios as sc
    spec = SCENARIOS["dims-table"]
    monkeypatch.setitem(SCENARIOS, "dims-table", spec.__class__(
        spec.name, spec.description, spec.defaults, lambda cfg: sc.ScenarioResult({}, [], False)))
    assert main(["run", "dims-table", "--out", str(tmp_path)]) == 1
