from __future__ import annotations

import json

import pytest

from leaderfp.cli import main
from leaderfp.errors import ConfigError
from leaderfp.runner import ExperimentConfig, run


def _report(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_list(capsys):
    assert main(["list"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 7
    assert main(["list", "--match", "kirk"]) == 0
    assert capsys.readouterr().out.split()[0] == "kirk_varying"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["list", "--bogus"])
    assert info.value.code == 2
    assert main(["classify", "--instance", "nope"]) == 2


def test_iterate_counterexample(capsys):
    code, rep = _report(capsys, ["iterate", "--instance", "jachymski_counterexample", "--x0", "1"])
    assert code == 0 and rep["schema_version"] == 1
    r = rep["tasks"][0]["result"]["runs"][0]["report"]
    assert r["converged"] and r["limit_estimate"] == [0.0]
    assert r["residual"] == 1.0 and r["flag"] == "limit is not a fixed point"


def test_iterate_csv(capsys):
    assert main(["iterate", "--instance", "banach_half", "--x0", "1", "--format", "csv"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "n,x1,step_distance,distance_to_z"
    assert rows[1] == "0,1.0,0.5,1.0"


def test_certify_banach(capsys):
    code, rep = _report(capsys, ["certify", "--instance", "banach_half", "--epsilon", "0.1", "--k-radius", "1"])
    res = rep["tasks"][0]["result"]
    assert code == 0
    assert res["bound"]["m"] == 162 and res["verify"]["worst_index"] == 4 and res["verify"]["passed"]
    assert res["uniform"]["composed_bound"] == 163


def test_classify_banach(capsys):
    code, rep = _report(capsys, ["classify", "--instance", "banach_half", "--samples", "2000"])
    assert code == 0
    verdicts = {k: v["verdict"] for k, v in rep["tasks"][0]["result"]["classes"].items()}
    assert set(verdicts.values()) == {"certificate"}


def test_regression_exit_code(tmp_path, capsys):
    # declared ground truth that the sample contradicts
    inline = get_inline()
    inline["ground_truth"]["expected_classes"] = ["Banach"]
    cfg = {"instance": inline, "tasks": [{"kind": "classify", "classes": ["Banach"]}],
           "sampling": {"seed": 0, "count": 500}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "-c", str(path)]) == 1


def get_inline():
    return {
        "name": "shift",
        "space": {"dimension": 1, "domain": [["-inf", "inf"]]},
        "map": ["x1 + 1"],
        "banach_q": 0.9,
        "sample_region": [[-5, 5]],
        "ground_truth": {"fixed_point": "none"},
    }


def test_run_config_and_profile(tmp_path, capsys):
    cfg = {
        "instance": "banach_half",
        "sampling": {"seed": 7, "count": 1000},
        "tasks": [{"kind": "axioms"}, {"kind": "profile", "epsilon": 0.1, "K": 1.0},
                  {"kind": "iterate", "x0": [1.0, -2.0]}],
        "output": {"format": "json", "path": str(tmp_path / "out.json")},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "-c", str(path)]) == 0
    rep = json.loads((tmp_path / "out.json").read_text())
    assert rep["config"] == cfg and rep["seed"] == 7
    assert [t["status"] for t in rep["tasks"]] == ["ok", "ok", "ok"]
    assert rep["tasks"][1]["result"]["profile"]["max_index"] <= 4
    assert len(rep["tasks"][2]["result"]["runs"]) == 2


def test_run_csv_writes_orbits(tmp_path):
    cfg = {"instance": "banach_half", "sampling": {"count": 100},
           "tasks": [{"kind": "iterate", "x0": [1.0]}, {"kind": "axioms"}],
           "output": {"format": "csv", "path": str(tmp_path / "rep")}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "-c", str(path)]) == 0
    assert (tmp_path / "rep.json").exists()
    assert (tmp_path / "rep_task0.csv").read_text().startswith("n,x1,")


@pytest.mark.parametrize("bad", [
    {"instance": "banach_half", "tasks": []},
    {"instance": "banach_half", "tasks": [{"kind": "dance"}]},
    {"instance": "banach_half", "tasks": [{"kind": "certify", "epsilon": -1}]},
    {"instance": "banach_half", "tasks": [{"kind": "classify", "r_max": 1.5}]},
    {"instance": "banach_half", "tasks": [{"kind": "iterate", "typo": 1}]},
    {"instance": "banach_half", "tasks": [{"kind": "axioms"}], "sampling": {"count": 0}},
    {"tasks": [{"kind": "axioms"}]},
])
def test_invalid_configs(bad, tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(bad))
    assert main(["run", "-c", str(path)]) == 2


def test_partial_failure_continues():
    rep = run({"instance": "translation", "sampling": {"count": 200},
               "tasks": [{"kind": "certify"}, {"kind": "iterate", "max_iter": 100}]})
    assert [t["status"] for t in rep.payload["tasks"]] == ["error", "ok"]
    assert rep.exit_code == 1


def test_same_seed_same_payload():
    cfg = {"instance": "kirk_varying", "sampling": {"seed": 3, "count": 2000},
           "tasks": [{"kind": "classify", "epsilons": [0.1, 0.5]}, {"kind": "certify"}]}
    a, b = run(cfg), run(cfg)
    assert a.payload_json() == b.payload_json()
    c = run({**cfg, "sampling": {"seed": 4, "count": 2000}})
    assert c.payload_json() != a.payload_json()
