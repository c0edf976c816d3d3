import json

import pytest

from freefield import cli
from freefield.harness import (
    DEFAULT_BOUNDS, ScenarioError, build_family, expand_candidates,
    report_to_json, resolve_scenario, run_scenario,
)


def tiny_affine(**overrides):
    raw = {
        "system": {"bosonic": [1, 1]},
        "group": {"kind": "gl", "rank": 1, "side": "right"},
        "tasks": [{"task": "verify_affine", "form": "trace",
                   "expect_level": "-1"}],
    }
    raw.update(overrides)
    return raw


def test_resolve_fills_defaults():
    res = resolve_scenario(tiny_affine())
    assert res["bounds"] == DEFAULT_BOUNDS
    assert res["system"]["fermionic"] is None
    assert res["group"]["family"] == "theta"


def test_resolve_rejects_bad_configs():
    with pytest.raises(ScenarioError):
        resolve_scenario([])
    with pytest.raises(ScenarioError):
        resolve_scenario({"system": {}, "tasks": ["property_suite"]})
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(system={"bosonic": [0, 1]}))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(tasks=[]))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(tasks=["frobnicate"]))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(bounds={"max_depth": 3}))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(bounds={"samples": 0}))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(group={"kind": "sl"}))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(group={"kind": "sl", "rank": 2,
                                            "side": "up"}))
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(
            tasks=[{"task": "verify_affine",
                    "family": {"kind": "sl", "rank": 2, "family": "wrong"}}]))


def test_unknown_task_fails_before_compute():
    # resolution must reject the config even when an earlier task would run
    raw = tiny_affine(tasks=["property_suite", "frobnicate"])
    with pytest.raises(ScenarioError):
        run_scenario(raw)


def test_run_scenario_pass_and_report_shape():
    report = run_scenario(tiny_affine())
    assert report["all_pass"] is True
    (entry,) = report["tasks"]
    assert entry["task"] == "verify_affine" and entry["status"] == "pass"
    assert entry["detail"]["level"] == "-1"
    assert report["tool"]["name"] == "freefield"
    assert "seconds" not in entry


def test_run_scenario_timings_flag():
    report = run_scenario(tiny_affine(), timings=True)
    assert "seconds" in report["tasks"][0]


def test_reports_byte_identical():
    a = report_to_json(run_scenario(tiny_affine()))
    b = report_to_json(run_scenario(tiny_affine()))
    assert a == b
    assert a.endswith("\n")
    json.loads(a)


def test_failing_candidate_gives_witness():
    raw = {
        "system": {"bosonic": [2, 2]},
        "group": {"kind": "sl", "rank": 2, "side": "left"},
        "tasks": [{"task": "commutant_check", "candidates": [
            {"kind": "state", "text": "1 * g[b1,beta,1](-1)", "label": "bad"},
            {"kind": "det", "side": "beta", "indices": [1, 2],
             "label": "good"},
        ]}],
    }
    report = run_scenario(raw)
    assert report["all_pass"] is False
    cands = report["tasks"][0]["detail"]["candidates"]
    by_label = {c["label"]: c for c in cands}
    assert by_label["good"]["ok"] is True
    bad = by_label["bad"]
    assert bad["ok"] is False
    assert set(bad["witness"]) == {"current", "n", "product"}


def test_task_error_does_not_stop_run():
    # normalized form of the abelian so_2 target is undefined: the first
    # task errors, the second still runs and passes
    raw = {
        "system": {"bosonic": [4, 1]},
        "group": {"kind": "sp", "rank": 4, "side": "left", "family": "quad"},
        "tasks": [
            {"task": "verify_affine", "form": "normalized"},
            {"task": "verify_affine", "form": "trace", "expect_level": "-2"},
        ],
    }
    report = run_scenario(raw)
    assert [t["status"] for t in report["tasks"]] == ["error", "pass"]
    assert report["all_pass"] is False
    assert "error" in report["tasks"][0]["detail"]


def test_expand_candidates_errors():
    from freefield.constructions import build_system
    sys = build_system(bosonic=(2, 2))
    with pytest.raises(ScenarioError):
        list(expand_candidates(sys, None))
    with pytest.raises(ScenarioError):
        list(expand_candidates(sys, [{"kind": "nonsense"}]))


def test_build_family_requires_group():
    from freefield.constructions import build_system
    sys = build_system(bosonic=(2, 2))
    with pytest.raises(ScenarioError):
        build_family(sys, None)


def test_family_alias_spellings():
    res = resolve_scenario(tiny_affine(
        group={"kind": "so", "rank": 3, "family": "quad_so"}))
    assert res["group"]["family"] == "quad"
    res = resolve_scenario(tiny_affine(
        group={"kind": "glsuper", "rank": [1, 1], "family": "mixed_glrs"}))
    assert res["group"]["family"] == "mixed_psi"
    with pytest.raises(ScenarioError):
        resolve_scenario(tiny_affine(
            group={"kind": "sl", "rank": 3, "family": "quad_so"}))


def test_charge_e_and_bc_det_candidates():
    raw = {
        "system": {"bosonic": [2, 2]},
        "group": {"kind": "sl", "rank": 2, "side": "left"},
        "tasks": [{"task": "commutant_check",
                   "candidates": [{"kind": "charge_e"}]}],
    }
    report = run_scenario(raw)
    assert report["all_pass"], report["tasks"]
    raw = {
        "system": {"fermionic": [2, 2]},
        "group": {"kind": "sl", "rank": 2, "side": "left"},
        "tasks": [{"task": "commutant_check",
                   "candidates": [{"kind": "bc_det", "which": "D"}]}],
    }
    report = run_scenario(raw)
    assert report["all_pass"], report["tasks"]
    assert len(report["tasks"][0]["detail"]["candidates"]) == 3


def test_cap_env_var(monkeypatch):
    raw = {
        "system": {"bosonic": [2, 1]},
        "group": {"kind": "gl", "rank": 2, "side": "left"},
        "tasks": [{"task": "jet_compare", "mode": "state_dims",
                   "max_weight": 2}],
    }
    monkeypatch.setenv("FREEFIELD_CAP", "2")
    report = run_scenario(raw)
    assert report["tasks"][0]["status"] == "error"
    monkeypatch.setenv("FREEFIELD_CAP", "not-a-number")
    with pytest.raises(ScenarioError):
        run_scenario(raw)
    monkeypatch.delenv("FREEFIELD_CAP")
    assert run_scenario(raw)["all_pass"]
    # an explicit task cap wins over the environment
    monkeypatch.setenv("FREEFIELD_CAP", "2")
    raw["tasks"][0]["cap"] = 100000
    assert run_scenario(raw)["all_pass"]


def test_scenario_bounds_do_not_leak_between_runs():
    raw = tiny_affine(bounds={"samples": 5})
    res = resolve_scenario(raw)
    assert res["bounds"]["samples"] == 5
    assert DEFAULT_BOUNDS["samples"] == 200


def write_scenario(tmp_path, raw, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


def test_cli_pass_writes_report(tmp_path, capsys):
    spath = write_scenario(tmp_path, tiny_affine())
    rpath = tmp_path / "report.json"
    code = cli.main(["verify", str(spath), "--report", str(rpath)])
    assert code == 0
    report = json.loads(rpath.read_text(encoding="utf-8"))
    assert report["all_pass"] is True
    err = capsys.readouterr().err
    assert "[0] verify_affine: PASS" in err


def test_cli_report_to_stdout_by_default(tmp_path, capsys):
    spath = write_scenario(tmp_path, tiny_affine())
    code = cli.main(["verify", str(spath)])
    assert code == 0
    out = capsys.readouterr().out
    assert json.loads(out)["all_pass"] is True


def test_cli_output_field_in_scenario(tmp_path):
    target = tmp_path / "out.json"
    spath = write_scenario(tmp_path, tiny_affine(output=str(target)))
    assert cli.main(["verify", str(spath)]) == 0
    assert json.loads(target.read_text(encoding="utf-8"))["all_pass"]


def test_cli_exit_one_on_failure(tmp_path):
    raw = tiny_affine()
    raw["tasks"][0]["expect_level"] = "7"
    spath = write_scenario(tmp_path, raw)
    rpath = tmp_path / "report.json"
    assert cli.main(["verify", str(spath), "--report", str(rpath)]) == 1
    report = json.loads(rpath.read_text(encoding="utf-8"))
    assert report["tasks"][0]["status"] == "fail"


def test_cli_exit_two_on_config_error(tmp_path, capsys):
    spath = write_scenario(tmp_path, tiny_affine(tasks=["frobnicate"]))
    assert cli.main(["verify", str(spath)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert cli.main(["verify", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]", encoding="utf-8")
    assert cli.main(["verify", str(bad)]) == 2


def test_cli_thread_count_does_not_change_bytes(tmp_path):
    spath = write_scenario(tmp_path, tiny_affine())
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert cli.main(["verify", str(spath), "--report", str(r1)]) == 0
    assert cli.main(["verify", str(spath), "--report", str(r2),
                     "--threads", "4"]) == 0
    assert r1.read_bytes() == r2.read_bytes()


def test_cli_bound_overrides(tmp_path):
    raw = {
        "system": {"bosonic": [1, 1]},
        "tasks": [{"task": "property_suite", "samples": 3}],
    }
    spath = write_scenario(tmp_path, raw)
    rpath = tmp_path / "report.json"
    assert cli.main(["verify", str(spath), "--report", str(rpath),
                     "--seed", "5", "--max-weight", "2"]) == 0
    report = json.loads(rpath.read_text(encoding="utf-8"))
    assert report["scenario"]["bounds"]["seed"] == 5
    assert report["scenario"]["bounds"]["max_weight"] == 2


def test_bundled_scenarios_resolve():
    from importlib.resources import files
    names = sorted(p.name for p in (files("freefield") / "scenarios").iterdir()
                   if p.name.endswith(".json"))
    assert len(names) == 25
    for name in names:
        raw = json.loads((files("freefield") / "scenarios" / name)
                         .read_text(encoding="utf-8"))
        resolve_scenario(raw)


def test_bundled_property_scenario_small_sample_run():
    from importlib.resources import files
    raw = json.loads((files("freefield") / "scenarios" /
                      "engine_properties.json").read_text(encoding="utf-8"))
    raw["bounds"] = {"samples": 10}
    report = run_scenario(raw)
    assert report["all_pass"], report["tasks"]
