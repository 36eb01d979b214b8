import json
import subprocess
import sys
from fractions import Fraction

import pytest

from coarsegeom import cli
from coarsegeom.cli import main
from coarsegeom.core_metrics import Root
from coarsegeom.scenarios import (
    Check,
    InvalidScenario,
    Scenario,
    dumps,
    get_scenario,
    jsonable,
    list_scenarios,
    run,
    scenario_from_mapping,
    verdict,
)

REQUIRED = {
    "svarc-milnor:z2-plane",
    "svarc-milnor:z-line",
    "lemma7:trivial-action",
    "lemma7:dense-orbit",
    "two-metrics:dsum2",
    "m0-z2",
    "a-vs-m0",
    "decompose:symchain",
    "decompose:cyclic-tower",
}


def test_list(capsys):
    assert main(["list"]) == 0
    names = {line.split()[0] for line in capsys.readouterr().out.splitlines()}
    assert len(names) >= 9 and REQUIRED <= names


def test_unknown_scenario_exits_2(capsys):
    assert main(["run", "no-such-scenario"]) == 2
    assert "invalid-scenario" in capsys.readouterr().err


def test_missing_scenario_exits_2():
    assert main(["run"]) == 2


def test_param_cap_exits_2(capsys):
    assert main(["run", "m0-z2", "--support-cap", "40"]) == 2
    assert main(["run", "svarc-milnor:z-line", "--horizon", "0"]) == 2


def test_run_reports_json(capsys):
    assert main(["run", "a-vs-m0"]) == 0
    out = capsys.readouterr()
    report = json.loads(out.out)
    assert report["summary"] == {"pass": 1, "fail": 0, "not-applicable": 0}
    (check,) = report["checks"]
    assert check["payload"]["bound"] == "26/27"
    assert "horizon" in report["horizon_statement"]
    assert "pass" in out.err


def test_overrides_are_echoed(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "svarc-milnor:z-line", "--horizon", "61", "--radius", "1/3", "--out", str(out)]) == 0
    params = json.loads(out.read_text())["scenario"]["params"]
    assert params["horizon"] == "61" and params["radius"] == "1/3"


def test_scenario_file_with_empty_check_list(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"scenario": "m0-z2", "params": {"support_cap": 4}, "checks": []}))
    assert main(["run", "--file", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["checks"] == [] and report["summary"]["pass"] == 0


def test_scenario_file_selects_checks(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"scenario": "axioms", "checks": ["planted-counterexamples"]}))
    assert main(["run", "--file", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [c["name"] for c in report["checks"]] == ["planted-counterexamples"]


@pytest.mark.parametrize(
    "data",
    [
        {"params": {}},
        {"scenario": "m0-z2", "bogus": 1},
        {"scenario": "m0-z2", "params": {"nope": 1}},
        {"scenario": "m0-z2", "checks": ["no-such-check"]},
        {"scenario": "m0-z2", "checks": "flip-certificate"},
        [],
    ],
)
def test_invalid_mappings(data):
    with pytest.raises(InvalidScenario):
        scenario_from_mapping(data)


def test_bad_json_file_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--file", str(path)]) == 2


def test_failing_and_crashing_checks_exit_1(monkeypatch, capsys):
    def boom(p):
        raise RuntimeError("planted")

    planted = Scenario("planted", "", {}, [Check("no", "", lambda p: verdict(False)), Check("boom", "", boom)])
    monkeypatch.setattr(cli, "get_scenario", lambda name: planted)
    assert main(["run", "planted"]) == 1
    report = json.loads(capsys.readouterr().out)
    assert report["summary"]["fail"] == 2
    assert report["checks"][1]["reason"] == "RuntimeError: planted"


def test_jsonable_exact_values():
    assert jsonable({"a": Fraction(1, 2), "b": 3, "c": Root(2), "d": (1, 2)}) == {"a": "1/2", "b": "3", "c": "sqrt(2)", "d": ["1", "2"]}


def test_parallel_matches_sequential():
    sc = get_scenario("svarc-milnor:z-line")
    assert dumps(run(sc)) == dumps(run(sc, parallel=True))


def test_every_builtin_passes():
    for name, _ in list_scenarios():
        report = run(get_scenario(name))
        assert report["summary"]["fail"] == 0, (name, [c for c in report["checks"] if c["verdict"] == "fail"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coarsegeom", "list"], capture_output=True, text=True, check=True)
    assert "m0-z2" in proc.stdout
