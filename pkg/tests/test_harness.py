import json
import math

import pytest

from qerrdist import harness as hs
from qerrdist import scenarios as sc
from qerrdist.errors import ConfigError, NonConvergenceError


def _main(*argv):
    return hs.main([str(a) for a in argv])


def test_list_shows_every_scenario(capsys):
    assert _main("list") == hs.EXIT_OK
    out = capsys.readouterr().out
    for info in sc.SCENARIOS.values():
        assert info.id in out and info.anchor in out


def test_run_example7_bundle(tmp_path, capsys):
    assert _main("run", "example7", "--dim", 60, "--out", tmp_path) == hs.EXIT_OK
    csvs = sorted(p.name for p in tmp_path.glob("*.csv"))
    assert csvs == ["example7__pointer.csv", "example7__position.csv"]
    bundle = json.loads((tmp_path / "bundle.json").read_text())
    assert set(bundle) == {"manifest", "scenarios"}
    (scen,) = bundle["scenarios"]
    assert scen["id"] == "example7" and scen["status"] == "PASS"
    assert {"name", "value", "unit", "tolerance", "status"} <= set(scen["quantities"][0])
    assert {"claim_ref", "status", "slack"} <= set(scen["assertions"][0])
    assert bundle["manifest"]["config"]["scenario"] == "example7"
    assert bundle["manifest"]["config"]["dim"] == 60
    head = (tmp_path / "example7__pointer.csv").read_text().splitlines()
    assert head[0] == "value,probability" and len(head[1].split(",")) == 2


def test_bundle_floats_round_trip(scenario, tmp_path):
    res = scenario("example7")
    hs.write_bundle([res], hs.RunConfig(), tmp_path)
    text = (tmp_path / "bundle.json").read_text()
    data = json.loads(text)
    values = [q["value"] for q in data["scenarios"][0]["quantities"]]
    assert values == [q.value for q in res.quantities]
    weights = data["scenarios"][0]["distributions"][1]["weights"]
    assert weights == [float(w) for w in res.distributions[1].weights]
    again = json.loads(json.dumps(data))
    assert again == data


def test_run_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _main("run", "classical", "--out", a, "--seed", 5) == hs.EXIT_OK
    assert _main("run", "classical", "--out", b, "--seed", 5) == hs.EXIT_OK
    assert (a / "bundle.json").read_bytes() == (b / "bundle.json").read_bytes()


def test_empty_bundle_is_manifest_only(tmp_path):
    bundle = hs.write_bundle([], hs.RunConfig(), tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bundle.json"]
    data = json.loads((tmp_path / "bundle.json").read_text())
    assert data["scenarios"] == [] and data["manifest"]["summary"] == {}
    assert bundle.manifest["content_hash"] == data["manifest"]["content_hash"]


def test_manifest_hash_tracks_content(scenario, tmp_path):
    res = scenario("example7")
    m1 = hs.write_bundle([res], hs.RunConfig(), tmp_path / "1").manifest
    m2 = hs.write_bundle([res], hs.RunConfig(formats=("json",)), tmp_path / "2").manifest
    assert m1["content_hash"] != m2["content_hash"]
    assert set(m1["files"]) == {"bundle.json#scenarios", "example7__pointer.csv", "example7__position.csv"}


def test_non_finite_numbers_serialise():
    assert hs._num(math.nan) == "NaN" and hs._num(-math.inf) == "-Infinity"
    assert hs._num(0.1) == 0.1


def test_failing_scenario_exit_code(tmp_path):
    assert _main("run", "spin", "--out", tmp_path) == hs.EXIT_FAIL


def test_dim_precondition_is_config_error(tmp_path, capsys):
    assert _main("run", "example7", "--dim", 30, "--out", tmp_path) == hs.EXIT_CONFIG
    assert "dim" in capsys.readouterr().err


def test_unknown_scenario(tmp_path):
    assert _main("run", "nope", "--out", tmp_path) == hs.EXIT_CONFIG


def test_non_convergence_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise NonConvergenceError("values drift")

    info = sc.SCENARIOS["example7"]
    monkeypatch.setitem(sc.SCENARIOS, "example7", sc.ScenarioInfo(info.id, info.title, info.anchor, boom))
    assert _main("run", "example7", "--out", tmp_path) == hs.EXIT_NUMERIC


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"units": {"hbar": 1.0, "planck": 2.0}}))
    assert _main("run", "example7", "--config", cfg, "--out", tmp_path) == hs.EXIT_CONFIG
    assert "units: unknown key(s) planck" in capsys.readouterr().err


def test_config_parse_error_location(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "seed": 3,\n  "dim": ,\n}\n')
    assert _main("list", "--config", cfg) == hs.EXIT_CONFIG
    assert f"{cfg}:3:" in capsys.readouterr().err


@pytest.mark.parametrize("data, path", [
    ({"dim": -4}, "dim"),
    ({"units": {"mass": 0}}, "units.mass"),
    ({"region": {"grid": 2.5}}, "region.grid"),
    ({"optimizer": {"restarts": 0}}, "optimizer"),
    ({"formats": ["xml"]}, "formats"),
    ({"seed": -1}, "seed"),
    ({"scenario": "bogus"}, "scenario"),
    ([], "config"),
])
def test_config_validation(data, path):
    with pytest.raises(ConfigError, match=path):
        hs.RunConfig.from_dict(data)


def test_config_round_trip_and_overrides():
    cfg = hs.RunConfig.from_dict({"dim": 50, "seed": 2, "optimizer": {"restarts": 2},
                                  "formats": ["json"]})
    assert cfg.optimizer_config().restarts == 2
    cfg = cfg.with_overrides(seed=9, formats="json,csv", dim=None)
    assert cfg.seed == 9 and cfg.dim == 50 and cfg.formats == ("json", "csv")
    assert "out" not in cfg.echo()


def test_fig1_writes_two_csvs(tmp_path, capsys):
    assert _main("fig1", "--out", tmp_path) == hs.EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig1_pointer.csv", "fig1_position.csv"]
    rows = (tmp_path / "fig1_pointer.csv").read_text().splitlines()[1:]
    total = sum(float(r.split(",")[1]) for r in rows)
    assert total == pytest.approx(1.0, abs=1e-12)
