import json
import shutil

import numpy as np
import pytest

from tailrisk.cli import main
from tailrisk.config import (
    PipelineConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    validate_config,
    write_config,
)
from tailrisk.errors import ConfigError
from tailrisk.pipeline import plan, stage_closure, substream

from conftest import FIXTURE_DIR

BASE = {"data": {"A": "a.csv", "B": "b.csv"}, "portfolios": [["A", "B"]]}


def _keys(exc):
    return [k for k, _ in exc.value.problems]


def _write(path, text):
    path.write_text(text)
    return path


# -- configuration -------------------------------------------------------------


def test_empty_file_rejected(tmp_path):
    with pytest.raises(ConfigError) as exc:
        validate_config(_write(tmp_path / "c.toml", ""))
    assert "data" in _keys(exc)


def test_missing_and_invalid_toml(tmp_path):
    with pytest.raises(ConfigError):
        validate_config(tmp_path / "nope.toml")
    with pytest.raises(ConfigError) as exc:
        validate_config(_write(tmp_path / "c.toml", "data = [ unterminated"))
    assert "invalid TOML" in str(exc.value)


def test_defaults_filled():
    cfg = config_from_dict(BASE)
    assert cfg.risk.alphas == [0.01, 0.025, 0.05]
    assert cfg.risk.n_sim == 10_000 and cfg.spillover.horizon == 10
    assert cfg.garch.kinds == ["sGARCH", "eGARCH", "gjrGARCH"]


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({**BASE, "colour": 1, "risk": {"alpha": [0.01]}})
    assert {"colour", "risk.alpha"} <= set(_keys(exc))


def test_level_ordering_error_names_the_pair():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({**BASE, "risk": {"pairs": [[0.05, 0.01]]}})
    assert _keys(exc) == ["risk.pairs[0]"]
    assert "alpha <= beta" in str(exc.value)


def test_all_problems_reported_together():
    raw = {**BASE, "seed": -1, "risk": {"window": 10, "n_sim": 50}, "garch": {"kinds": ["ARCH"]}}
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert {"seed", "risk.window", "risk.n_sim", "garch.kinds"} <= set(_keys(exc))


def test_single_asset_spillover_rejected():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"data": {"A": "a.csv"}})
    assert "spillover.enabled" in _keys(exc)
    cfg = config_from_dict({"data": {"A": "a.csv"}, "spillover": {"enabled": False}})
    assert cfg.assets == ["A"]


def test_mcs_method_needs_its_copula():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({**BASE, "copulas": {"families": ["Frank"]}, "risk": {"methods": ["HS", "MCS-Joe"]}})
    assert "MCS-Joe" in str(exc.value)


def test_round_trip(tmp_path):
    cfg = config_from_dict({**BASE, "seed": 11, "risk": {"pairs": [[0.01, 0.05]]}}, base_dir=tmp_path)
    write_config(cfg, tmp_path / "c.toml")
    back = validate_config(tmp_path / "c.toml")
    assert config_to_dict(back) == config_to_dict(cfg)
    assert dump_config(back) == dump_config(cfg)
    assert back.data_path("A") == tmp_path / "a.csv"


def test_default_config_serializes():
    d = config_to_dict(PipelineConfig(data={"A": "a"}))
    assert "base_dir" not in d


# -- planning ----------------------------------------------------------------------


def test_stage_closure():
    assert stage_closure("risk") == ["ingest", "garch", "marginals", "copulas", "risk"]
    assert stage_closure("spillover") == ["ingest", "spillover"]
    assert stage_closure("diagnostics") == ["ingest", "diagnostics"]


def test_plan_rejects_unknown_stage():
    cfg = config_from_dict(BASE)
    with pytest.raises(ConfigError):
        plan(cfg, "everything")


def test_substreams_are_distinct_and_reproducible():
    a = substream(1, "risk", "A-B").generate_state(4)
    assert np.array_equal(a, substream(1, "risk", "A-B").generate_state(4))
    assert not np.array_equal(a, substream(1, "risk", "A-C").generate_state(4))
    assert not np.array_equal(a, substream(2, "risk", "A-B").generate_state(4))


# -- command line ------------------------------------------------------------------


@pytest.fixture
def fixture_copy(tmp_path):
    for f in FIXTURE_DIR.iterdir():
        shutil.copy(f, tmp_path / f.name)
    return tmp_path / "config.toml"


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path / "c.toml", '[data]\nA = "a.csv"\n')
    assert main(["analyze", "--config", str(cfg)]) == 1
    assert "spillover.enabled" in capsys.readouterr().err
    assert not (tmp_path / "reports").exists()


def test_cli_rejects_negative_seed(fixture_copy):
    assert main(["diagnostics", "--config", str(fixture_copy), "--seed", "-3"]) == 1


def test_cli_data_error_exit_code(tmp_path, capsys):
    _write(tmp_path / "a.csv", "day,price\n2020-01-01,1\n")
    _write(tmp_path / "b.csv", "date,close\n2020-01-01,1\n")
    cfg = _write(tmp_path / "c.toml", '[data]\nA = "a.csv"\nB = "b.csv"\n')
    assert main(["spillover", "--config", str(cfg)]) == 2
    assert "stage ingest" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "reports" / "manifest.json").read_text())
    assert manifest["complete"] is False and manifest["error"]["stage"] == "ingest"


def test_cli_numeric_error_exit_code(tmp_path, capsys):
    dates = np.datetime64("2020-01-01") + np.arange(400)
    _write(tmp_path / "a.csv", "date,close\n" + "".join(f"{d},100.0\n" for d in dates))
    walk = 100 * np.exp(np.cumsum(np.random.default_rng(0).standard_normal(400) * 0.01))
    _write(tmp_path / "b.csv", "date,close\n" + "".join(f"{d},{v:.10f}\n" for d, v in zip(dates, walk)))
    cfg = _write(tmp_path / "c.toml", '[data]\nA = "a.csv"\nB = "b.csv"\n[spillover]\nenabled = false\n')
    assert main(["fit-garch", "--config", str(cfg)]) == 3
    assert "stage garch" in capsys.readouterr().err


def test_cli_stage_isolation(fixture_copy, tmp_path):
    assert main(["spillover", "--config", str(fixture_copy)]) == 0
    out = tmp_path / "reports"
    produced = {p.name for p in out.iterdir()}
    assert produced == {"spillover.csv", "spillover.json", "net_spillover.csv", "manifest.json"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["stages"]) == {"ingest", "spillover"} and manifest["complete"]
    table = json.loads((out / "spillover.json").read_text())
    assert sorted(table["assets"]) == ["CRYPTO_A", "CRYPTO_B", "INDEX_A", "INDEX_B"]
    assert abs(sum(table["net"].values())) < 1e-10


def test_cli_out_override_and_stage_flag(fixture_copy, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["analyze", "--config", str(fixture_copy), "--stage", "diagnostics", "--out", "elsewhere"]) == 0
    out = tmp_path / "elsewhere"
    assert (out / "diagnostics.json").exists()
    report = json.loads((out / "diagnostics.json").read_text())
    assert set(report["assets"]) == {"CRYPTO_A", "CRYPTO_B", "INDEX_A", "INDEX_B"}
    assert not (tmp_path / "reports").exists()


def test_cli_seed_override_changes_only_seeded_outputs(fixture_copy, tmp_path):
    main(["spillover", "--config", str(fixture_copy), "--out", str(tmp_path / "s1"), "--seed", "1"])
    main(["spillover", "--config", str(fixture_copy), "--out", str(tmp_path / "s2"), "--seed", "2"])
    a = (tmp_path / "s1" / "spillover.csv").read_bytes()
    assert a == (tmp_path / "s2" / "spillover.csv").read_bytes()
    m = json.loads((tmp_path / "s2" / "manifest.json").read_text())
    assert m["seed"] == 2
