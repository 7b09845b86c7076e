import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_validate.cli import COLUMNS, emit_csv, main, read_csv
from anneal_validate.config import PRESETS, SUBCOMMANDS, ConfigError, parse_config
from anneal_validate.noise_ensemble import DEFAULT_SEED

SMALL = {
    "spectrum": "grids: {s: {start: 0, stop: 1, num: 3}}\n",
    "pt": "grids: {alpha: [0, 2], beta: [0.05]}\n",
    "evolve": "grids: {omega_tf: [10]}\ntrace: true\n",
    "master": "grids: {omega_tf: [10], kappa2: [0, 1e-3]}\ntrace: true\n",
    "sweep": "params: {omega_tf: 10}\ngrids: {sigma: [0.1]}\nensemble: {n_realizations: 4, resamples: 50}\n",
    "svd": "grids: {omega_tf: [10, 100]}\n",
    "svmc": "grids: {temperature: [1.0]}\nsvmc: {n_sweeps: 50, n_runs: 5, resamples: 50}\n",
    "negativity": "grids: {alpha: [0, 2]}\n",
}


def test_defaults_filled():
    cfg = parse_config("grids: {alpha: [1.0], beta: [0.05]}", "pt")
    assert cfg.params.beta_offset == 0.05
    assert cfg.params.temperature == 1.57
    assert cfg.params.cutoff == pytest.approx(8 * np.pi)
    assert cfg.seed == DEFAULT_SEED


def test_empty_grid_named_in_error():
    with pytest.raises(ConfigError, match="grids.alpha"):
        parse_config("grids: {alpha: [], beta: [0.1]}", "pt")
    with pytest.raises(ConfigError, match="grids.beta"):
        parse_config("grids: {alpha: [1.0]}", "pt")


@pytest.mark.parametrize("text,where", [
    ("bogus: 1", "bogus"),
    ("params: {alpah: 2}", "params"),
    ("grids: {alpha: {start: 0, stop: 1, count: 3}}", "grids.alpha"),
    ("params: {beta_offset: 1.5}", "params.beta_offset"),
    ("grids: {alpha: [1], beta: [2.0]}", r"grids.beta\[0\]"),
    ("grids: {alpha: [1], beta: [0.1]}\nseed: -1", "seed"),
    ("preset: fig9", "preset"),
    ("[1, 2", "YAML"),
])
def test_config_errors(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text, "pt")


def test_grid_forms_and_yaml_exponents():
    cfg = parse_config("grids: {omega_tf: {start: 10, stop: 1e4, num: 4, log: true}}", "svd")
    np.testing.assert_allclose(cfg.grids["omega_tf"], [10, 100, 1000, 10000])
    cfg = parse_config("params: {omega_tf: 1e4}\ngrids: {omega_tf: [1e5]}", "evolve")
    assert cfg.params.omega_tf == 1e4


def test_presets_and_seed_override():
    for name, preset in PRESETS.items():
        cfg = parse_config(f"preset: {name}", preset["subcommand"])
        assert cfg.preset == name
    with pytest.raises(ConfigError, match="subcommand"):
        parse_config("preset: fig1", "svd")
    cfg = parse_config("preset: fig2b\nseed: 5", "sweep", seed=77)
    assert cfg.seed == 77
    assert cfg.params.omega_tf == 1e4
    assert PRESETS["fig2b"]["params"]["beta_offset"] == 0.05


def test_emit_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path, ("a", "b"))
    assert path.read_bytes() == b"a,b\n"


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.tuples(finite, finite), min_size=1, max_size=10))
def test_csv_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "x.csv"
    records = [{"x": a, "y": b} for a, b in values]
    emit_csv(records, path)
    back = read_csv(path)
    assert [(r["x"], r["y"]) for r in back] == [(a, b) for a, b in values]


def test_emit_csv_rejects_mixed_records(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([{"a": 1}, {"b": 2}], tmp_path / "x.csv")
    with pytest.raises(OSError, match="cannot write"):
        emit_csv([{"a": 1}], tmp_path / "missing" / "x.csv")


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_subcommand_golden_columns(tmp_path, sub, capsys):
    cfg = tmp_path / f"{sub}.yaml"
    cfg.write_text(SMALL[sub])
    out = tmp_path / f"{sub}.csv"
    assert main([sub, "--config", str(cfg), "--out", str(out), "--seed", "11"]) == 0
    header = out.read_text().splitlines()[0]
    assert header.split(",") == list(COLUMNS[sub])
    meta = json.loads((tmp_path / f"{sub}.csv.meta.json").read_text())
    assert meta["seed"] == 11
    assert meta["config"]["subcommand"] == sub
    assert "version" in meta
    if sub in ("evolve", "master"):
        trace = tmp_path / f"{sub}.trace.csv"
        assert trace.read_text().splitlines()[0].endswith("s,ground_population")


@pytest.mark.parametrize("sub", ["sweep", "svmc"])
def test_byte_identical_reruns(tmp_path, sub):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL[sub])
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main([sub, "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_error_is_one_json_line(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("params: {betaa: 1}\n")
    code = main(["pt", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
    err = capsys.readouterr().err.strip().splitlines()
    assert code != 0
    assert len(err) == 1
    payload = json.loads(err[0])
    assert payload["error"] == "config"
    assert "betaa" in payload["message"]
    assert main(["pt", "--config", str(tmp_path / "missing.yaml")]) != 0


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "gap.yaml"
    cfg.write_text("params: {alpha: 2.0, beta_offset: 0.0}\ngrids: {s: [0.5]}\n")
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--config", str(cfg), "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert "error" in meta["min_gap"]
