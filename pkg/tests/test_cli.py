import math

import numpy as np
import pandas as pd
import pytest

from main import EXIT_ARTIFACT, EXIT_USAGE, main
from shared.config import OUT_ENV
from shared.storage import FLOAT_FORMAT, RunStore

UNIFORM = ["--scenario", "double_rarefaction", "--amplitude", "0", "--n", "64", "--t-end", "2"]


@pytest.fixture(autouse=True)
def no_env_out(monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)


def simulate(tmp_path, *extra, run_id="uniform"):
    code = main(["simulate", *UNIFORM, "--out", str(tmp_path), "--run-id", run_id, *extra])
    assert code == 0
    return RunStore(tmp_path, run_id)


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    assert lines[0].startswith("double_rarefaction")


def test_missing_scenario_is_usage_error(tmp_path):
    assert main(["simulate", "--n", "64", "--out", str(tmp_path)]) == EXIT_USAGE


def test_simulate_lists_every_snapshot(tmp_path):
    store = simulate(tmp_path)
    manifest = store.read_manifest()
    assert manifest["status"] == "completed"
    assert manifest["stop_reason"] == "horizon_reached"
    listed = store.listed_files("snapshot_files")
    on_disk = sorted(p.relative_to(store.directory).as_posix()
                     for p in (store.directory / "snapshots").glob("*.csv"))
    assert sorted(listed) == on_disk
    assert len(listed) == len(manifest["times"].split(","))
    assert float(manifest["constants.M"]) == pytest.approx(0.0, abs=1e-8)


def test_verify_uniform_run(tmp_path, capsys):
    store = simulate(tmp_path)
    assert main(["verify", str(store.directory)]) == 0
    manifest = store.read_manifest()
    assert manifest["verify.all_pass"] == "true"
    assert set(store.listed_files("report_files")) == {"report.csv", "report.txt", "report.json"}
    report = store.read_frame("report_files", "report.csv", dtype={"verdict_bits": str})
    assert set(report["verdict_bits"]) == {"1-111-1111"}
    assert "ALL PASS" in capsys.readouterr().out


def test_verify_simulates_when_no_run_given(tmp_path):
    assert main(["verify", *UNIFORM, "--out", str(tmp_path), "--run-id", "fresh"]) == 0
    assert RunStore(tmp_path, "fresh").status() == "completed"


def test_verify_rejects_epsilon_outside_range(tmp_path):
    store = simulate(tmp_path)
    assert main(["verify", str(store.directory), "--epsilon", "0.3"]) == EXIT_USAGE
    assert "verify.all_pass" not in store.read_manifest()


def test_verify_missing_run_dir(tmp_path):
    assert main(["verify", str(tmp_path / "nothing")]) == EXIT_ARTIFACT


def test_verify_detects_corrupted_snapshot(tmp_path):
    store = simulate(tmp_path)
    name = store.listed_files("snapshot_files")[-1]
    path = store.directory / name
    frame = pd.read_csv(path)
    frame["u"] = frame["u"] + 5.0 * np.tanh(frame["x"])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)

    assert main(["verify", str(store.directory)]) == 1
    manifest = store.read_manifest()
    assert manifest["verify.all_pass"] == "false"
    assert manifest["verify.first_violation_check"] == "gradient"


def test_trace_uniform_run(tmp_path):
    store = simulate(tmp_path)
    assert main(["trace", str(store.directory), "--seeds", "0,1", "--family", "+"]) == 0
    assert store.listed_files("path_files") == ["paths/path_plus_0.csv", "paths/path_plus_1.csv"]
    path = store.read_frame("path_files", "paths/path_plus_1.csv")
    np.testing.assert_allclose(path["x"], 1.0 + math.sqrt(3.0) * path["t"], atol=1e-9)
    np.testing.assert_allclose(path["carried_value"], 0.0, atol=1e-12)
    np.testing.assert_allclose(path["field_value"], 0.0, atol=1e-12)
    for column in ("k1", "k2", "k1_eps", "k2_eps", "s", "r"):
        assert column in path.columns
    assert store.read_manifest()["trace.carried_quantity"] == "alpha"


def test_trace_with_epsilon_counts_regimes(tmp_path, capsys):
    assert main(["simulate", "--scenario", "entropy_bump", "--n", "128", "--t-end", "1",
                 "--out", str(tmp_path), "--run-id", "bump"]) == 0
    store = RunStore(tmp_path, "bump")
    assert main(["trace", str(store.directory), "--seeds", "-1,0,1", "--epsilon", "0.2"]) == 0
    manifest = store.read_manifest()
    for case in ("case_I", "case_II"):
        assert int(manifest[f"trace.{case}_ok"]) <= int(manifest[f"trace.{case}"])
    assert "regime counts" in capsys.readouterr().out
    path = store.read_frame("path_files", "paths/path_plus_0.csv")
    assert "alpha_eps" in path.columns
    assert np.isfinite(path["k1_eps"]).all()


def test_trace_needs_seeds(tmp_path):
    store = simulate(tmp_path)
    assert main(["trace", str(store.directory)]) == EXIT_USAGE


def test_trace_seed_outside_domain(tmp_path):
    store = simulate(tmp_path)
    assert main(["trace", str(store.directory), "--seeds", "1000"]) == EXIT_USAGE


def test_fit_window_outside_series(tmp_path):
    store = simulate(tmp_path)
    assert main(["fit", str(store.directory), "--window", "5,50"]) == EXIT_USAGE


def test_fit_constant_density(tmp_path, capsys):
    assert main(["simulate", "--scenario", "double_rarefaction", "--amplitude", "0", "--n", "32",
                 "--t-end", "12", "--stride", "1", "--out", str(tmp_path), "--run-id", "long"]) == 0
    store = RunStore(tmp_path, "long")
    assert main(["fit", str(store.directory), "--window", "1,10"]) == 0
    assert float(store.read_manifest()["fit.exponent"]) == pytest.approx(0.0, abs=1e-12)
    assert "exponent" in capsys.readouterr().out


def test_compressive_run_records_blowup(tmp_path):
    assert main(["simulate", "--scenario", "compressive_pulse", "--n", "256", "--t-end", "10",
                 "--out", str(tmp_path), "--run-id", "pulse"]) == 0
    manifest = RunStore(tmp_path, "pulse").read_manifest()
    assert manifest["stop_reason"] == "blowup_suspected"
    assert float(manifest["t_stop"]) < 10.0


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "from_env"))
    assert main(["simulate", *UNIFORM, "--run-id", "env"]) == 0
    assert RunStore(tmp_path / "from_env", "env").exists()


def test_identical_configs_give_identical_files(tmp_path):
    first = simulate(tmp_path, run_id="a")
    second = simulate(tmp_path, run_id="b")
    names = first.listed_files("snapshot_files")
    assert names == second.listed_files("snapshot_files")
    for name in names:
        assert (first.directory / name).read_bytes() == (second.directory / name).read_bytes()


def test_default_run_id_from_config_hash(tmp_path):
    assert main(["simulate", *UNIFORM, "--out", str(tmp_path)]) == 0
    (run_dir,) = [p for p in tmp_path.iterdir() if p.is_dir()]
    assert run_dir.name.startswith("double_rarefaction_")
