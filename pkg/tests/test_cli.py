import numpy as np
import pytest
import yaml

from tomocheck.artifacts import read_json, write_json
from tomocheck.cli import _radon_settings, main
from tomocheck.config import load_config
from tomocheck.homodyne_lab import HomodyneDataset
from tomocheck.quantum_state import load_grid
from tomocheck.uncertainty_check import make_report


def make_state_file(out, kind, params="{}"):
    assert main(["--out", str(out), "state", "--kind", kind, "--params", params]) == 0
    return out / "state.json"


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.yml"
    path.write_text(yaml.safe_dump({"bootstrap": {"replicates": 40}, "jobs": 2}))
    return path


def test_state_then_check_passes(tmp_path):
    state = make_state_file(tmp_path, "two_mode_squeezed", '{"r": 0.4}')
    document = read_json(state, "gaussian-state")
    assert document["physical"] is True
    assert main(["--out", str(tmp_path), "check", "--state", str(state)]) == 0
    check = read_json(tmp_path / "check.json", "uncertainty-report")
    assert check["uncertainty"]["verdict"] == "pass"
    assert check["source"]["kind"] == "analytic"


def test_check_output_is_reproducible(tmp_path):
    state = make_state_file(tmp_path, "thermal", '{"nbar": 0.5}')
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(first), "check", "--state", str(state)]) == 0
    assert main(["--out", str(second), "check", "--state", str(state)]) == 0
    assert (first / "check.json").read_bytes() == (second / "check.json").read_bytes()


def test_unphysical_state_is_a_violation(tmp_path):
    path = write_json(tmp_path / "state.json", "gaussian-state", {
        "descriptor": {"kind": "custom", "params": {}},
        "mean": [0.0, 0.0, 0.0, 0.0],
        "cov": (0.2 * np.eye(4)).tolist(),
    })
    assert main(["--out", str(tmp_path), "check", "--state", str(path)]) == 2
    check = read_json(tmp_path / "check.json")
    assert check["uncertainty"]["verdict"] == "violation"


def test_state_from_descriptor_file(tmp_path):
    descriptor = tmp_path / "desc.json"
    descriptor.write_text('{"kind": "thermal", "params": {"nbar": 0.2}}')
    assert main(["--out", str(tmp_path), "state", "--descriptor", str(descriptor)]) == 0


@pytest.mark.parametrize("argv", [
    ["state", "--kind", "banana"],
    ["state", "--kind", "vacuum", "--params", "{not json"],
    ["state", "--descriptor", "does-not-exist.json"],
    ["check", "--state", "missing-state.json"],
    ["check", "--data", "missing-dataset.jsonl"],
    ["sample", "--schedule", "everything"],
])
def test_errors_exit_with_one(tmp_path, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    assert main(["--out", str(tmp_path)] + argv) == 1


def test_bad_config_file(tmp_path):
    config = tmp_path / "bad.yml"
    config.write_text("colour: blue\n")
    assert main(["--config", str(config), "--out", str(tmp_path), "state", "--kind", "vacuum"]) == 1


def test_sample_and_shifted_mode_violation(tmp_path, fast_config):
    state = make_state_file(tmp_path, "vacuum")
    assert main(["--config", str(fast_config), "--seed", "3", "--out", str(tmp_path), "sample",
                 "--state", str(state), "--schedule", "redundant", "--shots", "5000"]) == 0
    dataset = HomodyneDataset.read_jsonl(tmp_path / "dataset.jsonl")
    assert len(dataset) == 18 * 5000
    assert dataset.metadata["seed"] == 3

    faulty = tmp_path / "faulty.jsonl"
    dataset.shifted(4, 0.1).write_jsonl(faulty)
    out = tmp_path / "faulty-check"
    assert main(["--config", str(fast_config), "--out", str(out), "check", "--data", str(faulty)]) == 2
    check = read_json(out / "check.json")
    assert check["uncertainty"]["cross_validation"]["flagged"] is True
    assert check["source"]["kind"] == "empirical"


def test_report_writes_summary(tmp_path):
    state = make_state_file(tmp_path, "two_mode_squeezed", '{"r": 0.4}')
    assert main(["--out", str(tmp_path), "report", "--state", str(state)]) == 0
    document = read_json(tmp_path / "report.json", "full-report")
    assert document["photons"]["n1"]["value"] == pytest.approx(np.sinh(0.4) ** 2)
    assert document["reconstruction"]["series"] == "cumulant"
    summary = (tmp_path / "report.md").read_text()
    assert "Verdict: **pass**" in summary
    assert document["photon_cauchy_schwarz"]["verdict"] == "pass"
    assert "## Photon statistics" in summary
    assert (tmp_path / "tomogram.csv").exists()


def test_report_without_reconstruction(tmp_path):
    state = make_state_file(tmp_path, "vacuum")
    assert main(["--out", str(tmp_path), "report", "--state", str(state), "--skip-reconstruction"]) == 0
    assert read_json(tmp_path / "report.json")["reconstruction"] is None


def test_reconstruct_and_moments(tmp_path):
    state = make_state_file(tmp_path, "squeezed", '{"r": 0.2}')
    assert main(["--out", str(tmp_path), "reconstruct", "--state", str(state)]) == 0
    summary = read_json(tmp_path / "reconstruction.json", "reconstruction")
    assert summary["normalization_drift"] < 1e-3
    assert tmp_path.joinpath("tomogram.csv").read_text().splitlines()[0] == "x1,x2,w"
    assert main(["--out", str(tmp_path), "moments", "--state", str(state)]) == 0
    moments = read_json(tmp_path / "moments.json", "moment-table")
    assert moments["dispersion_P1P2Q1Q2"]["labels"] == ["P1", "P2", "Q1", "Q2"]


def test_photon_violation_sets_report_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr("tomocheck.cli.cauchy_schwarz_report",
                        lambda table, z, tol: make_report("photon Cauchy-Schwarz", -1.0, 0.0, 0.01, z, tol))
    state = make_state_file(tmp_path, "two_mode_squeezed", '{"r": 0.4}')
    assert main(["--out", str(tmp_path), "report", "--state", str(state), "--skip-reconstruction"]) == 2
    document = read_json(tmp_path / "report.json", "full-report")
    assert document["uncertainty"]["verdict"] == "pass"
    assert document["photon_cauchy_schwarz"]["verdict"] == "violation"
    assert document["verdict"] == "violation"
    assert "Verdict: **violation**" in (tmp_path / "report.md").read_text()


def test_grid_and_radon_settings_follow_tomography_config(tmp_path):
    config = tmp_path / "grid.yml"
    config.write_text(yaml.safe_dump({"tomography": {"two_mode_points": 9, "joint_points": 40}}))
    assert main(["--config", str(config), "--out", str(tmp_path), "state", "--kind", "vacuum", "--grid"]) == 0
    assert load_grid(tmp_path / "state_grid.npz").values.shape == (9, 9, 9, 9)
    assert main(["--config", str(config), "--out", str(tmp_path), "state", "--kind", "vacuum", "--grid", "7"]) == 0
    assert load_grid(tmp_path / "state_grid.npz").values.shape == (7, 7, 7, 7)

    settings = _radon_settings(load_config(config))
    assert settings.joint_points == 40
    assert settings.slice_points == 256
