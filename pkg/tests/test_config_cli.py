import json
import os

import numpy as np
import pytest

from torus_holonomy import ConfigError
from torus_holonomy.cli import main
from torus_holonomy.config import parse_config
from torus_holonomy.harness import run_classical, run_holonomy, run_spectrum


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def _base_model(m=2, controlled=(0,), offsets=(0.0, 0.0), truncation=2):
    return {
        "m": m,
        "controlled": list(controlled),
        "offsets": list(offsets),
        "truncation": truncation,
    }


def _spectrum_config(offsets=(0.0, 0.0)):
    return {
        "schema": 1,
        "model": _base_model(offsets=offsets),
        "hamiltonian": {"terms": [{"exponents": [0, 1], "coefficient": 1.0}]},
    }


def _holonomy_config(**run):
    return {
        "schema": 1,
        "model": _base_model(truncation=3),
        "connection": {
            "parameter_dim": 2,
            "components": [
                {
                    "axis": 0,
                    "parameter": 0,
                    "fourier": [
                        {"shift": [0, 0], "poly": [{"exponents": [0, 0], "coefficient": 0.3},
                                                    {"exponents": [0, 1], "coefficient": 0.2}]}
                    ],
                },
                {
                    "axis": 0,
                    "parameter": 1,
                    "fourier": [
                        {"shift": [0, 0], "poly": [{"exponents": [1, 0], "coefficient": -0.15}]}
                    ],
                },
            ],
        },
        "curve": {"type": "circle", "center": [0.0, 0.0], "radius": 1.0, "duration": 1.0},
        "run": {"steps": 400, **run},
    }


# --- config parsing -------------------------------------------------------------


def test_parse_valid_config():
    config = parse_config(_spectrum_config())
    assert config.model.m == 2
    assert config.hamiltonian is not None
    assert config.run.steps == 1000


def test_parse_rejects_wrong_schema_version():
    payload = _spectrum_config()
    payload["schema"] = 99
    with pytest.raises(ConfigError):
        parse_config(payload)


def test_parse_rejects_out_of_range_axis():
    payload = _spectrum_config()
    payload["model"]["controlled"] = [5]
    with pytest.raises(ConfigError, match="out of range"):
        parse_config(payload)


def test_parse_rejects_bad_exponent_length():
    payload = _spectrum_config()
    payload["hamiltonian"]["terms"][0]["exponents"] = [1]
    with pytest.raises(ConfigError, match="expected length 2"):
        parse_config(payload)


def test_parse_connection_auto_mirrors_reality():
    payload = _holonomy_config()
    payload["connection"]["components"][0]["fourier"] = [
        {"shift": [1, 0], "poly": [{"exponents": [0, 0], "coefficient": [0.1, 0.05]}]}
    ]
    config = parse_config(payload)
    fourier = config.connection.components[(0, 0)]
    assert fourier[(1, 0)].coefficients[(0, 0)] == 0.1 + 0.05j
    assert fourier[(-1, 0)].coefficients[(0, 0)] == 0.1 - 0.05j


def test_parse_rejects_duplicate_shift():
    payload = _holonomy_config()
    payload["connection"]["components"][0]["fourier"] = [
        {"shift": [1, 0], "poly": [{"exponents": [0, 0], "coefficient": 0.1}]},
        {"shift": [-1, 0], "poly": [{"exponents": [0, 0], "coefficient": 0.1}]},
    ]
    with pytest.raises(ConfigError):
        parse_config(payload)


def test_parse_curve_mismatch():
    payload = _holonomy_config()
    payload["curve"] = {"type": "waypoints", "points": [[0.0], [1.0]], "duration": 1.0}
    with pytest.raises(ConfigError, match="parameter_dim"):
        parse_config(payload)


# --- spectrum driver --------------------------------------------------------------


def test_spectrum_linear_hamiltonian_levels():
    # H = I_2 at zero offset, N=2: levels -2..2 each carrying 5 modes
    payload = run_spectrum(parse_config(_spectrum_config()))
    values = [level["value"] for level in payload["levels"]]
    assert values == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert all(level["multiplicity"] == 5 for level in payload["levels"])
    assert payload["levels"][0]["labels"] == [[-2]]


def test_spectrum_zero_hamiltonian_single_level():
    config = parse_config(
        {
            "schema": 1,
            "model": _base_model(),
            "hamiltonian": {"terms": []},
        }
    )
    payload = run_spectrum(config)
    assert len(payload["levels"]) == 1
    assert payload["levels"][0]["value"] == 0.0
    assert payload["levels"][0]["multiplicity"] == 25
    assert len(payload["levels"][0]["labels"]) == 5


def test_spectrum_half_offset_levels():
    payload = run_spectrum(parse_config(_spectrum_config(offsets=(0.0, 0.5))))
    values = [level["value"] for level in payload["levels"]]
    assert values == [-2.5, -1.5, -0.5, 0.5, 1.5]


def test_spectrum_requires_hamiltonian():
    config = parse_config({"schema": 1, "model": _base_model()})
    with pytest.raises(ConfigError):
        run_spectrum(config)


# --- classical driver ---------------------------------------------------------------


def test_classical_zero_connection_constant_actions(tmp_path):
    config = parse_config(
        {
            "schema": 1,
            "model": _base_model(),
            "hamiltonian": {"terms": [{"exponents": [0, 2], "coefficient": 0.5}]},
            "curve": {"type": "waypoints", "points": [[0.0], [1.0]], "duration": 1.0},
            "initial": {"actions": [0.4, 1.2], "angles": [0.0, 0.3]},
            "run": {"steps": 32},
        }
    )
    csv_text = run_classical(config)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "t,I_1,I_2,phi_1,phi_2"
    assert len(lines) == 34
    for line in lines[1:]:
        cells = line.split(",")
        assert float(cells[1]) == 0.4
        assert float(cells[2]) == 1.2


# --- holonomy driver -----------------------------------------------------------------


def test_holonomy_driver_payloads():
    matrix, diagnostics = run_holonomy(parse_config(_holonomy_config()))
    assert matrix["format"] == "operator"
    assert matrix["shape"] == [7, 7]
    assert diagnostics["steps"] == [400, 200]
    assert diagnostics["unitarity_defect"][0] <= 1e-10
    # angle-independent connection: refinement already converged
    assert diagnostics["refinement_deviation"] <= 1e-8


def test_holonomy_driver_rejects_open_curve():
    payload = _holonomy_config()
    payload["curve"]["turns"] = 0.5
    from torus_holonomy import OpenCurveError

    with pytest.raises(OpenCurveError):
        run_holonomy(parse_config(payload))


# --- CLI ------------------------------------------------------------------------------


def test_cli_spectrum_roundtrip(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _spectrum_config())
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out), "--quiet", "spectrum"]) == 0
    payload = json.loads((out / "spectrum.json").read_text())
    assert payload["format"] == "spectrum"
    assert len(payload["levels"]) == 5


def test_cli_deterministic_outputs(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _holonomy_config())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["--config", cfg, "--out", str(out1), "--quiet", "holonomy"]) == 0
    assert main(["--config", cfg, "--out", str(out2), "--quiet", "holonomy"]) == 0
    assert (out1 / "holonomy.json").read_bytes() == (out2 / "holonomy.json").read_bytes()


def test_cli_malformed_config_exit2_no_partial(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    assert main(["--config", str(bad), "--out", str(out), "--quiet", "classical"]) == 2
    assert not out.exists() or not list(out.iterdir())


def test_cli_schema_violation_exit2(tmp_path):
    payload = _spectrum_config()
    payload["model"]["truncation"] = 0
    cfg = _write(tmp_path / "cfg.json", payload)
    assert main(["--config", cfg, "--out", str(tmp_path), "--quiet", "spectrum"]) == 2
    assert not (tmp_path / "spectrum.json").exists()


def test_cli_open_curve_exit3(tmp_path):
    payload = _holonomy_config()
    payload["curve"]["turns"] = 0.5
    cfg = _write(tmp_path / "cfg.json", payload)
    assert main(["--config", cfg, "--out", str(tmp_path), "--quiet", "holonomy"]) == 3
    assert not (tmp_path / "holonomy.json").exists()


def test_cli_steps_override(tmp_path):
    cfg = _write(tmp_path / "cfg.json", _holonomy_config())
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out), "--quiet", "--steps", "128", "holonomy"]) == 0
    diag = json.loads((out / "holonomy_diagnostics.json").read_text())
    assert diag["steps"] == [128, 64]


def test_cli_verify_quick(tmp_path):
    cfg = _write(
        tmp_path / "cfg.json",
        {"schema": 1, "model": _base_model(), "run": {"battery": "quick", "seed": 7}},
    )
    out = tmp_path / "out"
    code = main(["--config", cfg, "--out", str(out), "--quiet", "verify"])
    payload = json.loads((out / "verify.json").read_text())
    assert code == 0
    assert payload["passed"] is True
    assert payload["profile"] == "quick"
    assert {c["name"] for c in payload["checks"]} >= {"basis_orthonormality", "rk4_observed_order"}


def test_cli_classical_writes_csv(tmp_path):
    payload = {
        "schema": 1,
        "model": _base_model(),
        "hamiltonian": {"terms": [{"exponents": [0, 2], "coefficient": 0.5}]},
        "curve": {"type": "waypoints", "points": [[0.0], [1.0]], "duration": 1.0},
        "initial": {"actions": [0.4, 1.2], "angles": [0.0, 0.3]},
        "run": {"steps": 16},
    }
    cfg = _write(tmp_path / "cfg.json", payload)
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out), "--quiet", "classical"]) == 0
    text = (out / "trajectory.csv").read_text()
    assert text.startswith("t,I_1,I_2,phi_1,phi_2\n")


def test_cli_evolve_writes_matrix_and_diagnostics(tmp_path):
    payload = _holonomy_config()
    payload["model"]["truncation"] = 2
    payload["hamiltonian"] = {"terms": [{"exponents": [0, 2], "coefficient": 0.5}]}
    payload["run"]["steps"] = 64
    cfg = _write(tmp_path / "cfg.json", payload)
    out = tmp_path / "out"
    assert main(["--config", cfg, "--out", str(out), "--quiet", "evolve"]) == 0
    matrix = json.loads((out / "evolution.json").read_text())
    diag = json.loads((out / "evolution_diagnostics.json").read_text())
    assert matrix["format"] == "operator"
    assert matrix["shape"] == [25, 25]
    assert matrix["model"]["truncation"] == 2
    assert len(matrix["entries"]) == 625 and len(matrix["entries"][0]) == 2
    assert diag["route_deviation"] <= 1e-5
    assert diag["factorized_unitarity_defect"] <= 1e-10


def test_operator_payload_roundtrip():
    # entries are row-major [re, im] pairs under a model echo
    from torus_holonomy import TorusModel, action_operator
    from torus_holonomy.serialize import operator_payload

    model = TorusModel(1, (0,), (0.25,), 1)
    payload = operator_payload(action_operator(model, 0))
    assert payload["shape"] == [3, 3]
    assert payload["model"] == {"m": 1, "controlled": [0], "offsets": [0.25], "truncation": 1}
    entries = np.array(payload["entries"]).reshape(3, 3, 2)
    assert np.allclose(entries[..., 1], 0.0)
    assert np.allclose(np.diag(entries[..., 0]), [-1.25, -0.25, 0.75])


def test_environment_thread_cap_respected(monkeypatch):
    from torus_holonomy.verify import _worker_count

    monkeypatch.setenv("TORUS_HOLONOMY_THREADS", "3")
    assert _worker_count(10) == 3
    assert _worker_count(2) == 2
    monkeypatch.setenv("TORUS_HOLONOMY_THREADS", "not-a-number")
    assert _worker_count(10) == 1
    monkeypatch.delenv("TORUS_HOLONOMY_THREADS")
    assert _worker_count(10) == 1
