import json
import subprocess
import sys

import numpy as np
import pytest

from coinccl.cli import EXIT_CONFIG, EXIT_OK, EXIT_WARN, main
from coinccl.config import config_hash
from coinccl.formats import read_events, read_matrix_binary, read_matrix_text


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


SMALL_MAP = {"energy_min_eV": 1.0, "energy_max_eV": 3.0, "n_energy": 5, "q_max_eV": 10.0, "n_q": 40,
             "energy_fwhm_eV": 0.0, "angle_fwhm_urad": 0.0, "two_route_energies_eV": [2.0],
             "formats": ["text", "binary"]}


def test_physics_map_vacuum(tmp_path):
    doc = {"name": "vac", "slab": {"dielectric": "vacuum"}, "map": SMALL_MAP}
    cfg = write_cfg(tmp_path / "vac.json", doc)
    assert main(["physics-map", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    s = json.loads((tmp_path / "o" / "physics_summary.json").read_text())
    assert s["vacuum_null_passed"] is True
    assert s["max_abs_rho"] == 0.0 and s["config_hash"] == config_hash(doc)
    m, h = read_matrix_text(tmp_path / "o" / "rho.txt")
    assert m.shape == (5, 40) and h["config_hash"] == config_hash(doc)
    arrays, hb = read_matrix_binary(tmp_path / "o" / "rho_tr.bin")
    assert np.all(arrays["rho_tr"] == 0.0)


def test_physics_map_silicon_with_blur(tmp_path):
    doc = {"slab": {"dielectric": "silicon"},
           "map": dict(SMALL_MAP, energy_fwhm_eV=0.5, angle_fwhm_urad=0.5, ridge_energies_eV=[2.0])}
    cfg = write_cfg(tmp_path / "si.json", doc)
    assert main(["physics-map", cfg, "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "physics_summary.json").read_text())
    assert s["two_route_check"][0]["relative_difference"] < 1e-6
    assert (tmp_path / "rho_blurred.txt").exists()
    assert abs(s["ridge"][0]["relative_offset"]) < 0.1


def test_lad_flags_enter_hash(tmp_path):
    out = tmp_path / "lad"
    rc = main(["lad", "example:fig5", "--out", str(out), "--photon-filter", "650:40"])
    assert rc == EXIT_OK
    s = json.loads((out / "lad_coincidence.json").read_text())
    base = json.loads(open(__import__("coinccl").__path__[0] + "/configs/fig5.json").read())
    assert s["config_hash"] != config_hash(base)
    assert s["peak_deflection_urad"] < s["light_line_urad"] * 1.05
    img, hdr = read_matrix_text(out / "lad_coincidence.txt")
    assert hdr["config_hash"] == s["config_hash"] and img.shape == (256, 256)
    assert main(["lad", "example:fig5", "--out", str(out), "--photon-filter", "650"]) == EXIT_CONFIG


def test_lad_empty_window_strict(tmp_path):
    args = ["lad", "example:fig5", "--out", str(tmp_path), "--photon-filter", "200:10"]
    assert main(args) == EXIT_OK
    assert main(args + ["--strict"]) == EXIT_WARN


def test_config_errors_exit_2(tmp_path):
    assert main(["physics-map", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = write_cfg(tmp_path / "bad.json", {"slab": {"thickness_nm": "thin"}})
    assert main(["physics-map", bad]) == EXIT_CONFIG
    assert main(["lad", "example:nope"]) == EXIT_CONFIG
    assert main(["analyze", "example:fig4", str(tmp_path / "noevents"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_simulate_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "example:fig4", "--duration", "0.05", "--out", str(tmp_path / d)]) == EXIT_OK
    for f in ("hits.bin", "photons.bin", "events.json"):
        assert (tmp_path / "a" / "events" / f).read_bytes() == (tmp_path / "b" / "events" / f).read_bytes()
    assert (tmp_path / "a" / "truth.jsonl").read_bytes() == (tmp_path / "b" / "truth.jsonl").read_bytes()
    main(["simulate", "example:fig4", "--duration", "0.05", "--seed", "5", "--out", str(tmp_path / "c")])
    assert (tmp_path / "c" / "events" / "hits.bin").read_bytes() != (tmp_path / "a" / "events" / "hits.bin").read_bytes()
    stream, side = read_events(tmp_path / "a" / "events")
    assert side["duration_s"] == 0.05 and side["n_hits"] == stream.hits.size


def test_zero_duration_no_signal(tmp_path):
    assert main(["simulate", "example:fig4", "--duration", "0", "--format", "csv", "--out", str(tmp_path)]) == 0
    stream, side = read_events(tmp_path / "events")
    assert stream.hits.size == 0 and side["format"] == "csv"
    ev = str(tmp_path / "events")
    assert main(["analyze", "example:fig4", ev, "--out", str(tmp_path / "r")]) == EXIT_OK
    rep = json.loads((tmp_path / "r" / "report.json").read_text())
    assert rep["status"] == "no_signal" and rep["metrics"] is None
    assert main(["analyze", "example:fig4", ev, "--out", str(tmp_path / "r"), "--strict"]) == EXIT_WARN


def test_simulate_then_analyze(tmp_path):
    assert main(["simulate", "example:fig4", "--duration", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["analyze", "example:fig4", str(tmp_path / "events"), "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    _, side = read_events(tmp_path / "events")
    assert rep["status"] == "ok" and rep["events_config_hash"] == side["config_hash"]
    # the duration override is part of the simulated document, so the hashes differ
    assert rep["config_hash"] != side["config_hash"]
    assert abs(rep["delay_ns"] + 80.0) < 10.0
    cc, hdr = read_matrix_text(tmp_path / "crosscorr.txt")
    assert cc.shape == (256, 2) and cc[:, 1].sum() > 0
    sig, _ = read_matrix_text(tmp_path / "coincidence_lad_signal.txt")
    assert sig.sum() == rep["n_coincidences"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "coinccl.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()


def test_beam_current_preset_rate_in_sidecar(tmp_path):
    doc = {"slab": {"dielectric": "silicon"},
           "generator": {"beam_current_A": 3.1e-12, "duration_s": 0.0, "pair_detect_prob": 0.0}}
    cfg = write_cfg(tmp_path / "pa.json", doc)
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == EXIT_OK
    side = json.loads((tmp_path / "events" / "events.json").read_text())
    assert side["electron_rate"] == pytest.approx(1.935e7, rel=1e-3)
    assert side["n_hits"] == 0 and side["config_hash"] == config_hash(doc)
