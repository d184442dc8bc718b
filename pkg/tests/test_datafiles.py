import json

import numpy as np
import pytest

from ionduet.datafiles import (
    config_digest,
    read_histogram,
    scan_sidecar,
    write_histogram,
    write_json_report,
    write_scan_csv,
)
from ionduet.detection import Histogram
from ionduet.experiments import FitResult, ScanResult


def test_config_digest_is_stable():
    assert config_digest(b"abc") == config_digest("abc")
    assert config_digest("abc") != config_digest("abd")
    assert len(config_digest("x")) == 64


def test_histogram_round_trip(tmp_path):
    h = Histogram.from_samples(np.array([0, 2, 2, 7, 61, 61]), cap=30)
    path = tmp_path / "h.hist"
    write_histogram(path, h, tau_d_us=500.0, provenance={"seed": 3, "config_sha256": "f" * 64})
    back, meta = read_histogram(path)
    assert np.array_equal(back.counts, h.counts)
    assert back.trials_N == h.trials_N
    assert meta["tau_d_us"] == "500.0"
    assert meta["seed"] == "3"
    text = path.read_text()
    assert text.startswith("# trials=6 tau_d_us=500.0\n")
    assert "\t" in text.splitlines()[2]


def test_histogram_read_rejects_count_mismatch(tmp_path):
    path = tmp_path / "bad.hist"
    path.write_text("# trials=5 tau_d_us=500.0\n0\t1\n1\t1\n")
    with pytest.raises(ValueError):
        read_histogram(path)


def test_scan_csv_rotation_format(tmp_path):
    scan = ScanResult(
        kind="rotation",
        abscissa=np.array([0.0, 0.5]),
        n_trials=np.array([10, 10]),
        seed=4,
        p_mixed=np.array([0.8, 0.6]),
        p_pure=np.array([0.2, 0.4]),
        fit=FitResult(params={"a": 0.5, "b": 0.3, "delta": 0.0, "contrast": 0.6},
                      errors={"a": 0.01, "b": 0.01, "delta": 0.02, "contrast": 0.02}),
    )
    path = tmp_path / "scan.csv"
    write_scan_csv(path, scan, provenance={"seed": 4})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "abscissa,p_mixed,p_pure,n_trials"
    assert lines[2] == "0.0,0.8,0.2,10"
    sidecar = scan_sidecar(scan, provenance={"seed": 4})
    assert sidecar["fit_params"]["contrast"] == 0.6
    assert sidecar["n_points"] == 2


def test_scan_csv_rabi_format(tmp_path):
    scan = ScanResult(
        kind="rabi",
        abscissa=np.array([0.0, 1e-6]),
        n_trials=np.array([100, 100]),
        seed=1,
        signal=np.array([2.0, 1.5]),
        signal_err=np.array([0.0, 0.05]),
    )
    path = tmp_path / "scan.csv"
    write_scan_csv(path, scan, provenance=None)
    lines = path.read_text().splitlines()
    assert lines[0] == "abscissa,signal,signal_err,n_trials"
    assert lines[1] == "0.0,2.0,0.0,100"


def test_json_report_is_deterministic_and_clean(tmp_path):
    payload = {
        "b": np.float64(1.5),
        "a": np.int64(3),
        "flag": np.bool_(True),
        "arr": np.array([1.0, float("nan")]),
    }
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    write_json_report(p1, payload)
    write_json_report(p2, dict(reversed(list(payload.items()))))
    assert p1.read_bytes() == p2.read_bytes()
    data = json.loads(p1.read_text())
    assert data["a"] == 3
    assert data["flag"] is True
    assert data["arr"] == [1.0, None]
