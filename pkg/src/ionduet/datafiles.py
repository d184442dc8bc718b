"""Deterministic on-disk formats.

Histograms are plain text (`m<TAB>count` lines under `#` headers), scans
are CSV with a JSON sidecar for fitted parameters.  Every writer takes a
provenance mapping (config digest, seed) and embeds it in the header, and
all numbers are formatted with repr, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .detection import Histogram


def config_digest(data: bytes | str) -> str:
    """sha256 hex digest of the raw configuration text."""
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _provenance_line(provenance: dict | None) -> list[str]:
    if not provenance:
        return []
    body = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(provenance.items()))
    return [f"# {body}"]


def write_histogram(
    path, hist: Histogram, tau_d_us: float, provenance: dict | None = None
) -> None:
    lines = [f"# trials={hist.trials_N} tau_d_us={_fmt(tau_d_us)}"]
    lines += _provenance_line(provenance)
    lines += [f"{m}\t{c}" for m, c in enumerate(hist.counts)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram(path) -> tuple[Histogram, dict[str, str]]:
    """Parse a histogram file; returns the histogram and the header fields."""
    meta: dict[str, str] = {}
    rows: dict[int, int] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    meta[key] = value
            continue
        m_text, _, count_text = line.partition("\t")
        rows[int(m_text)] = int(count_text)
    if not rows:
        raise ValueError(f"no histogram rows in {path}")
    counts = np.zeros(max(rows) + 1, dtype=np.int64)
    for m, c in rows.items():
        if m < 0:
            raise ValueError("negative photon number in histogram file")
        counts[m] = c
    hist = Histogram(counts, int(counts.sum()))
    if "trials" in meta and int(meta["trials"]) != hist.trials_N:
        raise ValueError(
            f"header says trials={meta['trials']} but rows sum to {hist.trials_N}"
        )
    return hist, meta


def write_scan_csv(path, scan, provenance: dict | None = None) -> None:
    """CSV of a ScanResult; columns depend on the scan kind.

    Rotation scans: abscissa,p_mixed,p_pure,n_trials.  Rabi scans record
    the fluorescence signal instead of the probability pair:
    abscissa,signal,signal_err,n_trials.
    """
    lines = _provenance_line(provenance)
    if scan.p_mixed is not None:
        lines.append("abscissa,p_mixed,p_pure,n_trials")
        for x, pm, pp, n in zip(scan.abscissa, scan.p_mixed, scan.p_pure, scan.n_trials):
            lines.append(f"{_fmt(x)},{_fmt(pm)},{_fmt(pp)},{n}")
    else:
        lines.append("abscissa,signal,signal_err,n_trials")
        for x, s, e, n in zip(scan.abscissa, scan.signal, scan.signal_err, scan.n_trials):
            lines.append(f"{_fmt(x)},{_fmt(s)},{_fmt(e)},{n}")
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def write_json_report(path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def scan_sidecar(scan, provenance: dict | None = None) -> dict:
    """JSON-ready summary of a ScanResult: fit parameters and seeds."""
    payload = {
        "kind": scan.kind,
        "seed": int(scan.seed),
        "n_points": int(scan.abscissa.size),
        "n_trials": scan.n_trials,
    }
    if scan.fit is not None:
        payload["fit_params"] = scan.fit.params
        payload["fit_errors"] = scan.fit.errors
    if provenance:
        payload["provenance"] = dict(sorted(provenance.items()))
    return payload
