"""Deterministic CSV/JSON writers for traces, sweeps, and reports.

Floats are rendered with repr (shortest round-trip form) and JSON objects
with sorted keys, so re-running a configuration reproduces byte-identical
files.  The trace CSV schema is versioned; the version travels in the JSON
sidecar.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .algorithms import RunTrace

TRACE_SCHEMA = (
    "iter", "x", "f", "env_value", "env_grad_norm",
    "step_norm", "ess", "n_samples", "lambda", "delta",
)
TRACE_SCHEMA_VERSION = 1


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def format_point(x) -> str:
    """Semicolon-joined coordinates."""
    return ";".join(repr(float(v)) for v in np.atleast_1d(x))


def parse_point(cell: str) -> np.ndarray:
    return np.array([float(v) for v in cell.split(";")])


def write_csv(path, columns: dict) -> None:
    """Write named columns (equal length) as a plain CSV."""
    names = list(columns)
    rows = zip(*(columns[c] for c in names))
    lines = [",".join(names)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(canonical_json(payload) + "\n")


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ": "), indent=1)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def trace_columns(trace: RunTrace) -> dict:
    cols = {name: [] for name in TRACE_SCHEMA}
    for r in trace.records:
        cols["iter"].append(r.k)
        cols["x"].append(format_point(r.x))
        cols["f"].append(r.f_value)
        cols["env_value"].append(r.env_value)
        cols["env_grad_norm"].append(r.env_grad_norm)
        cols["step_norm"].append(r.step_norm)
        cols["ess"].append(r.ess)
        cols["n_samples"].append(r.n_samples)
        cols["lambda"].append(r.lam)
        cols["delta"].append(r.delta)
    return cols


def write_trace(trace: RunTrace, csv_path, json_path) -> None:
    """Trace CSV (one row per iteration) plus a JSON sidecar."""
    write_csv(csv_path, trace_columns(trace))
    sidecar = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "columns": list(TRACE_SCHEMA),
        "config_echo": trace.config_echo,
        "config_hash": config_hash(trace.config_echo),
        "summary": {
            "iterations": len(trace.records),
            "terminated_by": trace.terminated_by,
            "final_x": [float(v) for v in trace.final_x],
            "final_step_norm": trace.records[-1].step_norm if trace.records else None,
            "total_path_length": trace.total_path_length,
            "warnings": [dict(w) for w in trace.warnings],
        },
    }
    write_json(json_path, sidecar)
