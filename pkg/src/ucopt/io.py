"""Run bundles on disk: per-step CSV, metrics JSON, comparison reports.

A bundle directory holds ``timeseries.csv`` and ``metrics.json``. The CSV has
one row per sample instant ``t = 0, dt, ..., duration`` (``n_steps + 1`` data
rows); the last row carries the final state with the last held inputs.
Floats are written with 17 significant digits so they round-trip exactly.

Writes are staged in temporary files and moved into place with
``os.replace``; ``metrics.json`` goes last, so its presence marks a complete
bundle.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .sim.scenario import RunRecord, scenario_to_dict

__all__ = [
    "SCHEMA_VERSION",
    "BASE_COLUMNS",
    "CSV_NAME",
    "METRICS_NAME",
    "csv_columns",
    "write_bundle",
    "read_bundle",
    "read_csv",
    "write_report",
]

SCHEMA_VERSION = 1
CSV_NAME = "timeseries.csv"
METRICS_NAME = "metrics.json"
REPORT_JSON = "comparison.json"
REPORT_TEXT = "comparison.txt"

# column -> meaning (unit)
BASE_COLUMNS = {
    "t_s": "sample time (s)",
    "u_c_v": "UC terminal voltage (V)",
    "e_v": "tracking error u_c - target (V)",
    "u_cmd_a": "commanded plant input after saturation (A)",
    "u_act_a": "plant input after the interface lag (A)",
    "d_vps": "disturbance on the error rate (V/s)",
    "v_bus_v": "DC bus voltage at the common coupling point (V)",
    "theta": "Lyapunov gate of the critic law (0 or 1)",
    "h_hat": "critic approximate Hamiltonian (empty for baselines)",
}


def csv_columns(n_neurons: int | None) -> list[str]:
    cols = list(BASE_COLUMNS)
    if n_neurons:
        cols += [f"w_hat_{i}" for i in range(n_neurons)]
    return cols


def _fmt(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else "%.17g" % x


def _rows(rec: RunRecord):
    n = len(rec)
    for k in range(n + 1):
        # final row: state after the last step, inputs still held
        j = min(k, n - 1)
        last = k == n
        row = [
            rec.t_final if last else rec.t[k],
            rec.u_c_final if last else rec.u_c[k],
            rec.e_final if last else rec.e[k],
            rec.u_commanded[j],
            rec.u_actual[j],
            rec.d[j],
            rec.v_bus_final if last else rec.v_bus[k],
        ]
        out = [_fmt(x) for x in row]
        out.append(str(int(rec.theta[j])))
        out.append(_fmt(rec.h_hat[j]))
        if rec.w_hat is not None:
            w = rec.w_hat_final if last else rec.w_hat[k]
            out += [_fmt(x) for x in w]
        yield out


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _atomic_write(path: Path, write):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(rec: RunRecord, out_dir) -> Path:
    """Write ``rec`` into ``out_dir`` (created if needed) and return the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_w = None if rec.w_hat is None else rec.w_hat.shape[1]
    cols = csv_columns(n_w)

    def write_csv(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerows(_rows(rec))

    meta = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario_to_dict(rec.scenario),
        "metrics": rec.metrics.as_dict(),
        "columns": cols,
        "n_steps": len(rec),
    }

    def write_json(fh):
        json.dump(_json_safe(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")

    _atomic_write(out / CSV_NAME, write_csv)
    _atomic_write(out / METRICS_NAME, write_json)
    return out


def _restore_inf(metrics: dict) -> dict:
    # settling_time is the only metric that may be infinite
    return {k: (math.inf if v is None and k == "settling_time" else v) for k, v in metrics.items()}


def read_bundle(run_dir) -> dict:
    """Load ``metrics.json`` of a bundle (``FileNotFoundError`` if absent)."""
    path = Path(run_dir) / METRICS_NAME
    with open(path) as fh:
        meta = json.load(fh)
    meta["metrics"] = _restore_inf(meta["metrics"])
    return meta


def read_csv(run_dir) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a bundle's CSV; empty cells become NaN."""
    with open(Path(run_dir) / CSV_NAME, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) if x else math.nan for x in row] for row in reader]
    return header, np.array(data)


def write_report(report, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def write_json(fh):
        json.dump(_json_safe(report.as_dict()), fh, indent=2, sort_keys=True)
        fh.write("\n")

    _atomic_write(out / REPORT_JSON, write_json)
    _atomic_write(out / REPORT_TEXT, lambda fh: fh.write(report.table() + "\n"))
    return out
