"""JSON summaries and CSV tables for experiment results.

Output is byte-stable: keys are sorted, floats use their shortest repr,
CSV lines end in LF, and nothing time- or host-dependent is written.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import mpmath
import numpy as np
import scipy

__all__ = ["to_jsonable", "versions", "summary", "write_json", "write_csv", "emit_reports"]


def to_jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def versions():
    from importlib.metadata import PackageNotFoundError, version

    try:
        own = version("artifact")
    except PackageNotFoundError:
        own = "unknown"
    return {"artifact": own, "numpy": np.__version__, "scipy": scipy.__version__, "mpmath": mpmath.__version__}


def summary(results, config=None, seed=0):
    """The JSON summary structure for a list of ExperimentResult."""
    metrics, flags = {}, {}
    for r in results:
        metrics[r.name] = r.metrics
        flags[r.name] = r.passed
    return to_jsonable({
        "config_echo": config.to_dict() if hasattr(config, "to_dict") else (config or {}),
        "metrics": metrics,
        "pass_flags": flags,
        "versions": versions(),
        "seed": seed,
    })


def write_json(path, obj):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            json.dump(to_jsonable(obj), fh, sort_keys=True, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _cell(v):
    v = to_jsonable(v)
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(path, rows, columns=None):
    """Write dict rows; ``columns`` fixes the order (default: first row's keys)."""
    path = Path(path)
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(row.get(c)) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_reports(results, out_dir, config=None, seed=0, name="summary"):
    """Write ``<name>.json`` plus one CSV per result table into ``out_dir``.

    Returns the list of written paths.
    """
    out = Path(out_dir)
    paths = [write_json(out / f"{name}.json", summary(results, config, seed))]
    for r in results:
        for table, rows in sorted(r.tables.items()):
            fname = table if table == r.name else f"{r.name}_{table}"
            paths.append(write_csv(out / f"{fname}.csv", rows))
    return paths
