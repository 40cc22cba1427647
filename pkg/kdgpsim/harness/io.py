# -*- coding: utf-8 -*-
"""Result files: ``results.csv``, ``summary.json`` and kernel-study tables."""
import csv
import json
import logging
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from kdgpsim.harness.models import CSV_COLUMNS

log = logging.getLogger(__name__)


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(results, path):
    """One row per trial per method, columns in :data:`CSV_COLUMNS` order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for result in results:
            writer.writerow([_format(v) for v in result.row()])
    log.info("Wrote %d rows to %s", len(results), path)
    return path


def _stats(values):
    values = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if values.size == 0:
        return {"mean": None, "std": None}
    return {"mean": float(values.mean()), "std": float(values.std())}


def summarize(results):
    """Mean and standard deviation of every numeric column, per method."""
    grouped = defaultdict(list)
    for result in results:
        grouped[result.method].append(result)
    summary = {}
    for method, rows in sorted(grouped.items()):
        entry = {"trials": len(rows)}
        for column in ("rmse_field", "rmse_centralized", "consensus_iters_mean", "msg_bytes", "wall_ms"):
            entry[column] = _stats([float(getattr(r, column)) for r in rows])
        traces = [r.rmse_trace for r in rows if r.rmse_trace]
        if traces:
            entry["rmse_trace_mean"] = np.mean(np.asarray(traces, dtype=float), axis=0).tolist()
        summary[method] = entry
    return summary


def write_summary_json(payload, path):
    """Write ``payload`` as indented, key-sorted JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def write_kernel_table(rows, path):
    """Kernel cross-section table with columns ``method,E,distance,value``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("method", "E", "distance", "value"))
        for row in rows:
            writer.writerow((row["method"], row["E"], repr(row["distance"]), repr(row["value"])))
    return path
