"""Artifact writers: CSV tables, plot-data files and the run manifest."""
from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows) -> Path:
    """Comma separated, header first, LF line endings, floats at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([_cell(x) for x in r])
    return path


def plot_columns(report):
    """``(header, rows)`` for the plot data of a known report type."""
    from .schrodinger import EnergySweep
    from .spectrum import FeketeResult, LyapunovEstimate

    if isinstance(report, EnergySweep):
        return ["E", "mean_lambda1"], [(r.E, r.mean_lambda1) for r in report.per_energy]
    if isinstance(report, FeketeResult):
        return ["n", "a_n_over_n"], list(zip(report.n, report.a_over_n))
    if isinstance(report, LyapunovEstimate):
        return ["t", "running_lambda1"], [tuple(h) for h in report.history]
    if hasattr(report, "header") and hasattr(report, "rows"):
        return list(report.header()), list(report.rows())
    raise InvalidInputError(f"no plot layout for {type(report).__name__}")


def emit_plotdata(report, path) -> Path:
    """Whitespace separated columns under a ``#`` header line."""
    header, rows = plot_columns(report)
    if not rows:
        raise InvalidInputError("report is empty")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for r in rows:
            fh.write(" ".join(_cell(x) for x in r) + "\n")
    return path


def versions() -> dict:
    import scipy

    from . import __version__, kernels

    return {
        "cocycle_lab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "kernel_backend": kernels.BACKEND,
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_manifest(path, operation, config: dict, artifacts, extra=None) -> Path:
    """Sorted-key JSON; carries no timestamps so reruns compare equal."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "operation": operation,
        "config": _jsonable(config),
        "versions": versions(),
        "artifacts": sorted(str(Path(a).name) for a in artifacts),
    }
    if extra:
        doc["summary"] = _jsonable(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
