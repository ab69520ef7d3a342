"""Shared text formats: CSV number formatting and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import os
from pathlib import Path
from typing import Iterable, Sequence


def fmt(x) -> str:
    """Render a number for CSV output (17 significant digits for floats)."""
    if isinstance(x, (bool,)):
        return "1" if x else "0"
    if isinstance(x, (int,)) or (hasattr(x, "dtype") and x.dtype.kind in "iu"):
        return str(int(x))
    return f"{float(x):.17g}"


def fmt_short(x) -> str:
    """Six significant digits, for human-facing summaries."""
    return f"{float(x):.6g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def manifest_path_for(output) -> Path:
    """``report.csv`` -> ``report.manifest.json``."""
    output = Path(output)
    return output.with_name(output.stem + ".manifest.json")


def write_manifest(command: str, parameters: dict, seed, outputs, wall_clock: float | None = None) -> Path:
    """Write a RunManifest next to the first output file and return its path.

    The manifest holds everything :func:`clusterlab.cli.main` needs to redo
    the run; ``timestamp`` and ``wall_clock_seconds`` are informational only.
    """
    from clusterlab import __version__

    outputs = [os.fspath(p) for p in outputs]
    record = {
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "outputs": outputs,
        "tool_version": __version__,
        "timestamp": utc_timestamp(),
    }
    if wall_clock is not None:
        record["wall_clock_seconds"] = wall_clock
    return write_json(manifest_path_for(outputs[0]), record)
