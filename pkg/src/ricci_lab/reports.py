"""Atomic CSV, JSON and MANIFEST writers."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, ExperimentConfig
from .sweep import CSV_COLUMNS, SweepResult

CSV_NAME = "rigidity.csv"
REPORT_NAME = "report.json"
MANIFEST_NAME = "MANIFEST"


class ReportError(OSError):
    """Writing an output file failed; the message names the path."""


def atomic_write(path, data: str) -> Path:
    """Write ``data`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    tmp = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
        tmp = None
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
    return path


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
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
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def manifest_text(config: ExperimentConfig, files: dict) -> str:
    """Config hash, seed, package version, echoed defaults and output digests."""
    lines = [
        f"schema_version: {SCHEMA_VERSION}",
        f"package_version: {__version__}",
        f"config_sha256: {config.sha256()}",
        f"seed: {config.seed}",
        f"config: {config.canonical_json()}",
    ]
    for name in sorted(files):
        digest = hashlib.sha256(files[name].encode("utf-8")).hexdigest()
        lines.append(f"file: {name} sha256={digest}")
    return "\n".join(lines) + "\n"


def emit_reports(result: SweepResult, out_dir) -> dict:
    """Write the rigidity CSV, the JSON report and the MANIFEST into ``out_dir``."""
    out_dir = Path(out_dir)
    csv_text = rows_csv(result.rows)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(results_only=True),
        "members": result.reports,
        "correlations": result.correlations,
        "hard_failures": [list(x) for x in result.hard_failures],
    }
    report_text = dumps_json(report)
    paths = {
        CSV_NAME: atomic_write(out_dir / CSV_NAME, csv_text),
        REPORT_NAME: atomic_write(out_dir / REPORT_NAME, report_text),
    }
    files = {CSV_NAME: csv_text, REPORT_NAME: report_text}
    paths[MANIFEST_NAME] = atomic_write(out_dir / MANIFEST_NAME, manifest_text(result.config, files))
    return paths


def emit_document(config: ExperimentConfig, out_dir, name: str, payload: dict,
                  extra: dict | None = None) -> dict:
    """Write a JSON report (plus optional extra text files) and a MANIFEST."""
    out_dir = Path(out_dir)
    text = dumps_json(payload)
    files = {name: text, **(extra or {})}
    paths = {k: atomic_write(out_dir / k, v) for k, v in files.items()}
    paths[MANIFEST_NAME] = atomic_write(out_dir / MANIFEST_NAME, manifest_text(config, files))
    return paths
