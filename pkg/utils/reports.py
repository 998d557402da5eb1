"""Atomic JSON and CSV report writers"""
import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def to_jsonable(value):
    """Convert numpy containers and scalars into plain JSON values"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump(mode="json"))
    return value


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def write_json(path, payload):
    """
    Write a report as pretty JSON, replacing the target atomically
    Args:
        path: Destination file
        payload: dict, list or pydantic model
    Returns:
        The destination Path
    """
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=False)
    return _atomic_write(path, lambda handle: handle.write(text + "\n"))


def write_csv(path, rows, fieldnames):
    """Write dict rows as CSV, replacing the target atomically"""

    def _write(handle):
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: to_jsonable(row.get(k)) for k in fieldnames})

    return _atomic_write(path, _write)
