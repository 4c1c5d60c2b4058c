"""Self-describing CSV/JSON outputs.

CSV files start with ``#``-prefixed header lines carrying the artifact
version, the run configuration and the unit conventions, followed by a
column row.  Floats are written with ``repr`` so values round-trip exactly.
Files are written to a temporary sibling and renamed, so a failed run
never leaves a partial file behind.
"""

import json
import os
import sys
import tempfile

import numpy as np

from . import __version__

UNITS = {"time": "1/Gamma", "rate": "Gamma", "length": "lambda"}


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True)


def _atomic_write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".coopchain-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(columns, rows, config, extra=None):
    lines = [
        f"# coopchain {__version__}",
        f"# config: {dumps(config)}",
        f"# units: {dumps(UNITS)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key}: {dumps(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows, config, extra=None):
    _atomic_write(path, render_csv(columns, rows, config, extra))


def write_json(path, payload, config):
    doc = {"version": __version__, "config": config, "units": UNITS}
    doc.update(payload)
    _atomic_write(path, json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def write_raw_json(path, payload):
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2) + "\n")


def read_csv(path):
    """Return (meta, columns, data) where data maps column -> float array."""
    meta = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            if value:
                try:
                    meta[key] = json.loads(value)
                except json.JSONDecodeError:
                    meta[key] = value
            else:
                meta["banner"] = key
        elif line.strip():
            body.append(line)
    columns = body[0].split(",")
    values = [[float(x) if x != "" else np.nan for x in row.split(",")] for row in body[1:]]
    arr = np.array(values, dtype=float).reshape(len(values), len(columns))
    return meta, columns, {c: arr[:, i] for i, c in enumerate(columns)}
