"""Report container and CSV/JSON emission.

CSV output is a single header row plus data rows, comma separated, with
a dot decimal point; values with |v| outside [1e-4, 1e6] switch to
scientific notation.  All float formatting round-trips bit-exactly.
JSON output is the object {"meta": ..., "rows": ..., "summary": ...}.

Repeated runs of the same seeded RunSpec must emit byte-identical
reports, so the metadata timestamp honours SOURCE_DATE_EPOCH (the
reproducible-build convention) instead of the wall clock when set.
"""

from __future__ import annotations

import datetime
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Report:
    meta: dict
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)


def report_timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(epoch) if epoch is not None else int(time.time())
    return datetime.datetime.fromtimestamp(stamp, tz=datetime.timezone.utc).isoformat()


def format_number(v) -> str:
    """Round-trip formatting with the positional/scientific switch."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v != v or v in (float("inf"), float("-inf")):
            return repr(v)
        if v == 0.0:
            return "0"
        if 1e-4 <= abs(v) <= 1e6:
            return repr(v)
        return np.format_float_scientific(v, unique=True)
    return str(v)


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays for JSON serialisation."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    return obj


def emit(report: Report, fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(report.columns)]
        for row in report.rows:
            lines.append(",".join(format_number(row.get(c, "")) for c in report.columns))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        payload = {
            "meta": to_builtin(report.meta),
            "rows": to_builtin(report.rows),
            "summary": to_builtin(report.summary),
        }
        return json.dumps(payload, indent=2) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def write_output(text: str, out: str | None):
    if out is None:
        print(text, end="")
    else:
        with open(out, "w") as fh:
            fh.write(text)
