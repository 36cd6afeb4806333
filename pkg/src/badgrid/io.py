"""Serialisation of reports: JSON, CSV and whitespace-separated plot data, written atomically."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

FORMATS = ("json", "csv", "plotdata")


def _plain(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (tuple, set)):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _finite(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def to_json_text(obj) -> str:
    plain = json.loads(json.dumps(obj, default=_plain, allow_nan=True))
    return json.dumps(_finite(plain), sort_keys=True, indent=2) + "\n"


def to_csv_text(rows: Sequence[dict], columns: Sequence[str], header_lines: Iterable[str] = ()) -> str:
    """CSV with the given column order; extra keys are ignored, missing ones left empty."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def to_plot_text(columns: Sequence[str], rows: Iterable[Sequence], header_lines: Iterable[str] = ()) -> str:
    """Whitespace-separated columns, one header comment naming them."""
    out = [f"# {line}" for line in header_lines]
    out.append("# " + " ".join(columns))
    for row in rows:
        out.append(" ".join(_plot_cell(v) for v in row))
    return "\n".join(out) + "\n"


def _plot_cell(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename over the target."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".badgrid-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
