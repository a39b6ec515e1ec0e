"""CSV ingestion and canonical JSON/CSV output."""
import csv
import io
import json
import math

import numpy as np

from .errors import ParseError


def _parse_row(row, lineno):
    out = []
    for k, cell in enumerate(row, 1):
        cell = cell.strip()
        if not cell:
            raise ParseError(f"missing value in column {k}", lineno)
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"non-numeric value {cell!r} in column {k}", lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {cell!r} in column {k}", lineno)
        out.append(v)
    return out


def _is_numeric(row):
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def parse_csv(text):
    """Data matrix from CSV text; a non-numeric first row is a header."""
    rows = [(k, r) for k, r in enumerate(csv.reader(io.StringIO(text)), 1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty input, no data rows")
    if not _is_numeric(rows[0][1]):
        width = len(rows[0][1])
        rows = rows[1:]
        if not rows:
            raise ParseError("header present but no data rows")
    else:
        width = len(rows[0][1])
    if width < 2:
        raise ParseError(f"need at least 2 columns, found {width}", rows[0][0])
    data = []
    for lineno, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
        data.append(_parse_row(row, lineno))
    return np.array(data, dtype=float)


def ingest_csv(path):
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from None
    return parse_csv(text)


def format_csv(data, header=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in np.asarray(data, dtype=float):
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def write_csv(data, path, header=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(data, header))


def _plain(obj):
    """JSON-ready copy: arrays to lists, numpy scalars to Python numbers,
    non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj):
    """Canonical JSON text. Floats use Python's shortest round-trip repr,
    which reads back to the identical double."""
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def format_csv_records(records, header):
    """CSV of mixed records; floats with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in records:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in rec])
    return buf.getvalue()
