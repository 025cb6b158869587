"""CSV ingestion and the plain-text formats of the results store."""

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InvalidData, ParseError
from .simulate import Dataset


def _parse_float(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def read_numeric_csv(path):
    """Read a rectangular numeric CSV; a first row with no numeric cells is a header.

    Returns ``(matrix, header, line_numbers)`` where ``header`` is a tuple of
    names or ``()`` and ``line_numbers`` gives the file line of each matrix row.
    """
    path = Path(path)
    rows, header = [], ()
    width = None
    with path.open(newline="", encoding="utf-8-sig") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            values = [_parse_float(c) for c in cells]
            if line_no == 1 and all(v is None for v in values):
                header = tuple(cells)
                width = len(cells)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise ParseError(f"{path}: line {line_no} has {len(cells)} fields, expected {width}",
                                 line=line_no)
            bad = [i for i, v in enumerate(values) if v is None]
            if bad:
                raise ParseError(f"{path}: line {line_no}, field {bad[0] + 1} is not a finite number: "
                                 f"{cells[bad[0]]!r}", line=line_no)
            rows.append((line_no, values))
    if not rows:
        raise ParseError(f"{path}: no data rows", line=None)
    return np.array([v for _, v in rows], dtype=float), header, [n for n, _ in rows]


def _log(values, what):
    if np.any(values <= 0):
        raise InvalidData(f"log-transform needs strictly positive {what}")
    return np.log(values)


def ingest_csv(path_x, path_y=None, log_transform=False):
    """Load a design (and optionally a one-column response) into a Dataset without ground truth."""
    x, header, x_lines = read_numeric_csv(path_x)
    if path_y is None:
        y = np.zeros(x.shape[0])
    else:
        y_mat, _, y_lines = read_numeric_csv(path_y)
        if y_mat.shape[1] != 1:
            raise ParseError(f"{path_y}: expected one column, found {y_mat.shape[1]}", line=y_lines[0])
        if y_mat.shape[0] != x.shape[0]:
            short = min(x.shape[0], y_mat.shape[0])
            longer = x_lines if x.shape[0] > short else y_lines
            raise ParseError(f"row count mismatch: {x.shape[0]} design rows, {y_mat.shape[0]} responses",
                             line=longer[short])
        y = y_mat[:, 0]
        if log_transform:
            y = _log(y, "responses")
    if log_transform:
        x = _log(x, "covariates")
    names = header or tuple(f"x{j + 1}" for j in range(x.shape[1]))
    return Dataset(x, y, column_names=names)


def write_csv(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)


def format_value(value):
    """Shortest round-tripping text for numbers; empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def write_key_values(path, mapping):
    lines = [f"{k} = {format_value(v)}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_key_values(path):
    """Parse ``key = value`` lines (``:`` also accepted); ``#`` starts a comment."""
    out = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ParseError(f"{path}: line {line_no} is not 'key = value': {raw!r}", line=line_no)
        key, value = (part.strip() for part in line.split(sep, 1))
        if not key:
            raise ParseError(f"{path}: line {line_no} has an empty key", line=line_no)
        out[key.replace("-", "_").lower()] = value
    return out
