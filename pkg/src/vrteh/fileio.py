"""CSV ingestion and serialization.

CSV dialect everywhere: comma separator, ``.`` decimal point, mandatory
header row, UTF-8, LF line endings.  Floats are written with ``repr``,
the shortest string that round-trips to the same double.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

RAW_HEADER = ("arm", "value")
PRIOR_HEADER = ("rho", "weight")
REPLICATE_HEADER = ("replicate", "vr", "sd_delta")
SAMPLE_HEADER = ("draw", "rho", "branch", "sigma_delta", "weight")


class DataFileError(Exception):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, message, line=None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


def _header(path, rows, expected):
    try:
        lineno, head = next(rows)
    except StopIteration:
        raise DataFileError(path, "file is empty; expected header " + ",".join(expected)) from None
    if tuple(h.lower() for h in head) != expected:
        raise DataFileError(path, f"expected header {','.join(expected)!r}, got {','.join(head)!r}", lineno)


def _float(path, lineno, text, what):
    try:
        v = float(text)
    except ValueError:
        raise DataFileError(path, f"{what} {text!r} is not a number", lineno) from None
    if not math.isfinite(v):
        raise DataFileError(path, f"{what} {text!r} is not finite", lineno)
    return v


def read_raw_data(path) -> tuple[list[float], list[float]]:
    """Read an ``arm,value`` file into (treatment values, control values)."""
    arms = {"treatment": [], "control": []}
    rows = _rows(path)
    _header(path, rows, RAW_HEADER)
    for lineno, row in rows:
        if len(row) != 2:
            raise DataFileError(path, f"expected 2 fields, got {len(row)}", lineno)
        arm = row[0].lower()
        if arm not in arms:
            raise DataFileError(path, f"arm must be 'treatment' or 'control', got {row[0]!r}", lineno)
        arms[arm].append(_float(path, lineno, row[1], "value"))
    return arms["treatment"], arms["control"]


def read_discrete_prior(path) -> list[tuple[float, float]]:
    atoms = []
    rows = _rows(path)
    _header(path, rows, PRIOR_HEADER)
    for lineno, row in rows:
        if len(row) != 2:
            raise DataFileError(path, f"expected 2 fields, got {len(row)}", lineno)
        rho = _float(path, lineno, row[0], "rho")
        weight = _float(path, lineno, row[1], "weight")
        if not -1.0 <= rho <= 1.0:
            raise DataFileError(path, f"rho {rho!r} outside [-1, 1]", lineno)
        if weight <= 0:
            raise DataFileError(path, f"weight {weight!r} must be positive", lineno)
        atoms.append((rho, weight))
    if not atoms:
        raise DataFileError(path, "prior file has no atoms")
    return atoms


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
            n += 1
    return n


def _jsonable(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return _jsonable(obj.item())
    return obj


def dumps_envelope(envelope: dict) -> str:
    """JSON text for an output envelope; non-finite floats become null."""
    return json.dumps(_jsonable(envelope), indent=2, allow_nan=False) + "\n"
