"""Readers and writers for the on-disk formats the CLI speaks.

Formats:

* Matrix Market ``.mtx`` (real coordinate, symmetric when the matrix is),
* dense matrix CSV: a header line with ``n``, then ``n`` rows of ``n``
  comma-separated values,
* data CSV: header line ``m,n``, then ``m`` rows of ``n`` values,
* records CSV: one ``correct,radius`` pair per line (``correct`` in {0,1}),
* accuracy-curve CSV with header ``eps_inf,accuracy``,
* certificate JSON.

Writers use shortest round-trip float formatting so that write->read is
bit-exact; readers accept exactly what the writers produce.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .exceptions import PreconditionError
from .smoothing import RobustnessRecord


def _fmt(x: float) -> str:
    return repr(float(x))


def read_matrix(path) -> np.ndarray:
    """Read a dense matrix from .mtx or .csv, dispatching on the suffix."""
    path = Path(path)
    if path.suffix.lower() in (".mtx", ".mm"):
        mat = scipy.io.mmread(path)
        if scipy.sparse.issparse(mat):
            mat = mat.toarray()
        return np.asarray(mat, dtype=float)
    if path.suffix.lower() == ".csv":
        return read_matrix_csv(path)
    raise ValueError(f"unsupported matrix file suffix: {path.suffix!r}")


def write_matrix(path, m: np.ndarray) -> None:
    path = Path(path)
    m = np.asarray(m, dtype=float)
    if path.suffix.lower() in (".mtx", ".mm"):
        symmetry = "symmetric" if (m.ndim == 2 and m.shape[0] == m.shape[1]
                                   and np.array_equal(m, m.T)) else "general"
        # 17 significant digits round-trip float64 exactly.
        scipy.io.mmwrite(path, scipy.sparse.coo_matrix(m), field="real",
                         precision=17, symmetry=symmetry)
        return
    if path.suffix.lower() == ".csv":
        write_matrix_csv(path, m)
        return
    raise ValueError(f"unsupported matrix file suffix: {path.suffix!r}")


def read_matrix_csv(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        n = int(lines[0].strip())
    except ValueError as err:
        raise ValueError(f"{path}: first line must be the dimension n") from err
    if n < 1 or len(lines) < n + 1:
        raise ValueError(f"{path}: expected {n} rows after the header")
    rows = []
    for i, line in enumerate(lines[1:n + 1]):
        vals = [float(tok) for tok in line.split(",")]
        if len(vals) != n:
            raise ValueError(f"{path}: row {i} has {len(vals)} values, expected {n}")
        rows.append(vals)
    return np.array(rows, dtype=float)


def write_matrix_csv(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError("matrix CSV stores square matrices; "
                                "use data CSV for rectangular data")
    n = m.shape[0]
    with open(path, "w") as fh:
        fh.write(f"{n}\n")
        for row in m:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_data_csv(path) -> np.ndarray:
    """Rectangular data matrix: header ``m,n`` then m rows of n values."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty data file")
    head = lines[0].split(",")
    try:
        m, n = int(head[0]), int(head[1])
    except (ValueError, IndexError) as err:
        raise ValueError(f"{path}: first line must be 'm,n'") from err
    if m < 1 or n < 1 or len(lines) < m + 1:
        raise ValueError(f"{path}: expected {m} rows after the header")
    rows = []
    for i, line in enumerate(lines[1:m + 1]):
        vals = [float(tok) for tok in line.split(",")]
        if len(vals) != n:
            raise ValueError(f"{path}: row {i} has {len(vals)} values, expected {n}")
        rows.append(vals)
    return np.array(rows, dtype=float)


def write_data_csv(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise PreconditionError(f"expected a 2-d array, got shape {a.shape}")
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]},{a.shape[1]}\n")
        for row in a:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_records(path) -> list[RobustnessRecord]:
    """Records CSV: ``correct,radius`` per line; a header line is tolerated."""
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno + 1}: expected 'correct,radius'")
        try:
            correct = int(parts[0])
            radius = float(parts[1])
        except ValueError:
            if lineno == 0:
                continue  # header line
            raise ValueError(f"{path}:{lineno + 1}: could not parse record")
        if correct not in (0, 1):
            raise ValueError(f"{path}:{lineno + 1}: correct flag must be 0 or 1")
        records.append(RobustnessRecord(correct=bool(correct), l2_radius=radius))
    return records


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(f"{int(rec.correct)},{_fmt(rec.l2_radius)}\n")


def read_curve(path) -> list[tuple[float, float]]:
    points = []
    lines = Path(path).read_text().splitlines()
    for lineno, line in enumerate(lines):
        line = line.strip()
        if not line or (lineno == 0 and line.startswith("eps_inf")):
            continue
        eps, acc = line.split(",")
        points.append((float(eps), float(acc)))
    return points


def write_curve(path, points) -> None:
    with open(path, "w") as fh:
        fh.write("eps_inf,accuracy\n")
        for eps, acc in points:
            fh.write(f"{_fmt(eps)},{_fmt(acc)}\n")


CERTIFICATE_FIELDS = ("n", "bound", "mode", "y", "iterations_used",
                      "early_stopped", "stop_reason", "verified", "margin",
                      "wall_time_ms")


def write_certificate_json(path, payload: dict) -> None:
    missing = [k for k in CERTIFICATE_FIELDS if k not in payload]
    if missing:
        raise PreconditionError(f"certificate payload missing fields: {missing}")
    ordered = {k: payload[k] for k in CERTIFICATE_FIELDS}
    with open(path, "w") as fh:
        json.dump(ordered, fh, indent=2)
        fh.write("\n")


def read_certificate_json(path) -> dict:
    with open(path) as fh:
        payload = json.load(fh)
    missing = [k for k in CERTIFICATE_FIELDS if k not in payload]
    if missing:
        raise ValueError(f"{path}: certificate JSON missing fields: {missing}")
    return payload
