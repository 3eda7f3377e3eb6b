"""Input readers with schema diagnostics.

Every reader checks the documented column set before touching the data,
so a wrong or empty file produces a named diagnostic instead of a blank
figure.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match its documented schema."""


# Documented column schemas of the simulation package's CSV outputs.
CSV_SCHEMAS = {
    "moment": ["t", "pred_re", "pred_im", "emp_re", "emp_im", "emp_m2",
               "bound_m2", "stderr", "replicas"],
    "lowerbound": ["t", "pred_re", "pred_im", "emp_re", "emp_im", "emp_m2",
                   "bound_m2", "tv_lb", "advantage", "stderr"],
    "tv": ["t", "tv"],
    "epochs": ["run", "k", "u_k", "m_k", "d_k", "growth", "good"],
}


def read_csv(path: str | Path, schema: str) -> dict[str, np.ndarray]:
    """Read a documented CSV into column arrays, verifying its header."""
    expected = CSV_SCHEMAS[schema]
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header "
                              f"{','.join(expected)}") from None
        missing = [c for c in expected if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing column(s) {', '.join(missing)} "
                f"(schema '{schema}' wants {','.join(expected)})")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    idx = {c: header.index(c) for c in expected}
    out = {}
    for col in expected:
        try:
            out[col] = np.array([float(r[idx[col]]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: column {col!r} not numeric: {exc}") \
                from None
    return out


def read_spectra_json(path: str | Path, *, need_roots: bool = False) -> dict:
    """Read a spectra.json payload, verifying the fields figures use."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from None
    required = ["n", "lambda", "norm2"]
    if need_roots:
        required.append("gamma_roots")
    missing = [k for k in required if k not in payload]
    if missing:
        raise SchemaError(f"{path}: missing field(s) {', '.join(missing)}"
                          + (" (gamma_roots is emitted only for n <= 64)"
                             if "gamma_roots" in missing else ""))
    return payload
