# orbital_stability/reports.py
"""Deterministic CSV / JSON report emission (pandas for the tabular side)."""
from __future__ import annotations

import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import pandas as pd

FLOAT_FORMAT = "%.17g"
_CASTS = {"int": int, "float": float, "str": str, "bool": bool}


@dataclass
class Report:
    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    # column -> one of "int", "float", "str", "bool"
    dtypes: Dict[str, str] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([[row.get(c) for c in self.columns] for row in self.rows], columns=self.columns)

    def to_json(self) -> dict:
        return {"name": self.name, "columns": self.columns, "rows": self.rows, "summary": self.summary}


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def render_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return dumps_json(report.to_json())
    if fmt == "csv":
        buf = io.StringIO()
        report.to_frame().to_csv(buf, index=False, sep=",", float_format=FLOAT_FORMAT, lineterminator="\n")
        return buf.getvalue()
    raise ValueError(f"unknown report format '{fmt}' (expected csv or json)")


def emit_report(report: Report, fmt: str = "csv", path: Optional[str] = None) -> None:
    """Write the report to ``path`` (stdout when None)."""
    text = render_report(report, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv_report(path: str, name: str, dtypes: Dict[str, str]) -> Report:
    """Parse a CSV written by emit_report back into a Report."""
    str_cols = {c: str for c, kind in dtypes.items() if kind == "str"}
    frame = pd.read_csv(path, dtype=str_cols, float_precision="round_trip", keep_default_na=False)
    columns = list(frame.columns)
    rows = []
    for record in frame.to_dict("records"):
        row = {}
        for c in columns:
            cast = _CASTS.get(dtypes.get(c, "str"), str)
            value = record[c]
            if cast is bool and isinstance(value, str):
                value = value == "True"
            row[c] = cast(value)
        rows.append(row)
    return Report(name, columns, rows, {}, dict(dtypes))
