"""Deterministic CSV/JSON emission for diagnose and scan runs.

Floats are written with ``repr`` (shortest round-trip form), so files are
byte-identical across runs with the same configuration and seed, for any
worker count.  No timestamps or environment data are embedded; the
resolved configuration is, so a report can be reproduced from itself.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if x == x and abs(x) != float("inf") else None
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dump_json(obj: dict) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if x != x:
            return ""
        return repr(x)
    if isinstance(x, (np.bool_, bool)):
        return "true" if x else "false"
    if isinstance(x, (np.integer, int)):
        return str(int(x))
    return str(x)


def rows_to_csv(rows: list[dict], summary_rows: list[list] | None = None) -> str:
    """Wide CSV: the union of row keys as the header, summary rows appended."""
    header: list[str] = []
    for row in rows:
        for k in row:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in header])
    for srow in summary_rows or []:
        w.writerow([_cell(v) for v in srow])
    return buf.getvalue()


def diagnose_rows(results: dict[str, dict]) -> list[dict]:
    """Long-format rows, one per diagnostic, with a shared column set."""
    cols = ("diagnostic", "value", "se", "n", "ratio", "ratio_se", "residual", "tolerance", "status", "error")
    rows = []
    for name, data in results.items():
        row = {c: data.get(c) for c in cols}
        row["diagnostic"] = name
        row.setdefault("status", data.get("status", "ok"))
        rows.append({k: v for k, v in row.items() if k == "diagnostic" or v is not None})
    # normalize key sets so the CSV header is stable
    keys = [c for c in cols if any(c in r for r in rows)]
    return [{k: r.get(k) for k in keys} for r in rows]


def scan_summary_rows(summary: dict) -> list[list]:
    out = []
    for name, fit in (summary.get("slopes") or {}).items():
        out.append(["#slope", name, fit.get("slope"), fit.get("intercept"), fit.get("r2"), fit.get("points")])
    return out
