"""Deterministic tabular output.

CSV is the primary format: ``#``-prefixed metadata lines, then a
header row, then data rows. Floats are rendered with 12 significant
digits so identical configurations produce byte-identical files. JSON
mirrors the same content as ``{"meta": ..., "rows": [...]}``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from typing import Mapping, Sequence


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _meta_lines(meta: Mapping[str, object]) -> list[str]:
    return [f"# {key}={format_cell(val)}" for key, val in meta.items()]


def render_csv(fieldnames: Sequence[str], rows: Sequence[Mapping], meta: Mapping) -> str:
    buf = io.StringIO()
    for line in _meta_lines(meta):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([format_cell(row.get(name)) for name in fieldnames])
    return buf.getvalue()


def render_json(fieldnames: Sequence[str], rows: Sequence[Mapping], meta: Mapping) -> str:
    body = {
        "meta": {key: val for key, val in meta.items()},
        "rows": [{name: row.get(name) for name in fieldnames if name in row} for row in rows],
    }
    return json.dumps(body, indent=2, sort_keys=False) + "\n"


def write_table(
    fieldnames: Sequence[str],
    rows: Sequence[Mapping],
    meta: Mapping,
    *,
    fmt: str = "csv",
    out: str | None = None,
) -> None:
    """Write rows to ``out`` (or stdout when None) in the given format."""
    if fmt == "csv":
        text = render_csv(fieldnames, rows, meta)
    elif fmt == "json":
        text = render_json(fieldnames, rows, meta)
    else:
        raise ValueError(f"unknown output format: {fmt!r}")
    if out is None:
        sys.stdout.write(text)
    else:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
