"""CSV / JSON emission with a reproducibility header and no timestamps."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .config import RunHeader


def _cell(v):
    if hasattr(v, "item"):  # numpy scalars
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def _json_value(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


class OutputSink:
    """Writes named tables into ``out_dir`` as ``<name>.csv`` or ``<name>.json``."""

    def __init__(self, out_dir, fmt: str, header: RunHeader):
        if fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {fmt!r}")
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.header = header
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / f"{name}.{self.fmt}"

    def render(self, columns, rows, notes=()) -> str:
        if self.fmt == "json":
            doc = dict(self.header.as_dict())
            if notes:
                doc["notes"] = list(notes)
            doc["columns"] = list(columns)
            doc["rows"] = [dict(zip(columns, (_json_value(v) for v in r))) for r in rows]
            return json.dumps(doc, indent=1, sort_keys=False) + "\n"
        buf = io.StringIO()
        for line in self.header.lines():
            buf.write(line + "\n")
        for note in notes:
            buf.write(f"# note: {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def write(self, name: str, columns, rows, notes=(), partial: bool = False) -> Path:
        p = self.path(name)
        if partial:
            p = p.with_name(p.name + ".partial")
        p.write_text(self.render(columns, list(rows), notes))
        self.written.append(p)
        return p
