"""CSV / JSON artifact writers.

Every artifact starts with its metadata so a table can be reproduced from its
own header: CSV files carry ``# key: value`` comment lines, JSON files are
``{"metadata": ..., "report": ...}``. No timestamps are written, which keeps
bodies byte-identical for identical runs.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel, Field

from .. import __version__


class OutputMetadata(BaseModel):
    tool: str = "metastab"
    version: str = __version__
    subcommand: str
    seed: Optional[int] = None
    params: dict[str, Any] = Field(default_factory=dict)
    # derived values worth keeping next to the table (e.g. (1/N) log H_N)
    summary: dict[str, Any] = Field(default_factory=dict)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return _jsonable(value.model_dump())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return _jsonable({f.name: getattr(value, f.name) for f in dataclasses.fields(value)})
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [_jsonable(v) for v in items]
    if isinstance(value, float) and not math.isfinite(value):
        # JSON has no infinities; keep them readable
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if hasattr(value, "item") and callable(value.item):
        return _jsonable(value.item())
    return value


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], metadata: OutputMetadata) -> str:
    buf = io.StringIO()
    meta = metadata.model_dump()
    params = meta.pop("params")
    summary = meta.pop("summary")
    for key, value in meta.items():
        buf.write(f"# {key}: {_cell(value)}\n")
    for key in sorted(params):
        buf.write(f"# param.{key}: {json.dumps(_jsonable(params[key]), sort_keys=True)}\n")
    for key in sorted(summary):
        buf.write(f"# summary.{key}: {json.dumps(_jsonable(summary[key]), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(report: Any, metadata: OutputMetadata) -> str:
    payload = {"metadata": _jsonable(metadata), "report": _jsonable(report)}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def emit(text: str, output: Optional[str | Path]) -> None:
    """Write to ``output`` or stdout when it is None or ``-``."""
    if output is None or str(output) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    p = Path(output)
    if p.parent and str(p.parent) not in ("", "."):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def read_csv_metadata(text: str) -> dict[str, str]:
    meta: dict[str, str] = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].partition(":")
        meta[key.strip()] = value.strip()
    return meta
