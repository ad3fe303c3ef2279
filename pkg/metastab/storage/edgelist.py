"""Edge-list text format.

    # comment / metadata lines (``# key: value``)
    nodes N
    u v m          one line per stored pair, u < v, sorted

``discarded_stubs`` travels as a metadata comment so a configuration-model
graph keeps its diagnostics across a write/read cycle.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from ..core.errors import ParameterError
from ..services.graph import Graph


def format_edge_list(g: Graph, metadata: Optional[Mapping[str, object]] = None) -> str:
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {value}")
    lines.append(f"# discarded_stubs: {g.discarded_stubs}")
    lines.append(f"nodes {g.n_nodes}")
    for a, b, m in zip(g.u.tolist(), g.v.tolist(), g.mult.tolist()):
        lines.append(f"{a} {b} {m}")
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path: str | Path, metadata: Optional[Mapping[str, object]] = None) -> None:
    p = Path(path)
    if p.parent and str(p.parent) not in ("", "."):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_edge_list(g, metadata), encoding="utf-8")


def parse_edge_list(text: str, source: str = "<string>") -> tuple[Graph, dict[str, str]]:
    metadata: dict[str, str] = {}
    n_nodes: Optional[int] = None
    rows: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        parts = line.split()
        try:
            if parts[0] == "nodes":
                if n_nodes is not None or len(parts) != 2:
                    raise ParameterError(f"{source}:{lineno}: duplicate or malformed 'nodes' header")
                n_nodes = int(parts[1])
                continue
            if n_nodes is None:
                raise ParameterError(f"{source}:{lineno}: edge before 'nodes N' header")
            if len(parts) not in (2, 3):
                raise ParameterError(f"{source}:{lineno}: expected 'u v [multiplicity]', got {raw!r}")
            rows.append((int(parts[0]), int(parts[1]), int(parts[2]) if len(parts) == 3 else 1))
        except ValueError as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"{source}:{lineno}: not an integer in {raw!r}") from e
    if n_nodes is None:
        raise ParameterError(f"{source}: missing 'nodes N' header")

    discarded = int(metadata.get("discarded_stubs", "0") or 0)
    if rows:
        arr = np.asarray(rows, dtype=np.int64)
        if np.all(arr[:, 0] < arr[:, 1]) and np.all(np.diff(arr[:, 0] * n_nodes + arr[:, 1]) > 0):
            g = Graph(n_nodes=n_nodes, u=arr[:, 0], v=arr[:, 1], mult=arr[:, 2], discarded_stubs=discarded)
        else:
            # hand-written files may be unsorted or list a pair twice
            g = Graph.from_edges(n_nodes, rows, discarded_stubs=discarded)
    else:
        g = Graph.from_edges(n_nodes, [], discarded_stubs=discarded)
    return g, metadata


def read_edge_list(path: str | Path) -> Graph:
    p = Path(path)
    if not p.exists():
        raise ParameterError(f"graph file not found: {p}")
    return parse_edge_list(p.read_text(encoding="utf-8"), source=str(p))[0]
