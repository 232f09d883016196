"""Serialization: JSON schemas for trees/barcodes/decorations, CSV and PGM IO.

Every JSON document carries a ``format_version``; parsers reject unknown
major versions.  Infinite heights serialize as the string ``"inf"``; finite
floats go through ``repr`` round-tripping, so heights survive bit-exactly.
All writers go through an atomic temp-file + rename.
"""
from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .barcode import Barcode, Interval
from .decoration import DecoratedMergeTree, LiftedBar
from .filtration import WeightedGraph
from .mergetree import INF, MergeTree

FORMAT_VERSION = "1"


class SchemaError(ValueError):
    """Input does not match a documented schema."""


def _check_version(doc: dict, what: str) -> None:
    version = doc.get("format_version")
    if version is None:
        raise SchemaError(f"{what}: missing format_version")
    major = str(version).split(".")[0]
    if major != FORMAT_VERSION:
        raise SchemaError(f"{what}: unsupported major version {version!r}")


def _height_out(h: float):
    return "inf" if math.isinf(h) else h


def _height_in(x) -> float:
    if x == "inf":
        return INF
    if isinstance(x, (int, float)) and math.isfinite(x):
        return float(x)
    raise SchemaError(f"bad height {x!r}")


def _death_in(x) -> float:
    return INF if x == "inf" else _height_in(x)


# -- merge trees -------------------------------------------------------------


def merge_tree_to_json(tree: MergeTree) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "nodes": [
            {"id": n, "height": _height_out(tree.height[n]), "parent": tree.parent[n]}
            for n in tree.node_ids
        ],
    }


def merge_tree_from_json(doc: dict) -> MergeTree:
    _check_version(doc, "merge tree")
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise SchemaError("merge tree: nodes must be a non-empty list")
    parent: dict[int, int | None] = {}
    height: dict[int, float] = {}
    for rec in nodes:
        try:
            nid = int(rec["id"])
            parent[nid] = None if rec["parent"] is None else int(rec["parent"])
            height[nid] = _height_in(rec["height"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"merge tree: bad node record {rec!r}") from exc
    return MergeTree(parent=parent, height=height)


# -- barcodes ----------------------------------------------------------------


def barcode_to_json(bc: Barcode) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "degree": bc.degree,
        "bars": [{"birth": i.birth, "death": _height_out(i.death)} for i in bc.bars],
    }


def barcode_from_json(doc: dict) -> Barcode:
    _check_version(doc, "barcode")
    try:
        bars = tuple(Interval(float(b["birth"]), _death_in(b["death"])) for b in doc["bars"])
        return Barcode(bars=bars, degree=int(doc["degree"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"barcode: {exc}") from exc


# -- decorated merge trees ---------------------------------------------------


def dmt_to_json(dmt: DecoratedMergeTree) -> dict:
    doc = merge_tree_to_json(dmt.tree)
    doc["degree"] = dmt.degree
    doc["certified"] = dmt.certified
    bars = []
    for bar in dmt.lifted_bars:
        rec = {
            "birth": bar.interval.birth,
            "death": _height_out(bar.interval.death),
            "birth_edge": [bar.birth_edge, dmt.tree.parent[bar.birth_edge]],
            "death_edge": "root"
            if bar.death_edge is None
            else [bar.death_edge, dmt.tree.parent[bar.death_edge]],
        }
        if bar.birth_height is not None:
            rec["anchor_height"] = bar.birth_height
        bars.append(rec)
    doc["bars"] = bars
    return doc


def dmt_from_json(doc: dict) -> DecoratedMergeTree:
    tree = merge_tree_from_json(doc)
    if "degree" not in doc or "bars" not in doc:
        raise SchemaError("decorated merge tree: missing degree or bars")
    bars = []
    for rec in doc["bars"]:
        try:
            death_edge = None if rec["death_edge"] == "root" else int(rec["death_edge"][0])
            bars.append(
                LiftedBar(
                    interval=Interval(float(rec["birth"]), _death_in(rec["death"])),
                    birth_edge=int(rec["birth_edge"][0]),
                    death_edge=death_edge,
                    birth_height=rec.get("anchor_height"),
                )
            )
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise SchemaError(f"decorated merge tree: bad bar {rec!r}") from exc
    return DecoratedMergeTree(
        tree=tree,
        degree=int(doc["degree"]),
        lifted_bars=tuple(bars),
        certified=bool(doc.get("certified", True)),
    )


# -- text files ----------------------------------------------------------------


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def read_json(path: str) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return doc


def _parse_floats(line: str) -> list[float]:
    parts = [p for p in line.replace(",", " ").split() if p]
    return [float(p) for p in parts]


def read_series_csv(path: str) -> list[tuple[float, float]]:
    """CSV with columns t,f; a non-numeric first row is treated as a header."""
    rows = _read_numeric_rows(path, 2)
    return [(r[0], r[1]) for r in rows]


def read_matrix_csv(path: str) -> np.ndarray:
    rows = _read_numeric_rows(path, None)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SchemaError(f"{path}: ragged rows")
    return np.array(rows)


def read_points_csv(path: str) -> np.ndarray:
    return read_matrix_csv(path)


def _read_numeric_rows(path: str, width: int | None) -> list[list[float]]:
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals = _parse_floats(line)
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise SchemaError(f"{path}:{lineno}: not numeric")
            if width is not None and len(vals) != width:
                raise SchemaError(f"{path}:{lineno}: expected {width} columns")
            rows.append(vals)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_edge_list_csv(path: str) -> list[tuple[int, int]]:
    rows = _read_numeric_rows(path, 2)
    return [(int(u), int(v)) for u, v in rows]


def read_vertex_weights_csv(path: str) -> dict[int, float]:
    rows = _read_numeric_rows(path, 2)
    return {int(v): w for v, w in rows}


def graph_from_files(edges_path: str, weights_path: str) -> WeightedGraph:
    weights = read_vertex_weights_csv(weights_path)
    edges = read_edge_list_csv(edges_path)
    count = max(weights) + 1
    missing = [v for v in range(count) if v not in weights]
    if missing:
        raise SchemaError(f"{weights_path}: missing weights for vertices {missing[:5]}")
    return WeightedGraph(
        vertex_count=count,
        edges=tuple(edges),
        node_weights=tuple(weights[v] for v in range(count)),
    )


def read_pgm(path: str) -> np.ndarray:
    """Plain (P2, ASCII) PGM as grayscale values in [0, 1]."""
    with open(path) as fh:
        tokens: list[str] = []
        for line in fh:
            hash_at = line.find("#")
            if hash_at >= 0:
                line = line[:hash_at]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise SchemaError(f"{path}: only plain PGM (P2) is supported")
    try:
        cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        pixels = np.array([int(t) for t in tokens[4 : 4 + rows * cols]], dtype=float)
    except (IndexError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed PGM") from exc
    if pixels.size != rows * cols or maxval <= 0:
        raise SchemaError(f"{path}: malformed PGM payload")
    return (pixels / maxval).reshape(rows, cols)


def read_image(path: str) -> np.ndarray:
    if path.endswith(".pgm"):
        return read_pgm(path)
    return read_matrix_csv(path)


def matrix_to_csv(matrix: np.ndarray, names: list[str] | None = None) -> str:
    lines = []
    n = matrix.shape[1] if matrix.ndim == 2 else 0
    header = names if names is not None else [f"item{i}" for i in range(n)]
    lines.append(",".join(header))
    for row in np.atleast_2d(matrix):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def trace_to_csv(trace) -> str:
    lines = ["iteration,objective"]
    lines += [f"{i},{repr(float(v))}" for i, v in enumerate(trace)]
    return "\n".join(lines) + "\n"
