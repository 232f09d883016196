"""Deterministic DOT and SVG emitters for decorated merge trees.

Heights run along the vertical axis; each lifted bar becomes one offset edge
spanning its birth and death heights next to its anchor's ancestor path.  The
root edge is drawn truncated with an arrow glyph.  Node ordering is fixed
(height, then id) so identical inputs yield byte-identical documents.
"""
from __future__ import annotations

import math

from .decoration import DecoratedMergeTree, simplify

CANVAS_W = 800.0
CANVAS_H = 600.0
MARGIN = 50.0
TREE_COLOR = "#2f4f4f"
BAR_COLOR = "#d62728"
ROOT_STUB = 40.0
BAR_OFFSET = 7.0


def render(dmt: DecoratedMergeTree, format: str = "svg", bar_threshold: float = 0.0, tree_threshold: float = 0.0) -> str:
    if format not in ("svg", "dot"):
        raise ValueError(f"unknown render format {format!r}")
    shown = simplify(dmt, bar_threshold, tree_threshold)
    if format == "dot":
        return _render_dot(shown)
    return _render_svg(shown)


def _render_dot(dmt: DecoratedMergeTree) -> str:
    tree = dmt.tree
    lines = ["digraph mergetree {", "  rankdir=BT;"]
    order = sorted(tree.node_ids, key=lambda n: (tree.height[n], n))
    for n in order:
        h = tree.height[n]
        label = "inf" if math.isinf(h) else repr(h)
        shape = "point" if n == tree.root else "circle"
        lines.append(f'  n{n} [label="{label}", shape={shape}];')
    for n in order:
        p = tree.parent[n]
        if p is not None:
            lines.append(f"  n{n} -> n{p};")
    for i, bar in enumerate(dmt.lifted_bars):
        d = "inf" if bar.interval.is_essential else repr(bar.interval.death)
        lines.append(
            f'  bar{i} [label="[{bar.interval.birth!r}, {d})", shape=box, color="{BAR_COLOR}"];'
        )
        lines.append(f'  bar{i} -> n{bar.birth_edge} [style=dashed, color="{BAR_COLOR}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _layout(tree) -> dict[int, float]:
    """Leaf order by (height, id); internal nodes centered over their children."""
    xs: dict[int, float] = {}
    leaves = sorted(tree.leaves, key=lambda n: (tree.height[n], n))
    for i, leaf in enumerate(leaves):
        xs[leaf] = float(i)
    order = sorted(tree.node_ids, key=lambda n: (tree.height[n], n))
    for n in order:
        if n in xs:
            continue
        kids = tree.children[n]
        if kids:
            xs[n] = sum(xs[c] for c in kids) / len(kids)
        else:
            xs[n] = 0.0
    return xs


def _render_svg(dmt: DecoratedMergeTree) -> str:
    tree = dmt.tree
    finite = tree.finite_heights()
    h_lo, h_hi = min(finite), max(finite)
    deaths = [b.interval.death for b in dmt.lifted_bars if not b.interval.is_essential]
    h_hi = max([h_hi] + deaths)
    span = max(h_hi - h_lo, 1e-9)
    xs = _layout(tree)
    x_max = max(xs.values(), default=1.0)

    def X(x: float) -> float:
        return MARGIN + (CANVAS_W - 2 * MARGIN) * (x / max(x_max, 1.0))

    def Y(h: float) -> float:
        return CANVAS_H - MARGIN - (CANVAS_H - 2 * MARGIN - ROOT_STUB) * ((h - h_lo) / span)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W:.0f}" height="{CANVAS_H:.0f}" '
        f'viewBox="0 0 {CANVAS_W:.0f} {CANVAS_H:.0f}">',
        f'  <!-- heights {h_lo!r} to {h_hi!r}; tree {TREE_COLOR}, bars {BAR_COLOR} -->',
    ]
    order = sorted(tree.node_ids, key=lambda n: (tree.height[n], n))
    for n in order:
        p = tree.parent[n]
        if p is None:
            continue
        x1, y1 = X(xs[n]), Y(tree.height[n])
        if p == tree.root:
            y2 = Y(h_hi) - ROOT_STUB
            parts.append(
                f'  <line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x1:.2f}" y2="{y2:.2f}" '
                f'stroke="{TREE_COLOR}" stroke-width="2"/>'
            )
            parts.append(
                f'  <path d="M {x1 - 5:.2f} {y2 + 8:.2f} L {x1:.2f} {y2:.2f} L {x1 + 5:.2f} {y2 + 8:.2f}" '
                f'fill="none" stroke="{TREE_COLOR}" stroke-width="2"/>'
            )
        else:
            x2, y2 = X(xs[p]), Y(tree.height[p])
            parts.append(
                f'  <polyline points="{x1:.2f},{y1:.2f} {x1:.2f},{y2:.2f} {x2:.2f},{y2:.2f}" '
                f'fill="none" stroke="{TREE_COLOR}" stroke-width="2"/>'
            )
    for n in order:
        if n == tree.root:
            continue
        parts.append(
            f'  <circle cx="{X(xs[n]):.2f}" cy="{Y(tree.height[n]):.2f}" r="3" fill="{TREE_COLOR}"/>'
        )
    for i, bar in enumerate(sorted(dmt.lifted_bars, key=lambda b: (b.interval.birth, b.interval.death, b.birth_edge))):
        x = X(xs[bar.birth_edge]) + BAR_OFFSET * (1 + i % 3)
        y1 = Y(bar.interval.birth)
        death = h_hi if bar.interval.is_essential else bar.interval.death
        y2 = Y(death)
        parts.append(
            f'  <line x1="{x:.2f}" y1="{y1:.2f}" x2="{x:.2f}" y2="{y2:.2f}" '
            f'stroke="{BAR_COLOR}" stroke-width="3"/>'
        )
        if bar.interval.is_essential:
            parts.append(
                f'  <path d="M {x - 4:.2f} {y2 + 7:.2f} L {x:.2f} {y2:.2f} L {x + 4:.2f} {y2 + 7:.2f}" '
                f'fill="none" stroke="{BAR_COLOR}" stroke-width="2"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
