"""Shared random generators for the test suite."""
from __future__ import annotations

import math

import numpy as np

from dmt.barcode import Barcode, Interval
from dmt.decoration import DecoratedMergeTree, LiftedBar
from dmt.mergetree import INF, MergeTree


def random_tree(rng: np.random.Generator, max_leaves: int = 5, round_heights: bool = True) -> MergeTree:
    """Valid random merge tree built by merging components upward."""
    k = int(rng.integers(1, max_leaves + 1))
    heights = rng.uniform(0.0, 4.0, k)
    if round_heights:
        heights = np.round(heights, 3)
    nodes: list[tuple[int, float, int | None]] = [(i, float(h), None) for i, h in enumerate(heights)]
    parent: dict[int, int] = {}
    comps = list(range(k))
    nid = k
    cur = float(max(heights))
    while len(comps) > 1:
        step = float(rng.uniform(0.05, 1.0))
        cur = cur + (round(step, 3) if round_heights else step)
        take = 2 if len(comps) == 2 or rng.random() < 0.8 else 3
        pick = rng.choice(len(comps), size=take, replace=False)
        chosen = [comps[i] for i in pick]
        nodes.append((nid, cur, None))
        for c in chosen:
            parent[c] = nid
        comps = [c for c in comps if c not in chosen] + [nid]
        nid += 1
    nodes.append((nid, INF, None))
    parent[comps[0]] = nid
    return MergeTree.from_nodes([(i, h, parent.get(i)) for i, h, _ in nodes])


def random_barcode(rng: np.random.Generator, max_bars: int = 5, degree: int = 1,
                   essential_prob: float = 0.2) -> Barcode:
    bars = []
    for _ in range(int(rng.integers(0, max_bars + 1))):
        b = float(np.round(rng.uniform(0, 5), 3))
        if rng.random() < essential_prob:
            bars.append(Interval(b, INF))
        else:
            bars.append(Interval(b, b + float(np.round(rng.uniform(0, 4), 3))))
    return Barcode(tuple(bars), degree=degree)


def random_lift_dmt(rng: np.random.Generator, tree: MergeTree | None = None, max_bars: int = 4,
                    degree: int = 1, max_leaves: int = 5) -> DecoratedMergeTree:
    """Random decoration: anchors inside random edges, deaths above births."""
    if tree is None:
        tree = random_tree(rng, max_leaves)
    non_root = [n for n in tree.node_ids if n != tree.root]
    bars = []
    for _ in range(int(rng.integers(0, max_bars + 1))):
        u = int(rng.choice(non_root))
        p = tree.parent[u]
        lo = tree.height[u]
        hi = tree.height[p] if math.isfinite(tree.height[p]) else lo + 2.0
        b = float(np.round(lo + rng.uniform(0, 1) * (hi - lo) * 0.999, 4))
        child, _ = tree.ancestor_at(u, b)
        if rng.random() < 0.2:
            d = INF
            death_edge = None
        else:
            d = float(np.round(b + rng.uniform(0.05, 3.0), 4))
            death_edge = tree.ancestor_at(child, d)[0]
        bars.append(LiftedBar(interval=Interval(b, d), birth_edge=child, death_edge=death_edge))
    return DecoratedMergeTree(tree=tree, degree=degree, lifted_bars=tuple(bars))


def random_monotone_complex(rng: np.random.Generator, max_vertices: int = 6,
                            simplex_budget: int = 30):
    """Random filtered complex: vertices, a random edge subset, all fillable triangles."""
    from dmt.filtration import FilteredComplex, _sorted_complex

    n = int(rng.integers(1, max_vertices + 1))
    entries = [((i,), float(np.round(rng.uniform(0, 2), 3))) for i in range(n)]
    values = {(i,): v for (i,), v in entries}
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.5:
                val = max(values[(i,)], values[(j,)]) + float(np.round(rng.uniform(0, 1), 3))
                edges.append(((i, j), val))
                values[(i, j)] = val
    entries += edges
    triangles = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if (i, j) in values and (i, k) in values and (j, k) in values and rng.random() < 0.5:
                    val = max(values[(i, j)], values[(i, k)], values[(j, k)]) + float(
                        np.round(rng.uniform(0, 1), 3)
                    )
                    triangles.append(((i, j, k), val))
    entries += triangles
    entries = entries[:simplex_budget]
    # drop cofaces whose faces got truncated away
    kept = {verts for verts, _ in entries}
    entries = [
        (verts, val)
        for verts, val in entries
        if len(verts) == 1
        or all(tuple(f) in kept for f in __import__("itertools").combinations(verts, len(verts) - 1))
    ]
    return _sorted_complex(entries)
