"""Builders turning raw data into merge trees and filtered complexes.

Scalar series, distance matrices and node-weighted graphs all reduce to the
same sublevel sweep: vertices appear at their values, connections activate at
theirs, and a union-find pass in increasing value order records component
births and merges.  Values equal within a sweep step are processed as one
batch, which collapses plateaus and keeps parent/child heights strictly
ordered.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mergetree import INF, MergeTree

_SYM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """Simplices with monotone filtration values, in reduction order.

    Each entry is (ascending vertex tuple, value); the list is sorted by
    (value, dimension, vertex tuple) and faces precede cofaces.
    """

    simplices: tuple[tuple[tuple[int, ...], float], ...]

    def __len__(self) -> int:
        return len(self.simplices)

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {verts: i for i, (verts, _) in enumerate(self.simplices)}

    def dimension(self, i: int) -> int:
        return len(self.simplices[i][0]) - 1

    def value(self, i: int) -> float:
        return self.simplices[i][1]

    @property
    def max_dimension(self) -> int:
        return max((len(v) - 1 for v, _ in self.simplices), default=-1)

    def validate(self) -> list[str]:
        problems = []
        key = [(val, len(v), v) for v, val in self.simplices]
        if key != sorted(key):
            problems.append("simplices not sorted by (value, dimension, vertices)")
        if len(self.index) != len(self.simplices):
            problems.append("duplicate simplices")
        for verts, val in self.simplices:
            if list(verts) != sorted(set(verts)):
                problems.append(f"vertex list {verts} not strictly ascending")
                continue
            if len(verts) > 1:
                for face in itertools.combinations(verts, len(verts) - 1):
                    j = self.index.get(face)
                    if j is None:
                        problems.append(f"missing face {face} of {verts}")
                    elif self.simplices[j][1] > val:
                        problems.append(f"face {face} enters after coface {verts}")
        return problems


def _sorted_complex(entries: list[tuple[tuple[int, ...], float]]) -> FilteredComplex:
    entries.sort(key=lambda e: (e[1], len(e[0]), e[0]))
    return FilteredComplex(simplices=tuple(entries))


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    node_weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.node_weights) != self.vertex_count:
            raise ValueError("one weight per vertex required")
        canon = []
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u},{v}) out of range")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(canon))
        object.__setattr__(self, "node_weights", tuple(float(w) for w in self.node_weights))

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


# ---------------------------------------------------------------------------
# sublevel sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    tree: MergeTree
    vertex_node: dict[int, int]  # vertex -> node of its component right after its birth step
    node_vertex: dict[int, int]  # created node -> lowest-id vertex that triggered it
    vertex_leaf: dict[int, int]  # vertex -> a leaf below its birth position (min id)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[int, int] = {}

    def add(self, x: int) -> None:
        self.parent[x] = x

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def sublevel_sweep(vertex_values: list[float], edges: list[tuple[int, int, float]]) -> SweepResult:
    """Merge tree of a vertex/edge-filtered graph.

    Every edge value must be >= both endpoint values.  Events sharing a value
    form one batch: a batch group with no prior components becomes a single
    leaf, a group joining >= 2 prior components becomes one merge node whose
    children are their tops, and vertices absorbed into a single existing
    component create no node.
    """
    if not vertex_values:
        raise ValueError("at least one vertex required")
    for u, v, val in edges:
        if val < vertex_values[u] or val < vertex_values[v]:
            raise ValueError(f"edge ({u},{v}) enters before an endpoint")

    events: dict[float, tuple[list[int], list[tuple[int, int]]]] = {}
    for i, h in enumerate(vertex_values):
        events.setdefault(h, ([], []))[0].append(i)
    for u, v, val in edges:
        events.setdefault(val, ([], []))[1].append((min(u, v), max(u, v)))

    uf = _UnionFind()
    comp_top: dict[int, int | None] = {}  # uf root -> top node id (None while unborn this batch)
    parent: dict[int, int | None] = {}
    height: dict[int, float] = {}
    node_vertex: dict[int, int] = {}
    vertex_node: dict[int, int] = {}
    next_id = 0

    for h in sorted(events):
        born, batch_edges = events[h]
        touched: set[int] = set()
        pre_tops: dict[int, int] = {}  # pre-batch root -> top
        for v in sorted(born):
            uf.add(v)
            comp_top[v] = None
            touched.add(v)
        for u, v in sorted(batch_edges):
            for end in (u, v):
                r = uf.find(end)
                if comp_top.get(r) is not None and r not in pre_tops:
                    pre_tops[r] = comp_top[r]  # type: ignore[index]
                touched.add(r)
            uf.union(u, v)
        # regroup what the batch connected
        groups: dict[int, list[int]] = {}
        for x in touched:
            groups.setdefault(uf.find(x), []).append(x)
        for root in sorted(groups):
            members = groups[root]
            tops = sorted({pre_tops[m] for m in members if m in pre_tops})
            newborn = sorted(m for m in members if comp_top.get(m, 0) is None)
            lingering = [m for m in members if m not in pre_tops and comp_top.get(m, 0) is not None]
            tops += sorted({comp_top[m] for m in lingering})  # type: ignore[misc]
            tops = sorted(set(tops))
            if not tops:
                node = next_id
                next_id += 1
                parent[node] = None
                height[node] = h
                node_vertex[node] = newborn[0]
                top = node
            elif len(tops) == 1:
                top = tops[0]
            else:
                node = next_id
                next_id += 1
                parent[node] = None
                height[node] = h
                node_vertex[node] = newborn[0] if newborn else node_vertex[tops[0]]
                for t in tops:
                    parent[t] = node
                top = node
            comp_top[root] = top
            for m in members:
                comp_top[m] = top
            for v in newborn:
                vertex_node[v] = top

    root_id = next_id
    parent[root_id] = None
    height[root_id] = INF
    remaining = sorted({comp_top[uf.find(v)] for v in range(len(vertex_values))})  # type: ignore[arg-type]
    for t in remaining:
        parent[t] = root_id

    tree = MergeTree(parent=parent, height=height)
    leaf_of: dict[int, int] = {}
    for node in sorted(tree.node_ids):
        cur = node
        while tree.children[cur]:
            cur = min(tree.children[cur])
        leaf_of[node] = cur
    vertex_leaf = {v: leaf_of[n] for v, n in vertex_node.items()}
    return SweepResult(tree=tree, vertex_node=vertex_node, node_vertex=node_vertex, vertex_leaf=vertex_leaf)


# ---------------------------------------------------------------------------
# producers
# ---------------------------------------------------------------------------


def scalar_to_merge_tree(samples: list[tuple[float, float]]) -> MergeTree:
    return scalar_sweep(samples).tree


def scalar_sweep(samples: list[tuple[float, float]]) -> SweepResult:
    """Sublevel merge tree of a piecewise-linear scalar series.

    One leaf per strict local minimum (plateaus collapse), one merge node per
    interior maximum joining two components, root at infinity.
    """
    if not samples:
        raise ValueError("empty series")
    ts = [t for t, _ in samples]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("sample times must be strictly increasing")
    values = [float(f) for _, f in samples]
    edges = [(i, i + 1, max(values[i], values[i + 1])) for i in range(len(values) - 1)]
    return sublevel_sweep(values, edges)


def _check_distance_matrix(dist: np.ndarray) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError("distance matrix must be square")
    if np.abs(dist - dist.T).max(initial=0.0) > _SYM_TOL:
        raise ValueError("distance matrix must be symmetric")
    if np.any(dist < 0):
        raise ValueError("distances must be non-negative")
    if np.any(np.diag(dist) != 0):
        raise ValueError("distance matrix must have a zero diagonal")
    return (dist + dist.T) / 2


def single_linkage_tree(dist: np.ndarray) -> MergeTree:
    return single_linkage_sweep(dist).tree


def single_linkage_sweep(dist: np.ndarray) -> SweepResult:
    """Single-linkage dendrogram: leaves at height 0, merges at MST distances."""
    dist = _check_distance_matrix(dist)
    n = dist.shape[0]
    values = [0.0] * n
    edges = [(i, j, float(dist[i, j])) for i in range(n) for j in range(i + 1, n)]
    return sublevel_sweep(values, edges)


def vietoris_rips(dist: np.ndarray, max_dim: int, max_radius: float) -> FilteredComplex:
    """Vietoris-Rips filtration: vertices at 0, simplices at their diameter."""
    if max_dim not in (1, 2):
        raise ValueError("max_dim must be 1 or 2")
    dist = _check_distance_matrix(dist)
    n = dist.shape[0]
    entries: list[tuple[tuple[int, ...], float]] = [((i,), 0.0) for i in range(n)]
    within = dist <= max_radius
    for i in range(n):
        for j in range(i + 1, n):
            if within[i, j]:
                entries.append(((i, j), float(dist[i, j])))
    if max_dim >= 2:
        neighbors = [np.flatnonzero(within[i]) for i in range(n)]
        for i in range(n):
            cand = neighbors[i][neighbors[i] > i]
            for a, j in enumerate(cand):
                for k in cand[a + 1 :]:
                    if within[j, k]:
                        val = max(dist[i, j], dist[i, k], dist[j, k])
                        entries.append(((i, int(j), int(k)), float(val)))
    return _sorted_complex(entries)


def graph_sublevel_complex(
    g: WeightedGraph,
    add_rips_triangles: bool = False,
    hop_threshold: int = 2,
) -> FilteredComplex:
    """Sublevel filtration of a node-weighted graph.

    Vertices enter at their weight and edges at the max endpoint weight.
    With the triangle flag, 2-simplices are added for vertex triples at
    mutual hop distance <= hop_threshold, at the max member weight; hop pairs
    that are not graph edges get filler 1-simplices at the smallest value of
    a triangle needing them, keeping the complex closed under faces.
    """
    w = g.node_weights
    entries: list[tuple[tuple[int, ...], float]] = [((i,), w[i]) for i in range(g.vertex_count)]
    edge_set = set(g.edges)
    for u, v in g.edges:
        entries.append(((u, v), max(w[u], w[v])))
    if add_rips_triangles:
        if hop_threshold < 1:
            raise ValueError("hop threshold must be >= 1")
        hop = _hop_distances(g, cap=hop_threshold)
        filler: dict[tuple[int, int], float] = {}
        n = g.vertex_count
        for i in range(n):
            near_i = [j for j in range(i + 1, n) if hop[i][j] <= hop_threshold]
            for a, j in enumerate(near_i):
                for k in near_i[a + 1 :]:
                    if hop[j][k] <= hop_threshold:
                        val = max(w[i], w[j], w[k])
                        entries.append(((i, j, k), float(val)))
                        for pair in ((i, j), (i, k), (j, k)):
                            if pair not in edge_set:
                                filler[pair] = min(filler.get(pair, INF), val)
        entries.extend((pair, val) for pair, val in sorted(filler.items()))
    return _sorted_complex(entries)


def _hop_distances(g: WeightedGraph, cap: int) -> list[dict[int, int]]:
    """Unweighted shortest-path distances, truncated at cap hops."""
    out: list[dict[int, int]] = []
    for src in range(g.vertex_count):
        dist = {src: 0}
        frontier = [src]
        for d in range(1, cap + 1):
            nxt = []
            for x in frontier:
                for y in g.adjacency[x]:
                    if y not in dist:
                        dist[y] = d
                        nxt.append(y)
            frontier = nxt
        out.append(dist)
    return [{j: d.get(j, cap + 1) for j in range(g.vertex_count)} for d in out]


def graph_merge_tree(g: WeightedGraph) -> MergeTree:
    return graph_sweep(g).tree


def graph_sweep(g: WeightedGraph, record_all_vertices: bool = False) -> SweepResult:
    """Merge tree of the vertex-weight sublevel filtration of a graph.

    Disconnected components never merge at finite height; they hang directly
    under the infinite root.  With ``record_all_vertices`` every graph vertex
    owns a tree node at its own weight: vertices absorbed into an existing
    component get a degree-2 node on their component's path (vertices tied at
    an existing node's height share it), which is what node matching needs.
    """
    w = list(g.node_weights)
    edges = [(u, v, max(w[u], w[v])) for u, v in g.edges]
    res = sublevel_sweep(w, edges)
    if not record_all_vertices:
        return res
    parent = dict(res.tree.parent)
    height = dict(res.tree.height)
    node_vertex = dict(res.node_vertex)
    vertex_node = dict(res.vertex_node)
    next_id = max(parent) + 1

    def position_node(start: int, h: float) -> tuple[int, bool]:
        cur = start
        while True:
            if height[cur] == h:
                return cur, True
            p = parent[cur]
            if p is None or height[p] > h:
                return cur, False
            cur = p

    for v in sorted(range(g.vertex_count), key=lambda v: (w[v], v)):
        anchor = vertex_node[v]
        node, exact = position_node(anchor, w[v])
        if exact:
            vertex_node[v] = node
            continue
        old_parent = parent[node]
        parent[node] = next_id
        parent[next_id] = old_parent
        height[next_id] = w[v]
        node_vertex[next_id] = v
        vertex_node[v] = next_id
        next_id += 1

    tree = MergeTree(parent=parent, height=height)
    return SweepResult(
        tree=tree,
        vertex_node=vertex_node,
        node_vertex=node_vertex,
        vertex_leaf=dict(res.vertex_leaf),
    )


def image_to_grid_graph(pixels: np.ndarray, eight_connected: bool = False) -> WeightedGraph:
    """Grid graph of a grayscale image; 4-neighborhood unless flagged."""
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim != 2 or pixels.size == 0:
        raise ValueError("pixels must be a non-empty 2d matrix")
    rows, cols = pixels.shape
    idx = lambda r, c: r * cols + c
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows:
                edges.append((idx(r, c), idx(r + 1, c)))
            if eight_connected:
                if r + 1 < rows and c + 1 < cols:
                    edges.append((idx(r, c), idx(r + 1, c + 1)))
                if r + 1 < rows and c - 1 >= 0:
                    edges.append((idx(r, c), idx(r + 1, c - 1)))
    return WeightedGraph(
        vertex_count=rows * cols,
        edges=tuple(edges),
        node_weights=tuple(pixels.ravel()),
    )


def sliding_window(series: list[tuple[float, float]], d: int, tau: float) -> np.ndarray:
    """Delay embedding t -> (f(t), f(t+tau), ..., f(t+d*tau)) at exact offsets."""
    if d < 0:
        raise ValueError("window dimension d must be >= 0")
    if len(series) < 2 and d > 0:
        raise ValueError("series too short")
    ts = np.array([t for t, _ in series])
    fs = np.array([f for _, f in series])
    if len(ts) > 1:
        steps = np.diff(ts)
        spacing = steps[0]
        if spacing <= 0 or np.abs(steps - spacing).max() > 1e-9 * max(1.0, abs(spacing)):
            raise ValueError("series must be uniformly spaced")
    else:
        spacing = 1.0
    if d == 0:
        return fs[:, None].copy()
    if tau <= 0:
        raise ValueError("tau must be positive")
    step_f = tau / spacing
    step = round(step_f)
    if abs(step_f - step) > 1e-9 or step < 1:
        raise ValueError("tau must be a positive integer multiple of the sample spacing")
    span = d * step
    if span > len(fs) - 1:
        raise ValueError("window d*tau exceeds the series span")
    count = len(fs) - span
    return np.stack([fs[i : i + span + 1 : step] for i in range(count)])


def density_subsample(points: np.ndarray, k: int, keep_fraction: float) -> np.ndarray:
    """Keep the densest ceil(keep_fraction * n) points, by k-NN radius.

    Points are ranked by distance to their k-th nearest neighbor (ascending,
    ties by index) and returned in their original order.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty 2d array")
    n = len(points)
    if not (0 < keep_fraction <= 1):
        raise ValueError("keep_fraction must be in (0, 1]")
    if not (1 <= k < n):
        raise ValueError("k must satisfy 1 <= k < n")
    if keep_fraction == 1.0:
        return points.copy()
    diffs = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=2))
    radii = np.sort(dist, axis=1)[:, k]
    keep = math.ceil(keep_fraction * n)
    order = sorted(range(n), key=lambda i: (radii[i], i))
    chosen = sorted(order[:keep])
    return points[chosen]
