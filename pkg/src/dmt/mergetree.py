"""Computational merge trees.

A merge tree is a rooted tree with a real height per node and a single root
at height ``math.inf``.  Every non-root node has exactly one parent at a
strictly larger height; equal-height siblings are fine, equal-height
parent/child pairs are not.  Node ids are stable integers assigned at
construction and preserved by transformations such as :func:`upsample`.

Positions strictly inside an edge are addressed as ``(child_id, height)``
with ``height(child) <= h < height(parent)``; decorations use these to avoid
mutating trees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

INF = math.inf


@dataclass(frozen=True, eq=False)
class MergeTree:
    parent: dict[int, int | None]
    height: dict[int, float]

    def __post_init__(self) -> None:
        if set(self.parent) != set(self.height):
            raise ValueError("parent and height must be keyed by the same node ids")
        if not self.parent:
            raise ValueError("merge tree must have at least one node")

    # -- derived structure ------------------------------------------------

    @cached_property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.parent))

    @cached_property
    def root(self) -> int:
        roots = [n for n, p in self.parent.items() if p is None]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        return roots[0]

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {n: [] for n in self.parent}
        for n, p in self.parent.items():
            if p is not None:
                out[p].append(n)
        return {n: tuple(sorted(c)) for n, c in out.items()}

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n in self.node_ids if not self.children[n] and n != self.root)

    def is_leaf(self, node: int) -> bool:
        return node in set(self.leaves)

    def _check_node(self, node: int) -> None:
        if node not in self.parent:
            raise KeyError(f"unknown node id {node}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_nodes(cls, nodes: Iterable[tuple[int, float, int | None]]) -> MergeTree:
        """Build from (id, height, parent_id) triples."""
        parent: dict[int, int | None] = {}
        height: dict[int, float] = {}
        for nid, h, p in nodes:
            if nid in parent:
                raise ValueError(f"duplicate node id {nid}")
            parent[nid] = p
            height[nid] = float(h)
        return cls(parent=parent, height=height)

    @classmethod
    def single_leaf(cls, h: float = 0.0) -> MergeTree:
        return cls.from_nodes([(0, h, 1), (1, INF, None)])

    # -- queries -----------------------------------------------------------

    def is_ancestor(self, anc: int, node: int) -> bool:
        """True when anc lies on the ancestor-or-self path of node."""
        self._check_node(anc)
        self._check_node(node)
        ha = self.height[anc]
        cur: int | None = node
        while cur is not None and self.height[cur] < ha:
            cur = self.parent[cur]
        return cur == anc

    def ancestor_at(self, node: int, h: float) -> tuple[int, float]:
        """Position on node's ancestor path at height h >= height(node).

        Returned as an edge position (child_id, h); the child is the deepest
        ancestor of node with height <= h.
        """
        self._check_node(node)
        if h < self.height[node]:
            raise ValueError(f"height {h} is below node {node}")
        cur = node
        while True:
            p = self.parent[cur]
            if p is None or self.height[p] > h:
                return cur, h
            cur = p

    def lca(self, u: int, v: int) -> int:
        self._check_node(u)
        self._check_node(v)
        while u != v:
            hu, hv = self.height[u], self.height[v]
            if hu < hv:
                u = self.parent[u]  # type: ignore[assignment]
            elif hv < hu:
                v = self.parent[v]  # type: ignore[assignment]
            else:
                u = self.parent[u]  # type: ignore[assignment]
                v = self.parent[v]  # type: ignore[assignment]
        return u

    def merge_height(self, u: int, v: int) -> float:
        return self.height[self.lca(u, v)]

    def lp_metric(self, u: int, v: int, p: float) -> float:
        """Distance ||(m - h(u), m - h(v))||_p with m the merge height."""
        if u == self.root or v == self.root:
            raise ValueError("lp metric is not defined at the root")
        if not (p >= 1):
            raise ValueError("p must be in [1, inf]")
        m = self.merge_height(u, v)
        a, b = m - self.height[u], m - self.height[v]
        if math.isinf(p):
            return max(a, b)
        return float((a**p + b**p) ** (1.0 / p))

    def finite_heights(self) -> list[float]:
        return [h for h in self.height.values() if math.isfinite(h)]

    # -- edge positions ----------------------------------------------------

    def position_is_ancestor(self, anc: tuple[int, float], pos: tuple[int, float]) -> bool:
        """True when edge position anc is ancestor-or-equal of edge position pos."""
        (ca, ha), (cp, hp) = anc, pos
        if ca == cp:
            return ha >= hp
        return self.is_ancestor(ca, cp)

    def position_merge_height(self, a: tuple[int, float], b: tuple[int, float]) -> float:
        if self.position_is_ancestor(a, b):
            return a[1]
        if self.position_is_ancestor(b, a):
            return b[1]
        return self.merge_height(a[0], b[0])


def validate_tree(tree: MergeTree) -> list[str]:
    """Check the merge-tree invariants; empty list means valid.

    Violations are reported per clause with the offending node ids.
    """
    problems: list[str] = []
    roots = [n for n, p in tree.parent.items() if p is None]
    if len(roots) != 1:
        problems.append(f"multiple roots: expected exactly one parentless node, found {sorted(roots)}")
    inf_nodes = sorted(n for n, h in tree.height.items() if math.isinf(h))
    if len(inf_nodes) != 1 or (roots and set(inf_nodes) != set(roots)):
        problems.append(f"root height: exactly the root must sit at infinity, infinite nodes {inf_nodes}")
    for n, p in tree.parent.items():
        if p is None:
            continue
        if p not in tree.parent:
            problems.append(f"dangling parent: node {n} points at unknown node {p}")
        elif tree.height[n] == tree.height[p]:
            problems.append(f"equal adjacent heights: node {n} and parent {p} at {tree.height[n]}")
        elif tree.height[n] > tree.height[p]:
            problems.append(f"inverted edge: node {n} above its parent {p}")
    # cycle / connectivity check via root walk
    if len(roots) == 1:
        root = roots[0]
        for n in tree.parent:
            seen = set()
            cur: int | None = n
            while cur is not None and cur not in seen:
                seen.add(cur)
                cur = tree.parent.get(cur)
            if cur is not None:
                problems.append(f"cycle through node {n}")
            elif root not in seen:
                problems.append(f"node {n} not connected to the root")
    return problems


@dataclass(frozen=True)
class Labeling:
    """Map from labels 1..n (stored 0-indexed) to nodes, surjective on leaves."""

    nodes: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def validate(self, tree: MergeTree) -> list[str]:
        problems = []
        for i, node in enumerate(self.nodes):
            if node not in tree.parent:
                problems.append(f"label {i + 1} targets unknown node {node}")
        missing = set(tree.leaves) - set(self.nodes)
        if missing:
            problems.append(f"labeling misses leaves {sorted(missing)}")
        return problems


def lca_matrix(tree: MergeTree, labeling: Labeling) -> np.ndarray:
    """Matrix of pairwise merge heights of the labeled nodes.

    Entries are finite; labels may not target the root.
    """
    bad = labeling.validate(tree)
    if bad:
        raise ValueError("; ".join(bad))
    if tree.root in labeling.nodes:
        raise ValueError("labels may not target the infinite root")
    uniq = sorted(set(labeling.nodes))
    sub = merge_height_matrix(tree, uniq)
    pos = {n: i for i, n in enumerate(uniq)}
    idx = np.array([pos[n] for n in labeling.nodes])
    return sub[np.ix_(idx, idx)]


def merge_height_matrix(tree: MergeTree, nodes: Sequence[int], root_cap: float = INF) -> np.ndarray:
    """Pairwise merge heights over a node subset, block-filled in one DFS.

    Merges realized only at the infinite root are reported as ``root_cap``.
    """
    index = {n: i for i, n in enumerate(nodes)}
    if tree.root in index:
        raise ValueError("the root cannot appear in a merge-height matrix")
    n = len(nodes)
    M = np.zeros((n, n))
    heights = tree.height

    # iterative post-order: gather, per tree node, the sub-list of requested
    # indices in its subtree, then stamp cross-child blocks with its height
    order: list[int] = []
    stack = [tree.root]
    while stack:
        x = stack.pop()
        order.append(x)
        stack.extend(tree.children[x])
    gathered: dict[int, np.ndarray] = {}
    for x in reversed(order):
        groups = [gathered.pop(c) for c in tree.children[x]]
        own = np.array([index[x]], dtype=np.intp) if x in index else np.empty(0, dtype=np.intp)
        h = root_cap if x == tree.root else heights[x]
        acc = own
        for g in groups:
            if len(acc) and len(g):
                M[np.ix_(acc, g)] = h
                M[np.ix_(g, acc)] = h
            acc = np.concatenate([acc, g])
        gathered[x] = acc
    for node, i in index.items():
        M[i, i] = heights[node]
    return M


def upsample(tree: MergeTree, mesh: float, anchor: float | None = None, top: float | None = None) -> MergeTree:
    """Insert degree-2 nodes at grid heights strictly inside every edge.

    The grid is ``{anchor + k * mesh}`` clipped to ``top``; both default to
    the tree's own finite height extremes.  Passing a common anchor/top for a
    pair of trees samples both on one grid.  Existing ids are preserved; the
    leaf set and all merge heights of pre-existing nodes are unchanged.
    """
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    finite = tree.finite_heights()
    lo = min(finite) if anchor is None else anchor
    hi = max(finite) if top is None else top
    if hi < lo:
        raise ValueError("grid top below the anchor")
    count = int(math.floor((hi - lo) / mesh + 1e-12)) + 1
    grid = [lo + k * mesh for k in range(count)]

    parent = dict(tree.parent)
    height = dict(tree.height)
    next_id = max(tree.parent) + 1
    for child in tree.node_ids:
        p = tree.parent[child]
        if p is None:
            continue
        h_lo, h_hi = tree.height[child], tree.height[p]
        inner = [g for g in grid if h_lo < g < h_hi]
        below = child
        for g in inner:
            parent[below] = next_id
            parent[next_id] = p
            height[next_id] = g
            below = next_id
            next_id += 1
    return MergeTree(parent=parent, height=height)
