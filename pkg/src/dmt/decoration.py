"""Lift decorations: attaching barcodes to merge trees.

Each bar of a degree-k barcode is lifted onto the merge tree between its
birth point (the ancestor of its birth simplex at the birth height) and the
ancestor at its death height.  Anchors are stored as edge positions
``(child_id, height)`` so the tree itself is never mutated.  The barcode seen
from any node follows by intersecting bars with the node's up set, which for
a leaf v and a bar anchored at p is ``[merge(p, v), death)`` when p is off
v's ancestor path and the bar itself otherwise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

from .barcode import Barcode, Interval
from .filtration import FilteredComplex
from .mergetree import MergeTree
from .persistence import PersistencePair


@dataclass(frozen=True)
class LiftedBar:
    interval: Interval
    birth_edge: int  # child id of the edge carrying the birth anchor
    death_edge: int | None  # child id at the death height; None at the root
    birth_height: float | None = None  # only set when clamped up to a leaf

    @property
    def anchor_height(self) -> float:
        return self.interval.birth if self.birth_height is None else self.birth_height

    def birth_position(self) -> tuple[int, float]:
        return (self.birth_edge, self.anchor_height)


@dataclass(frozen=True, eq=False)
class DecoratedMergeTree:
    tree: MergeTree
    degree: int
    lifted_bars: tuple[LiftedBar, ...]
    certified: bool = True

    @cached_property
    def leaf_index(self) -> dict[int, tuple[tuple[float, int], ...]]:
        """Per leaf: (merge height with each bar's birth anchor, bar index)."""
        out: dict[int, tuple[tuple[float, int], ...]] = {}
        for leaf in self.tree.leaves:
            leaf_pos = (leaf, self.tree.height[leaf])
            entries = []
            for i, bar in enumerate(self.lifted_bars):
                pos = bar.birth_position()
                if self.tree.position_is_ancestor(pos, leaf_pos):
                    m = bar.interval.birth
                else:
                    m = self.tree.merge_height(pos[0], leaf)
                entries.append((m, i))
            out[leaf] = tuple(entries)
        return out

    def validate(self) -> list[str]:
        problems = []
        for i, bar in enumerate(self.lifted_bars):
            c = bar.birth_edge
            if c not in self.tree.parent or c == self.tree.root:
                problems.append(f"bar {i}: birth edge child {c} invalid")
                continue
            p = self.tree.parent[c]
            h = bar.anchor_height
            if not (self.tree.height[c] <= h < self.tree.height[p]):
                problems.append(f"bar {i}: birth anchor height {h} outside edge span")
            if h < bar.interval.birth:
                problems.append(f"bar {i}: anchor below the bar's birth")
            if bar.death_edge is None:
                if not bar.interval.is_essential:
                    problems.append(f"bar {i}: finite bar anchored at the root")
            else:
                dc = bar.death_edge
                if dc not in self.tree.parent or dc == self.tree.root:
                    problems.append(f"bar {i}: death edge child {dc} invalid")
                    continue
                dp = self.tree.parent[dc]
                d = bar.interval.death
                if not (self.tree.height[dc] <= d < self.tree.height[dp]):
                    problems.append(f"bar {i}: death anchor height {d} outside edge span")
                if not self.tree.position_is_ancestor((dc, d), bar.birth_position()):
                    problems.append(f"bar {i}: birth anchor not below death anchor")
        return problems


def validate_dmt(dmt: DecoratedMergeTree) -> list[str]:
    return dmt.validate()


def truncate_barcode(b: Barcode, h: float) -> Barcode:
    """Restrict every bar to heights >= h, dropping bars that die before h."""
    bars = []
    for bar in b.bars:
        t = bar.truncated(h)
        if t is not None:
            bars.append(t)
    return Barcode(bars=tuple(bars), degree=b.degree)


def lift_decorate(
    tree: MergeTree,
    complex: FilteredComplex,
    pairs: list[PersistencePair],
    degree: int,
    vertex_to_leaf: dict[int, int],
) -> DecoratedMergeTree:
    """Lift the degree-k bars of a filtration onto its merge tree.

    The birth anchor of a bar is the position at the birth height on the
    ancestor path of its birth simplex's leaves; all vertices of the birth
    simplex must agree on it.  Zero-length bars are dropped.  Anchors below
    their leaf (possible only through numerical round-off in the inputs) are
    clamped up to the leaf height with a warning.
    """
    bars: list[LiftedBar] = []
    for pair in pairs:
        if pair.degree != degree or pair.interval.is_empty:
            continue
        verts = complex.simplices[pair.birth_simplex][0]
        b, d = pair.interval.birth, pair.interval.death
        positions = set()
        for v in verts:
            leaf = vertex_to_leaf.get(v)
            if leaf is None:
                raise ValueError(f"vertex {v} has no leaf image")
            h_leaf = tree.height[leaf]
            if b < h_leaf:
                warnings.warn(
                    f"bar birth {b} below leaf height {h_leaf}; anchor clamped",
                    RuntimeWarning,
                    stacklevel=2,
                )
                positions.add((tree.ancestor_at(leaf, h_leaf), h_leaf))
            else:
                positions.add((tree.ancestor_at(leaf, b), b))
        if len(positions) != 1:
            raise ValueError(
                f"inconsistent inputs: birth simplex {verts} vertices disagree on the "
                f"height-{b} ancestor"
            )
        ((child, _), anchor_h) = positions.pop()
        clamped = anchor_h if anchor_h != b else None
        if math.isinf(d):
            death_edge = None
        else:
            death_edge = tree.ancestor_at(child, d)[0]
        bars.append(
            LiftedBar(
                interval=pair.interval,
                birth_edge=child,
                death_edge=death_edge,
                birth_height=clamped,
            )
        )
    dmt = DecoratedMergeTree(tree=tree, degree=degree, lifted_bars=tuple(bars))
    cert = check_disjointness(dmt)
    if not cert.ok:
        dmt = DecoratedMergeTree(tree=tree, degree=degree, lifted_bars=tuple(bars), certified=False)
    return dmt


@dataclass(frozen=True)
class DisjointnessCertificate:
    ok: bool
    violations: tuple[tuple[int, int], ...]  # pairs of bar indices


def check_disjointness(dmt: DecoratedMergeTree) -> DisjointnessCertificate:
    """Certify that bars with incomparable birth points die before merging.

    When this holds, the lift decoration agrees with the true decorated merge
    tree; otherwise all offending bar pairs are reported.
    """
    tree = dmt.tree
    bad = []
    bars = dmt.lifted_bars
    for i in range(len(bars)):
        pi = bars[i].birth_position()
        for j in range(i + 1, len(bars)):
            pj = bars[j].birth_position()
            if tree.position_is_ancestor(pi, pj) or tree.position_is_ancestor(pj, pi):
                continue
            merge = tree.position_merge_height(pi, pj)
            if min(bars[i].interval.death, bars[j].interval.death) >= merge:
                bad.append((i, j))
    return DisjointnessCertificate(ok=not bad, violations=tuple(bad))


def leaf_barcode(dmt: DecoratedMergeTree, leaf: int) -> Barcode:
    """Barcode seen from a leaf: each bar enters at its merge with the leaf."""
    if leaf not in dmt.leaf_index:
        raise ValueError(f"node {leaf} is not a leaf")
    bars = []
    for m, i in dmt.leaf_index[leaf]:
        d = dmt.lifted_bars[i].interval.death
        if m < d:
            bars.append(Interval(m, d))
    return Barcode(bars=tuple(bars), degree=dmt.degree)


def node_barcode(dmt: DecoratedMergeTree, node: int) -> Barcode:
    """Barcode at any non-root node, via truncation from a descendant leaf."""
    tree = dmt.tree
    if node == tree.root:
        raise ValueError("node barcodes are not defined at the infinite root")
    cur = node
    while tree.children[cur]:
        cur = min(tree.children[cur])
    return truncate_barcode(leaf_barcode(dmt, cur), tree.height[node])


def cycle_component(dmt: DecoratedMergeTree, bar_index: int) -> frozenset[int]:
    """Leaves below the bar's birth anchor (its edge's lower endpoint)."""
    if not (0 <= bar_index < len(dmt.lifted_bars)):
        raise IndexError(f"no lifted bar {bar_index}")
    tree = dmt.tree
    top = dmt.lifted_bars[bar_index].birth_edge
    out = []
    stack = [top]
    while stack:
        x = stack.pop()
        kids = tree.children[x]
        if not kids:
            out.append(x)
        stack.extend(kids)
    return frozenset(out)


def pushforward_barcode(dmt: DecoratedMergeTree) -> Barcode:
    """Degree-k barcode recovered from the leaf views of the lifted bars.

    Each bar is read off from a leaf below its birth anchor, where the leaf
    barcode shows it unrebased; the union over bars is the pushforward.
    """
    bars = []
    for i, bar in enumerate(dmt.lifted_bars):
        leaves = cycle_component(dmt, i)
        leaf = min(leaves)
        entry = [m for m, k in dmt.leaf_index[leaf] if k == i]
        bars.append(Interval(entry[0], bar.interval.death))
    return Barcode(bars=tuple(bars), degree=dmt.degree)


def simplify(dmt: DecoratedMergeTree, bar_threshold: float, tree_threshold: float) -> DecoratedMergeTree:
    """Drop short bars and collapse the tree below a height threshold.

    Bars with persistence below ``bar_threshold`` are removed.  Subtrees lying
    entirely below ``tree_threshold`` collapse to a single leaf at the
    threshold height (reusing the crossing edge's child id); bars anchored
    inside a collapsed region re-enter at the collapse height, matching the
    node barcode at the collapse point.
    """
    if bar_threshold < 0 or tree_threshold < 0:
        raise ValueError("thresholds must be non-negative")
    tree = dmt.tree
    kept = [b for b in dmt.lifted_bars if b.interval.length >= bar_threshold]
    h = tree_threshold
    finite_min = min(tree.finite_heights())
    if h <= finite_min:
        out = DecoratedMergeTree(tree=tree, degree=dmt.degree, lifted_bars=tuple(kept), certified=dmt.certified)
        return out

    parent: dict[int, int | None] = {}
    height: dict[int, float] = {}
    for n in tree.node_ids:
        hn = tree.height[n]
        p = tree.parent[n]
        if hn >= h:
            parent[n] = p
            height[n] = hn
        elif p is not None and tree.height[p] > h:
            # crossing edge: its child becomes a leaf at the threshold
            parent[n] = p
            height[n] = h
    new_tree = MergeTree(parent=parent, height=height)

    new_bars = []
    for bar in kept:
        pos = bar.birth_position()
        d = bar.interval.death
        if pos[1] >= h:
            new_bars.append(bar)
            continue
        if d <= h:
            continue
        child, _ = tree.ancestor_at(pos[0], h)
        death_edge = None if math.isinf(d) else new_tree.ancestor_at(child, d)[0]
        new_bars.append(LiftedBar(interval=Interval(h, d), birth_edge=child, death_edge=death_edge))
    return DecoratedMergeTree(tree=new_tree, degree=dmt.degree, lifted_bars=tuple(new_bars), certified=dmt.certified)


def upsample_dmt(dmt: DecoratedMergeTree, mesh: float, anchor: float | None = None, top: float | None = None) -> DecoratedMergeTree:
    """Decoration carried over to the grid-upsampled tree (same anchors)."""
    from .mergetree import upsample

    new_tree = upsample(dmt.tree, mesh, anchor=anchor, top=top)
    new_bars = []
    for bar in dmt.lifted_bars:
        child, _ = new_tree.ancestor_at(bar.birth_edge, bar.anchor_height)
        d = bar.interval.death
        death_edge = None if math.isinf(d) else new_tree.ancestor_at(child, d)[0]
        new_bars.append(
            LiftedBar(
                interval=bar.interval,
                birth_edge=child,
                death_edge=death_edge,
                birth_height=bar.birth_height,
            )
        )
    return DecoratedMergeTree(tree=new_tree, degree=dmt.degree, lifted_bars=tuple(new_bars), certified=dmt.certified)
