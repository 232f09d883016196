import math

import numpy as np
import pytest

from dmt.barcode import Barcode, Interval
from dmt.decoration import (
    DecoratedMergeTree,
    LiftedBar,
    check_disjointness,
    cycle_component,
    leaf_barcode,
    lift_decorate,
    node_barcode,
    pushforward_barcode,
    simplify,
    truncate_barcode,
    upsample_dmt,
    validate_dmt,
)
from dmt.filtration import single_linkage_sweep, vietoris_rips
from dmt.mergetree import INF, MergeTree, validate_tree
from dmt.metrics import bottleneck
from dmt.persistence import reduce
from dmt.pipeline import circle_points, disk_points

from helpers import random_lift_dmt, random_tree


class TestTruncation:
    def test_middle_branch(self):
        bc = Barcode((Interval(0.0, 5.0),))
        assert truncate_barcode(bc, 2.0).bars == (Interval(2.0, 5.0),)

    def test_below_births_identity(self):
        bc = Barcode((Interval(0.0, 5.0),))
        assert truncate_barcode(bc, -1.0).bars == (Interval(0.0, 5.0),)

    def test_past_death_removed(self):
        bc = Barcode((Interval(0.0, 5.0),))
        assert truncate_barcode(bc, 6.0).bars == ()

    def test_composition_law(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            bars = tuple(
                Interval(b, b + l)
                for b, l in zip(rng.uniform(0, 3, 4), rng.uniform(0, 3, 4))
            )
            bc = Barcode(bars)
            h1, h2 = sorted(rng.uniform(-1, 7, 2))
            lhs = truncate_barcode(truncate_barcode(bc, h1), h2)
            rhs = truncate_barcode(bc, h2)
            assert lhs.sorted_bars() == rhs.sorted_bars()


def two_cluster_cloud(gap=4.0, r=0.4, m=14):
    """Two circles in separate clusters; disjointness holds."""
    c1 = circle_points((0.0, 0.0), r, m)
    c2 = circle_points((gap, 0.0), r, m)
    return np.concatenate([c1, c2])


def decorated_from_points(points, max_radius=2.0, degree=1):
    d = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
    d = (d + d.T) / 2
    sweep = single_linkage_sweep(d)
    cx = vietoris_rips(d, 2, max_radius)
    pairs = reduce(cx)
    return lift_decorate(sweep.tree, cx, pairs, degree, sweep.vertex_leaf), sweep


class TestLiftDecorate:
    def test_two_separate_circles_anchor_in_own_cluster(self):
        points = two_cluster_cloud()
        dmt, sweep = decorated_from_points(points)
        assert len(dmt.lifted_bars) >= 2
        long_bars = sorted(
            range(len(dmt.lifted_bars)),
            key=lambda i: -dmt.lifted_bars[i].interval.length,
        )[:2]
        m = len(points) // 2
        cluster1 = {sweep.vertex_leaf[v] for v in range(m)}
        cluster2 = {sweep.vertex_leaf[v] for v in range(m, len(points))}
        memberships = [frozenset(cycle_component(dmt, i)) for i in long_bars]
        assert set(memberships) == {frozenset(cluster1), frozenset(cluster2)}

    def test_single_leaf_anchor_on_only_path(self):
        tree = MergeTree.single_leaf(0.0)
        cx = vietoris_rips(np.zeros((1, 1)), 1, 1.0)
        # fabricate an essential degree-0 pair to lift
        pairs = reduce(cx)
        dmt = lift_decorate(tree, cx, pairs, 0, {0: 0})
        assert len(dmt.lifted_bars) == 1
        assert dmt.lifted_bars[0].birth_edge == 0
        assert dmt.lifted_bars[0].death_edge is None  # essential -> root

    def test_missing_leaf_image_errors(self):
        points = two_cluster_cloud()
        d = np.sqrt(((points[:, None] - points[None, :]) ** 2).sum(-1))
        sweep = single_linkage_sweep((d + d.T) / 2)
        cx = vietoris_rips((d + d.T) / 2, 2, 2.0)
        pairs = reduce(cx)
        with pytest.raises(ValueError):
            lift_decorate(sweep.tree, cx, pairs, 1, {0: sweep.vertex_leaf[0]})

    def test_validates(self):
        dmt, _ = decorated_from_points(two_cluster_cloud())
        assert validate_dmt(dmt) == []
        assert validate_tree(dmt.tree) == []


class TestDisjointness:
    def _dmt_with_two_bars(self, merge_height, d1, d2):
        # two leaves at 0 merging at merge_height
        tree = MergeTree.from_nodes(
            [(0, 0.0, 2), (1, 0.0, 2), (2, merge_height, 3), (3, INF, None)]
        )
        bars = (
            LiftedBar(Interval(1.0, d1), birth_edge=0, death_edge=tree.ancestor_at(0, d1)[0]),
            LiftedBar(Interval(2.0, d2), birth_edge=1, death_edge=tree.ancestor_at(1, d2)[0]),
        )
        return DecoratedMergeTree(tree=tree, degree=1, lifted_bars=bars)

    def test_violation_when_deaths_reach_merge(self):
        cert = check_disjointness(self._dmt_with_two_bars(4.0, 5.0, 6.0))
        assert not cert.ok
        assert cert.violations == ((0, 1),)

    def test_ok_when_deaths_precede_merge(self):
        cert = check_disjointness(self._dmt_with_two_bars(7.0, 5.0, 6.0))
        assert cert.ok

    def test_comparable_births_vacuous(self):
        tree = MergeTree.from_nodes([(0, 0.0, 1), (1, INF, None)])
        bars = (
            LiftedBar(Interval(1.0, 5.0), birth_edge=0, death_edge=0),
            LiftedBar(Interval(2.0, 6.0), birth_edge=0, death_edge=0),
        )
        dmt = DecoratedMergeTree(tree=tree, degree=1, lifted_bars=bars)
        assert check_disjointness(dmt).ok

    def test_lift_decorate_flags_uncertified(self):
        # two circles bridged at 0.5 but dying near 1.0: lifts overlap
        r = 1.0 / math.sqrt(3.0)
        m = 24
        c1 = circle_points((0.0, 0.0), r, m)
        c2 = circle_points((2 * r + 0.5, 0.0), r, m)
        dmt, _ = decorated_from_points(np.concatenate([c1, c2]), max_radius=1.4)
        cert = check_disjointness(dmt)
        assert not cert.ok and len(cert.violations) >= 1
        assert not dmt.certified


class TestLeafAndNodeBarcodes:
    def _sibling_dmt(self, d):
        # leaves 0,1 at height 0/1, merge at 4, bar anchored above leaf 0
        tree = MergeTree.from_nodes([(0, 0.0, 2), (1, 1.0, 2), (2, 4.0, 3), (3, INF, None)])
        death_edge = None if math.isinf(d) else tree.ancestor_at(0, d)[0]
        bars = (LiftedBar(Interval(0.5, d), birth_edge=0, death_edge=death_edge),)
        return DecoratedMergeTree(tree=tree, degree=1, lifted_bars=bars), tree

    def test_own_path_verbatim(self):
        dmt, _ = self._sibling_dmt(3.0)
        assert leaf_barcode(dmt, 0).bars == (Interval(0.5, 3.0),)

    def test_sibling_excluded_when_dead_before_merge(self):
        dmt, _ = self._sibling_dmt(3.0)
        assert leaf_barcode(dmt, 1).bars == ()

    def test_sibling_rebased_at_merge(self):
        dmt, _ = self._sibling_dmt(9.0)
        assert leaf_barcode(dmt, 1).bars == (Interval(4.0, 9.0),)

    def test_non_leaf_rejected(self):
        dmt, _ = self._sibling_dmt(3.0)
        with pytest.raises(ValueError):
            leaf_barcode(dmt, 2)

    def test_node_barcode_at_leaf_is_leaf_barcode(self):
        dmt, _ = self._sibling_dmt(3.0)
        assert node_barcode(dmt, 0).bars == leaf_barcode(dmt, 0).bars

    def test_node_above_all_deaths_keeps_essentials_only(self):
        dmt, tree = self._sibling_dmt(INF)
        bc = node_barcode(dmt, 2)
        assert bc.bars == (Interval(4.0, INF),)

    def test_root_rejected(self):
        dmt, _ = self._sibling_dmt(3.0)
        with pytest.raises(ValueError):
            node_barcode(dmt, 3)

    def test_descendant_leaves_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            dmt = random_lift_dmt(rng)
            tree = dmt.tree
            for node in tree.node_ids:
                if node == tree.root:
                    continue
                leaves_below = [l for l in tree.leaves if tree.is_ancestor(node, l)]
                results = {
                    truncate_barcode(leaf_barcode(dmt, l), tree.height[node]).sorted_bars()
                    for l in leaves_below
                }
                assert len(results) == 1

    def test_determined_by_restriction_random(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            dmt = random_lift_dmt(rng)
            tree = dmt.tree
            nodes = [n for n in tree.node_ids if n != tree.root]
            for p in nodes:
                for q in nodes:
                    if p != q and tree.is_ancestor(q, p):
                        lhs = node_barcode(dmt, q).sorted_bars()
                        rhs = truncate_barcode(node_barcode(dmt, p), tree.height[q]).sorted_bars()
                        assert lhs == rhs

    def test_lipschitz_bounds_random(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            dmt = random_lift_dmt(rng)
            tree = dmt.tree
            for u in tree.leaves:
                for v in tree.leaves:
                    if u >= v:
                        continue
                    d_b = bottleneck(leaf_barcode(dmt, u), leaf_barcode(dmt, v))
                    assert d_b <= tree.lp_metric(u, v, 1) + 1e-9
                    assert d_b <= 2 ** (1 - 1 / 2) * tree.lp_metric(u, v, 2) + 1e-9
                    assert d_b <= 2 * tree.lp_metric(u, v, INF) + 1e-9


class TestPushforward:
    def test_certified_pushforward_recovers_barcode(self):
        dmt, _ = decorated_from_points(two_cluster_cloud())
        assert dmt.certified
        got = pushforward_barcode(dmt).sorted_bars()
        want = tuple(sorted((b.interval for b in dmt.lifted_bars), key=lambda i: (i.birth, i.death)))
        assert got == want


class TestSimplify:
    def test_zero_thresholds_identity(self):
        rng = np.random.default_rng(9)
        dmt = random_lift_dmt(rng)
        out = simplify(dmt, 0.0, 0.0)
        assert out.tree.node_ids == dmt.tree.node_ids
        assert out.lifted_bars == dmt.lifted_bars

    def test_bar_threshold_drops_finite_bars(self):
        rng = np.random.default_rng(10)
        dmt = random_lift_dmt(rng, max_bars=4)
        longest = max((b.interval.length for b in dmt.lifted_bars if not b.interval.is_essential), default=0.0)
        out = simplify(dmt, longest + 1.0, 0.0)
        assert all(b.interval.is_essential for b in out.lifted_bars)

    def test_collapse_to_single_leaf(self):
        tree = MergeTree.from_nodes([(0, 0.0, 2), (1, 0.1, 2), (2, 0.2, 3), (3, INF, None)])
        dmt = DecoratedMergeTree(tree=tree, degree=1, lifted_bars=())
        out = simplify(dmt, 0.0, 0.5)
        assert len(out.tree.leaves) == 1
        assert out.tree.height[out.tree.leaves[0]] == 0.5
        assert validate_tree(out.tree) == []

    def test_collapsed_leaf_barcode_is_node_barcode_at_threshold(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            dmt = random_lift_dmt(rng, max_bars=3)
            tree = dmt.tree
            h = float(np.round(rng.uniform(0.5, 3.0), 3))
            out = simplify(dmt, 0.0, h)
            assert validate_tree(out.tree) == []
            for leaf in out.tree.leaves:
                if out.tree.height[leaf] == h and leaf in tree.parent:
                    old_pos = tree.ancestor_at(leaf, h) if tree.height[leaf] <= h else None
                    if old_pos is None:
                        continue
                    want = truncate_barcode(
                        leaf_barcode(dmt, min(l for l in tree.leaves if tree.is_ancestor(leaf, l))), h
                    ).sorted_bars()
                    got = leaf_barcode(out, leaf).sorted_bars()
                    assert got == want


class TestCycleComponent:
    def test_leaf_edge_anchor(self):
        tree = MergeTree.from_nodes([(0, 0.0, 2), (1, 0.0, 2), (2, 1.0, 3), (3, INF, None)])
        dmt = DecoratedMergeTree(
            tree=tree, degree=1,
            lifted_bars=(LiftedBar(Interval(0.5, 2.0), birth_edge=0, death_edge=2),),
        )
        assert cycle_component(dmt, 0) == frozenset({0})

    def test_anchor_above_last_merge_covers_all(self):
        tree = MergeTree.from_nodes([(0, 0.0, 2), (1, 0.0, 2), (2, 1.0, 3), (3, INF, None)])
        dmt = DecoratedMergeTree(
            tree=tree, degree=1,
            lifted_bars=(LiftedBar(Interval(1.5, 2.0), birth_edge=2, death_edge=2),),
        )
        assert cycle_component(dmt, 0) == frozenset({0, 1})

    def test_bad_index(self):
        tree = MergeTree.single_leaf()
        dmt = DecoratedMergeTree(tree=tree, degree=1, lifted_bars=())
        with pytest.raises(IndexError):
            cycle_component(dmt, 0)


class TestUpsampleDmt:
    def test_barcodes_preserved(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            dmt = random_lift_dmt(rng)
            up = upsample_dmt(dmt, 0.5)
            assert validate_dmt(up) == []
            for leaf in dmt.tree.leaves:
                assert leaf_barcode(up, leaf).sorted_bars() == leaf_barcode(dmt, leaf).sorted_bars()
