"""Barcode and merge-tree comparison: bottleneck and labeled matching costs.

The bottleneck distance is computed exactly: the optimum is always one of the
finitely many pairwise matching costs or half-lengths, so a feasibility check
(bipartite matching with a diagonal) over the sorted candidate values settles
it with no numerical search.  Essential bars may only match essential bars.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .barcode import Barcode, Interval
from .decoration import DecoratedMergeTree, leaf_barcode, node_barcode
from .mergetree import Labeling, MergeTree, lca_matrix

INF = math.inf


@dataclass(frozen=True)
class Matching:
    """Partial bijection between two barcodes."""

    matched: tuple[tuple[Interval, Interval], ...]
    unmatched_left: tuple[Interval, ...] = ()
    unmatched_right: tuple[Interval, ...] = ()

    def validate(self, left: Barcode, right: Barcode) -> list[str]:
        problems = []
        lhs = sorted([a for a, _ in self.matched] + list(self.unmatched_left), key=lambda i: (i.birth, i.death))
        rhs = sorted([b for _, b in self.matched] + list(self.unmatched_right), key=lambda i: (i.birth, i.death))
        if lhs != list(left.sorted_bars()):
            problems.append("left bars not partitioned into matched/unmatched")
        if rhs != list(right.sorted_bars()):
            problems.append("right bars not partitioned into matched/unmatched")
        return problems


def pair_cost(a: Interval, b: Interval) -> float:
    """sup-norm distance between bars; infinity pairs with infinity for free."""
    if a.is_essential != b.is_essential:
        return INF
    if a.is_essential:
        return abs(a.birth - b.birth)
    return max(abs(a.birth - b.birth), abs(a.death - b.death))


def unmatched_cost(a: Interval) -> float:
    return a.length / 2


def matching_cost_barcodes(m: Matching) -> float:
    costs = [pair_cost(a, b) for a, b in m.matched]
    costs += [unmatched_cost(a) for a in m.unmatched_left]
    costs += [unmatched_cost(b) for b in m.unmatched_right]
    return max(costs, default=0.0)


def bottleneck(b1: Barcode, b2: Barcode) -> float:
    """Exact bottleneck distance between two barcodes of the same degree."""
    if b1.degree != b2.degree:
        raise ValueError(f"degree mismatch: {b1.degree} vs {b2.degree}")
    ess1 = [b for b in b1.bars if b.is_essential]
    ess2 = [b for b in b2.bars if b.is_essential]
    fin1 = [b for b in b1.bars if not b.is_essential]
    fin2 = [b for b in b2.bars if not b.is_essential]
    if len(ess1) != len(ess2):
        return INF

    candidates = {0.0}
    for a in fin1:
        candidates.add(unmatched_cost(a))
    for b in fin2:
        candidates.add(unmatched_cost(b))
    for a in fin1:
        for b in fin2:
            candidates.add(pair_cost(a, b))
    for a in ess1:
        for b in ess2:
            candidates.add(pair_cost(a, b))
    values = sorted(candidates)

    lo, hi = 0, len(values) - 1
    # values[hi] is always feasible: everything unmatched / essentials matched
    # at the max candidate
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(fin1, fin2, ess1, ess2, values[mid]):
            hi = mid
        else:
            lo = mid + 1
    return values[lo]


def _feasible(fin1, fin2, ess1, ess2, eps) -> bool:
    if ess1:
        adj = [[j for j, b in enumerate(ess2) if pair_cost(a, b) <= eps] for a in ess1]
        if _max_matching(adj, len(ess2)) < len(ess1):
            return False
    n, m = len(fin1), len(fin2)
    # augmented bipartite graph: left bars + diagonal copies of the right ones
    adj = []
    for i, a in enumerate(fin1):
        row = [j for j, b in enumerate(fin2) if pair_cost(a, b) <= eps]
        if unmatched_cost(a) <= eps:
            row.append(m + i)  # own diagonal copy
        adj.append(row)
    for j, b in enumerate(fin2):
        row = list(range(m, m + n))  # diagonal-diagonal is free
        if unmatched_cost(b) <= eps:
            row.append(j)
        adj.append(row)
    return _max_matching(adj, m + n) == n + m


def _max_matching(adj: list[list[int]], right_size: int) -> int:
    match_right = [-1] * right_size
    match_left = [-1] * len(adj)

    def augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] == -1 or augment(match_right[v], seen):
                    match_right[v] = u
                    match_left[u] = v
                    return True
        return False

    size = 0
    for u in range(len(adj)):
        if augment(u, [False] * right_size):
            size += 1
    return size


# ---------------------------------------------------------------------------
# labeled matching cost
# ---------------------------------------------------------------------------


def labeled_cost(
    tree_f: MergeTree,
    lam_f: Labeling,
    tree_g: MergeTree,
    lam_g: Labeling,
    norm: str = "inf",
    decorations: tuple[DecoratedMergeTree, DecoratedMergeTree] | None = None,
) -> float:
    """Matching cost of a labeling pair.

    Undecorated: the entrywise sup (or Frobenius, for ``norm="l2"``) norm of
    the difference of the two LCA matrices.  Decorated (sup norm only): the
    max of that and the worst bottleneck distance between the node barcodes
    at paired labels.
    """
    if lam_f.n != lam_g.n:
        raise ValueError("labelings must share a domain size")
    if norm not in ("inf", "l2"):
        raise ValueError(f"unknown norm {norm!r}")
    lf = lca_matrix(tree_f, lam_f)
    lg = lca_matrix(tree_g, lam_g)
    diff = lf - lg
    if norm == "inf":
        base = float(np.abs(diff).max(initial=0.0))
    else:
        base = float(np.sqrt((diff**2).sum()))
    if decorations is None:
        return base
    if norm != "inf":
        raise ValueError("decorated matching cost is defined for the sup norm only")
    dmt_f, dmt_g = decorations
    worst = base
    for nf, ng in zip(lam_f.nodes, lam_g.nodes):
        worst = max(worst, bottleneck(node_barcode(dmt_f, nf), node_barcode(dmt_g, ng)))
    return worst


def exhaustive_labeled_distance(
    tree_f: MergeTree,
    tree_g: MergeTree,
    norm: str = "inf",
    decorations: tuple[DecoratedMergeTree, DecoratedMergeTree] | None = None,
    pool_f: list[int] | None = None,
    pool_g: list[int] | None = None,
    cap: int = 2_000_000,
) -> float:
    """Exact minimum of labeled_cost over pool-valued leaf-covering labelings.

    For the sup norm, the minimum over all labelings with domain size
    #leaves(F) + #leaves(G) is attained on the family built from a map phi
    of F's leaves into the G pool and a map psi of G's leaves into the F
    pool: the cost only sees the set of label pairs, any covering set
    contains such a sub-family, and dropping pairs never raises a max.  The
    Frobenius norm has no such reduction (duplicated pairs change the sum),
    so the l2 branch enumerates label-pair multisets outright.
    """
    if norm not in ("inf", "l2"):
        raise ValueError(f"unknown norm {norm!r}")
    if decorations is not None and norm != "inf":
        raise ValueError("decorated matching cost is defined for the sup norm only")
    pool_f = sorted(set(pool_f if pool_f is not None else tree_f.node_ids) - {tree_f.root})
    pool_g = sorted(set(pool_g if pool_g is not None else tree_g.node_ids) - {tree_g.root})
    leaves_f, leaves_g = list(tree_f.leaves), list(tree_g.leaves)
    if not set(leaves_f) <= set(pool_f) or not set(leaves_g) <= set(pool_g):
        raise ValueError("pools must contain the leaves, or no labeling can cover them")
    k, l = len(leaves_f), len(leaves_g)
    if norm == "l2":
        return _exhaustive_l2(tree_f, tree_g, pool_f, pool_g, cap)
    n_phi = len(pool_g) ** k
    n_psi = len(pool_f) ** l
    if n_phi * n_psi > cap:
        raise ValueError(f"search space {n_phi} x {n_psi} exceeds the cap {cap}")

    from .mergetree import merge_height_matrix

    nodes_f = sorted(set(pool_f) | set(leaves_f))
    nodes_g = sorted(set(pool_g) | set(leaves_g))
    MF = merge_height_matrix(tree_f, nodes_f)
    MG = merge_height_matrix(tree_g, nodes_g)
    fi = {n: i for i, n in enumerate(nodes_f)}
    gi = {n: i for i, n in enumerate(nodes_g)}
    lf_idx = np.array([fi[x] for x in leaves_f], dtype=np.intp)
    lg_idx = np.array([gi[x] for x in leaves_g], dtype=np.intp)
    pf_idx = np.array([fi[x] for x in pool_f], dtype=np.intp)
    pg_idx = np.array([gi[x] for x in pool_g], dtype=np.intp)

    A = MF[np.ix_(lf_idx, lf_idx)]  # F-leaf pairs
    F_block = MG[np.ix_(lg_idx, lg_idx)]  # G-leaf pairs
    TF = MF[np.ix_(lf_idx, pf_idx)]  # F leaves x F pool
    TG = MG[np.ix_(pg_idx, lg_idx)]  # G pool x G leaves
    PF = MF[np.ix_(pf_idx, pf_idx)]
    PG = MG[np.ix_(pg_idx, pg_idx)]

    phis = np.array(list(itertools.product(range(len(pool_g)), repeat=k)), dtype=np.intp)
    psis = np.array(list(itertools.product(range(len(pool_f)), repeat=l)), dtype=np.intp)

    # Lambda blocks for one (phi, psi):
    #   [ A          | B(psi) ]      [ D(phi)  | E(phi) ]
    #   [ B(psi)^T   | C(psi) ]  vs  [ E(phi)^T| F      ]
    D_all = PG[phis[:, :, None], phis[:, None, :]]  # (n_phi, k, k)
    C_all = PF[psis[:, :, None], psis[:, None, :]]  # (n_psi, l, l)
    B_all = TF[:, psis].transpose(1, 0, 2)  # (n_psi, k, l); B[s][i, j] = mergeF(leaf_i, psi_s(j))
    E_all = TG[phis]  # (n_phi, k, l); E[p][i, j] = mergeG(phi_p(i), leaf_j)

    term_phi = np.abs(A[None, :, :] - D_all).max(axis=(1, 2))
    term_psi = np.abs(C_all - F_block[None, :, :]).max(axis=(1, 2))
    if decorations is not None:
        dmt_f, dmt_g = decorations
        dec_fg = np.array(
            [[bottleneck(leaf_barcode(dmt_f, u), node_barcode(dmt_g, q)) for q in pool_g] for u in leaves_f]
        )
        dec_gf = np.array(
            [[bottleneck(node_barcode(dmt_f, p), leaf_barcode(dmt_g, w)) for w in leaves_g] for p in pool_f]
        )
        term_phi = np.maximum(term_phi, dec_fg[np.arange(k)[None, :], phis].max(axis=1))
        term_psi = np.maximum(term_psi, dec_gf[psis, np.arange(l)[None, :]].max(axis=1))
    best = INF
    for p in range(len(phis)):
        cross = np.abs(B_all - E_all[p][None, :, :]).max(axis=(1, 2))
        total = np.maximum(np.maximum(cross, term_psi), term_phi[p])
        val = float(total.min())
        if val < best:
            best = val
    return best


def _exhaustive_l2(tree_f, tree_g, pool_f, pool_g, cap) -> float:
    """Full multiset enumeration for the Frobenius labeled cost.

    The cost is invariant under permuting the label domain, so label-pair
    multisets of size #leaves(F) + #leaves(G) suffice.
    """
    from .mergetree import merge_height_matrix

    leaves_f, leaves_g = list(tree_f.leaves), list(tree_g.leaves)
    n = len(leaves_f) + len(leaves_g)
    pairs = [(p, q) for p in pool_f for q in pool_g]
    total = math.comb(len(pairs) + n - 1, n)
    if total > cap:
        raise ValueError(f"search space {total} exceeds the cap {cap}")
    MF = merge_height_matrix(tree_f, pool_f)
    MG = merge_height_matrix(tree_g, pool_g)
    fi = {x: i for i, x in enumerate(pool_f)}
    gi = {x: i for i, x in enumerate(pool_g)}
    need_f, need_g = set(leaves_f), set(leaves_g)
    best = INF
    for combo in itertools.combinations_with_replacement(pairs, n):
        fs = {p for p, _ in combo}
        if not need_f <= fs:
            continue
        gs = {q for _, q in combo}
        if not need_g <= gs:
            continue
        idx_f = [fi[p] for p, _ in combo]
        idx_g = [gi[q] for _, q in combo]
        diff = MF[np.ix_(idx_f, idx_f)] - MG[np.ix_(idx_g, idx_g)]
        val = float((diff**2).sum())
        if val < best:
            best = val
    return math.sqrt(best)


def epsilon_matching_check(
    dmt_f: DecoratedMergeTree,
    dmt_g: DecoratedMergeTree,
    phi: dict[int, int],
    psi: dict[int, int],
    eps: float,
    tol: float = 1e-9,
) -> bool:
    """Verify that leaf maps witness an epsilon-matching of two decorated trees.

    Checks, at leaf granularity: the maps shift heights by exactly eps, they
    are coherent eps-maps (images of leaves merge no later than eps above the
    sources' merge), round trips land on the ancestor at +2eps, and node
    barcodes at matched nodes are within bottleneck distance eps.  Checking
    barcodes at leaves only is enough for leaf-decorated trees.
    """
    tf, tg = dmt_f.tree, dmt_g.tree
    for leaf in tf.leaves:
        if leaf not in phi:
            raise ValueError(f"phi undefined on leaf {leaf}")
        if phi[leaf] == tg.root:
            raise ValueError("maps may not target the root")
    for leaf in tg.leaves:
        if leaf not in psi:
            raise ValueError(f"psi undefined on leaf {leaf}")
        if psi[leaf] == tf.root:
            raise ValueError("maps may not target the root")

    # (i) exact eps height shift
    for v in tf.leaves:
        if abs(tg.height[phi[v]] - (tf.height[v] + eps)) > tol:
            return False
    for w in tg.leaves:
        if abs(tf.height[psi[w]] - (tg.height[w] + eps)) > tol:
            return False
    # (ii) eps-map coherence on leaf pairs
    for v, v2 in itertools.combinations(tf.leaves, 2):
        if tg.merge_height(phi[v], phi[v2]) > tf.merge_height(v, v2) + eps + tol:
            return False
    for w, w2 in itertools.combinations(tg.leaves, 2):
        if tf.merge_height(psi[w], psi[w2]) > tg.merge_height(w, w2) + eps + tol:
            return False
    # (iii) 2eps-compatibility of the round trips at leaves
    for v in tf.leaves:
        under = [w for w in tg.leaves if tg.is_ancestor(phi[v], w)]
        for w in under:
            if tf.merge_height(v, psi[w]) > tf.height[v] + 2 * eps + tol:
                return False
    for w in tg.leaves:
        under = [v for v in tf.leaves if tf.is_ancestor(psi[w], v)]
        for v in under:
            if tg.merge_height(w, phi[v]) > tg.height[w] + 2 * eps + tol:
                return False
    # (iv) barcode matchings at leaves
    for v in tf.leaves:
        if bottleneck(leaf_barcode(dmt_f, v), node_barcode(dmt_g, phi[v])) > eps + tol:
            return False
    for w in tg.leaves:
        if bottleneck(leaf_barcode(dmt_g, w), node_barcode(dmt_f, psi[w])) > eps + tol:
            return False
    return True
