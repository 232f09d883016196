"""End-to-end estimators and experiments.

The interleaving estimator samples both trees on one height grid, solves a
GW (or fused GW) problem between the node networks, reads leaf maps off the
coupling, and scores the induced labelings.  The result is always an upper
bound for the labeled matching distance because the labelings are drawn from
exactly the search family of the exhaustive minimum.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .barcode import Barcode
from .decoration import DecoratedMergeTree, check_disjointness, lift_decorate, node_barcode, upsample_dmt
from .filtration import single_linkage_sweep, scalar_to_merge_tree, vietoris_rips, graph_sweep, graph_sublevel_complex, WeightedGraph
from .mergetree import INF, Labeling, MergeTree, merge_height_matrix, upsample
from .metrics import bottleneck, labeled_cost
from .persistence import barcode as extract_barcode, reduce as reduce_complex
from .transport import (
    Coupling,
    MeasureNetwork,
    SolverResult,
    StructuredMeasureNetwork,
    coupling_to_maps,
    identity_coupling,
    solve_fgw,
    solve_gw,
)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 200
    tol: float = 1e-9
    init: str = "product"  # or "identity"

    def initial(self, mu1, mu2) -> Coupling | None:
        if self.init == "product":
            return None
        if self.init == "identity":
            return identity_coupling(mu1, mu2)
        raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True, eq=False)
class TreeNetwork:
    network: MeasureNetwork
    node_order: tuple[int, ...]
    tree: MergeTree  # the upsampled tree the node order refers to


@dataclass(frozen=True, eq=False)
class InterleavingEstimate:
    value: float
    norm: str
    mesh: float
    labeling_f: Labeling
    labeling_g: Labeling
    coupling: Coupling
    tree_f: MergeTree
    tree_g: MergeTree
    node_order_f: tuple[int, ...]
    node_order_g: tuple[int, ...]
    trace: tuple[float, ...]
    metadata: dict = field(default_factory=dict)

    def recompute_value(self, decorations=None) -> float:
        return labeled_cost(self.tree_f, self.labeling_f, self.tree_g, self.labeling_g, self.norm, decorations)


def tree_to_network(tree: MergeTree, mesh: float, anchor: float | None = None, top: float | None = None) -> TreeNetwork:
    """Upsampled tree as a measure network: merge-height matrix, uniform mass.

    The infinite root is dropped; merges realized only there are capped at
    (max finite height) + mesh so they stay strictly largest.
    """
    up = upsample(tree, mesh, anchor=anchor, top=top)
    return _network_from_upsampled(up, mesh)


def _network_from_upsampled(up: MergeTree, mesh: float) -> TreeNetwork:
    nodes = tuple(sorted((n for n in up.node_ids if n != up.root), key=lambda n: (up.height[n], n)))
    cap = max(up.height[n] for n in nodes) + mesh
    matrix = merge_height_matrix(up, nodes, root_cap=cap)
    mass = np.full(len(nodes), 1.0 / len(nodes))
    return TreeNetwork(network=MeasureNetwork(matrix, mass), node_order=nodes, tree=up)


def labelings_from_maps(
    tree_f: MergeTree,
    tree_g: MergeTree,
    phi: dict[int, int],
    psi: dict[int, int],
) -> tuple[Labeling, Labeling]:
    """Paired labelings on [k + l]: own leaves first, partner images after."""
    leaves_f, leaves_g = tree_f.leaves, tree_g.leaves
    lam_f = list(leaves_f) + [psi[w] for w in leaves_g]
    lam_g = [phi[v] for v in leaves_f] + list(leaves_g)
    return Labeling(tuple(lam_f)), Labeling(tuple(lam_g))


def _shared_grid(tree_f: MergeTree, tree_g: MergeTree) -> tuple[float, float]:
    hf, hg = tree_f.finite_heights(), tree_g.finite_heights()
    return min(min(hf), min(hg)), max(max(hf), max(hg))


def estimate_tree_distance(
    tree_f: MergeTree,
    tree_g: MergeTree,
    mesh: float,
    norm: str = "inf",
    options: SolverOptions = SolverOptions(),
) -> InterleavingEstimate:
    """GW-based upper estimate of the merge tree interleaving distance."""
    anchor, top = _shared_grid(tree_f, tree_g)
    net_f = tree_to_network(tree_f, mesh, anchor, top)
    net_g = tree_to_network(tree_g, mesh, anchor, top)
    res = solve_gw(
        net_f.network,
        net_g.network,
        init=options.initial(net_f.network.mass, net_g.network.mass),
        max_iters=options.max_iters,
        tol=options.tol,
    )
    return _estimate_from_coupling(net_f, net_g, res, mesh, norm, decorations=None)


def _estimate_from_coupling(net_f, net_g, res: SolverResult, mesh, norm, decorations) -> InterleavingEstimate:
    phi, psi = coupling_to_maps(res.coupling, net_f.tree, net_g.tree, list(net_f.node_order), list(net_g.node_order))
    lam_f, lam_g = labelings_from_maps(net_f.tree, net_g.tree, phi, psi)
    value = labeled_cost(net_f.tree, lam_f, net_g.tree, lam_g, norm, decorations)
    return InterleavingEstimate(
        value=value,
        norm=norm,
        mesh=mesh,
        labeling_f=lam_f,
        labeling_g=lam_g,
        coupling=res.coupling,
        tree_f=net_f.tree,
        tree_g=net_g.tree,
        node_order_f=net_f.node_order,
        node_order_g=net_g.node_order,
        trace=res.trace,
        metadata=dict(res.metadata),
    )


def estimate_dmt_distance(
    dmt_f: DecoratedMergeTree,
    dmt_g: DecoratedMergeTree,
    mesh: float,
    zeta: float = 0.5,
    norm: str = "inf",
    options: SolverOptions = SolverOptions(),
) -> InterleavingEstimate:
    """Fused-GW upper estimate of the decorated matching distance.

    Node features are the barcodes seen at every sampled node; the final
    value is the decorated labeled cost (sup norm).
    """
    if dmt_f.degree != dmt_g.degree:
        raise ValueError("decorated trees must carry the same homology degree")
    anchor, top = _shared_grid(dmt_f.tree, dmt_g.tree)
    up_f = upsample_dmt(dmt_f, mesh, anchor, top)
    up_g = upsample_dmt(dmt_g, mesh, anchor, top)
    net_f = _network_from_upsampled(up_f.tree, mesh)
    net_g = _network_from_upsampled(up_g.tree, mesh)
    feats_f = tuple(node_barcode(up_f, n) for n in net_f.node_order)
    feats_g = tuple(node_barcode(up_g, n) for n in net_g.node_order)
    res = solve_fgw(
        StructuredMeasureNetwork(net_f.network, feats_f),
        StructuredMeasureNetwork(net_g.network, feats_g),
        zeta=zeta,
        init=options.initial(net_f.network.mass, net_g.network.mass),
        max_iters=options.max_iters,
        tol=options.tol,
    )
    est = _estimate_from_coupling(net_f, net_g, res, mesh, norm, decorations=(up_f, up_g))
    est.metadata["zeta"] = zeta
    return est


# ---------------------------------------------------------------------------
# pairwise matrices
# ---------------------------------------------------------------------------

_WORKER_STATE: dict = {}


def _n_jobs() -> int:
    env = os.environ.get("DMT_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 8))


def _init_tree_worker(payload):
    _WORKER_STATE["payload"] = payload


def _tree_pair_job(args):
    i, j = args
    payload = _WORKER_STATE["payload"]
    nets, norms, options, zeta, mode = payload
    net_f, net_g = nets[i], nets[j]
    if mode == "tree":
        res = solve_gw(
            net_f.network,
            net_g.network,
            init=options.initial(net_f.network.mass, net_g.network.mass),
            max_iters=options.max_iters,
            tol=options.tol,
        )
        decorations = None
        base_f, base_g = net_f, net_g
    else:
        (tnet_f, feats_f, dmt_f), (tnet_g, feats_g, dmt_g) = net_f, net_g
        res = solve_fgw(
            StructuredMeasureNetwork(tnet_f.network, feats_f),
            StructuredMeasureNetwork(tnet_g.network, feats_g),
            zeta=zeta,
            init=options.initial(tnet_f.network.mass, tnet_g.network.mass),
            max_iters=options.max_iters,
            tol=options.tol,
        )
        decorations = (dmt_f, dmt_g)
        base_f, base_g = tnet_f, tnet_g
    values = {}
    for norm in norms:
        dec = decorations if norm == "inf" else None
        est = _estimate_from_coupling(base_f, base_g, res, 0.0, norm, dec)
        values[norm] = est.value
    return i, j, values


def _run_pairs(payload, pairs, n_jobs):
    if n_jobs <= 1:
        _init_tree_worker(payload)
        return [_tree_pair_job(p) for p in pairs]
    with Pool(n_jobs, initializer=_init_tree_worker, initargs=(payload,)) as pool:
        return pool.map(_tree_pair_job, pairs, chunksize=32)


def _pairwise_from_networks(nets, norms, options, zeta, mode, n_jobs=None):
    n = len(nets)
    out = {norm: np.zeros((n, n)) for norm in norms}
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    results = _run_pairs((nets, tuple(norms), options, zeta, mode), pairs, n_jobs or _n_jobs())
    for i, j, values in results:
        for norm, v in values.items():
            out[norm][i, j] = out[norm][j, i] = v
    return out


def pairwise_matrix(items: list, metric: str, mesh: float = 0.5, zeta: float = 0.5, norm: str = "inf",
                    options: SolverOptions = SolverOptions(), n_jobs: int | None = None) -> np.ndarray:
    """Symmetric distance matrix under one metric; cells computed once.

    Metrics: "tree" and "dmt" run the GW/FGW estimators on a dataset-wide
    height grid; "bottleneck0", "bottleneck1" and "max01" compare barcode
    dictionaries keyed by degree.
    """
    n = len(items)
    if metric in ("tree", "dmt"):
        if metric == "tree":
            if not all(isinstance(t, MergeTree) for t in items):
                raise ValueError("metric 'tree' expects MergeTree items")
            lo = min(min(t.finite_heights()) for t in items)
            hi = max(max(t.finite_heights()) for t in items)
            nets = [tree_to_network(t, mesh, lo, hi) for t in items]
            mats = _pairwise_from_networks(nets, [norm], options, zeta, "tree", n_jobs)
        else:
            if not all(isinstance(t, DecoratedMergeTree) for t in items):
                raise ValueError("metric 'dmt' expects DecoratedMergeTree items")
            degrees = {t.degree for t in items}
            if len(degrees) > 1:
                raise ValueError("decorated items must share a homology degree")
            if norm != "inf":
                raise ValueError("decorated matching cost is defined for the sup norm only")
            lo = min(min(t.tree.finite_heights()) for t in items)
            hi = max(max(t.tree.finite_heights()) for t in items)
            prepared = []
            for dmt in items:
                up = upsample_dmt(dmt, mesh, lo, hi)
                net = _network_from_upsampled(up.tree, mesh)
                feats = tuple(node_barcode(up, x) for x in net.node_order)
                prepared.append((net, feats, up))
            mats = _pairwise_from_networks(prepared, [norm], options, zeta, "dmt", n_jobs)
        return mats[norm]

    if metric in ("bottleneck0", "bottleneck1", "max01"):
        for item in items:
            if not isinstance(item, dict) or not all(isinstance(b, Barcode) for b in item.values()):
                raise ValueError("barcode metrics expect dicts degree -> Barcode")
        out = np.zeros((n, n))
        degs = {"bottleneck0": (0,), "bottleneck1": (1,), "max01": (0, 1)}[metric]
        empty = {d: Barcode((), d) for d in degs}
        for i in range(n):
            for j in range(i + 1, n):
                val = max(
                    bottleneck(items[i].get(d, empty[d]), items[j].get(d, empty[d])) for d in degs
                )
                out[i, j] = out[j, i] = val
        return out
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _loo_nearest_neighbor(dist: np.ndarray, labels: list) -> tuple[float, dict]:
    n = len(labels)
    hits = 0
    confusion: dict[str, dict[str, int]] = {}
    for i in range(n):
        best = min((j for j in range(n) if j != i), key=lambda j: (dist[i, j], j))
        truth, pred = str(labels[i]), str(labels[best])
        confusion.setdefault(truth, {}).setdefault(pred, 0)
        confusion[truth][pred] += 1
        if truth == pred:
            hits += 1
    return hits / n, confusion


def experiment_scalar_classification(
    seed: int,
    samples_per_class: int = 10,
    mesh: float = 0.5,
    norms: tuple[str, ...] = ("inf", "l2"),
    grid_points: int = 100,
    options: SolverOptions = SolverOptions(),
    n_jobs: int | None = None,
    include_matrices: bool = True,
) -> dict:
    """Classify merge trees of sin/cos mixtures under the estimated distances.

    One tree per noisy sample of f(t) = sin(r1 pi t) + cos(r2 pi t) + g(t)
    with g uniform on [0, 1/2] per grid point, classes indexed by (r1, r2);
    reports leave-one-out nearest-neighbor accuracy per requested norm.
    """
    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, 1.0, grid_points)
    classes = [(r1, r2) for r1 in (1, 2, 4, 8) for r2 in (1, 3, 5)]
    trees: list[MergeTree] = []
    labels: list[tuple[int, int]] = []
    for r1, r2 in classes:
        base = np.sin(r1 * np.pi * ts) + np.cos(r2 * np.pi * ts)
        for _ in range(samples_per_class):
            noise = rng.uniform(0.0, 0.5, size=grid_points)
            f = base + noise
            trees.append(scalar_to_merge_tree(list(zip(ts, f))))
            labels.append((r1, r2))
    lo = min(min(t.finite_heights()) for t in trees)
    hi = max(max(t.finite_heights()) for t in trees)
    nets = [tree_to_network(t, mesh, lo, hi) for t in trees]
    mats = _pairwise_from_networks(nets, list(norms), options, 1.0, "tree", n_jobs)
    report: dict = {
        "format_version": "1",
        "experiment": "scalar-classification",
        "seed": seed,
        "options": {
            "samples_per_class": samples_per_class,
            "mesh": mesh,
            "grid_points": grid_points,
            "max_iters": options.max_iters,
            "tol": options.tol,
            "init": options.init,
        },
        "labels": [list(c) for c in labels],
        "accuracy": {},
        "confusion": {},
    }
    for norm in norms:
        acc, confusion = _loo_nearest_neighbor(mats[norm], labels)
        report["accuracy"][norm] = acc
        report["confusion"][norm] = confusion
        if include_matrices:
            report.setdefault("distance_matrix", {})[norm] = mats[norm].tolist()
    return report


def circle_points(center, radius: float, count: int, phase: float = 0.0) -> np.ndarray:
    angles = phase + 2.0 * np.pi * np.arange(count) / count
    return np.stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)], axis=1)


def disk_points(center, radius: float, count: int) -> np.ndarray:
    """Deterministic sunflower fill of a disk."""
    golden = math.pi * (3.0 - math.sqrt(5.0))
    k = np.arange(count) + 0.5
    r = radius * np.sqrt(k / count)
    th = k * golden
    return np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], axis=1)


def _dist_matrix(points: np.ndarray) -> np.ndarray:
    diffs = points[:, None, :] - points[None, :, :]
    d = np.sqrt((diffs**2).sum(axis=2))
    return (d + d.T) / 2


@dataclass(frozen=True, eq=False)
class CloudSummary:
    points: np.ndarray
    tree: MergeTree
    dmt: DecoratedMergeTree
    barcodes: dict[int, Barcode]
    certificate_ok: bool


def summarize_point_cloud(points: np.ndarray, max_radius: float, degree: int = 1) -> CloudSummary:
    """Merge tree, degree-0/k barcodes and lift decoration of a point cloud."""
    return summarize_point_cloud_distances(_dist_matrix(points), max_radius, degree, points=points)


def summarize_point_cloud_distances(
    dist: np.ndarray, max_radius: float, degree: int = 1, points: np.ndarray | None = None
) -> CloudSummary:
    sweep = single_linkage_sweep(dist)
    full_skeleton = vietoris_rips(dist, max_dim=1, max_radius=INF)
    pairs0 = reduce_complex(full_skeleton)
    bc0 = extract_barcode(pairs0, 0, drop_zero_length=True)
    complex_k = vietoris_rips(dist, max_dim=2, max_radius=max_radius)
    pairs_k = reduce_complex(complex_k)
    bck = extract_barcode(pairs_k, degree, drop_zero_length=True)
    dmt = lift_decorate(sweep.tree, complex_k, pairs_k, degree, sweep.vertex_leaf)
    return CloudSummary(
        points=points if points is not None else np.empty((0, 0)),
        tree=sweep.tree,
        dmt=dmt,
        barcodes={0: bc0, degree: bck},
        certificate_ok=check_disjointness(dmt).ok,
    )


def figure_one_clouds(
    radius: float = 1.0,
    separation: float | None = None,
    noise: float = 0.0,
    seed: int = 0,
    points_per_circle: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Two planar clouds with equal barcodes but different feature placement.

    Configuration (a) gathers both circles in one cluster next to a plain
    blob; configuration (b) gives each cluster one circle.  The circles'
    Euclidean radius is radius/sqrt(3) so the degree-1 bars have length
    about `radius` under the Rips convention (the hole of a circle of
    Euclidean radius r dies near sqrt(3) * r).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    sep = 3.0 * radius if separation is None else separation
    r = radius / math.sqrt(3.0)
    m = points_per_circle
    spacing = 2.0 * r * math.sin(math.pi / m)
    gap = spacing / 3.0
    rng = np.random.default_rng(seed)

    def place_second(first: np.ndarray, second: np.ndarray) -> np.ndarray:
        # translate the second cluster so the measured gap equals sep exactly
        for _ in range(3):
            d = np.sqrt(((first[:, None] - second[None, :]) ** 2).sum(-1))
            second = second + np.array([0.0, d.min() - sep]) * -1.0 + np.array([0.0, 0.0])
            second = second - np.array([0.0, d.min() - sep])
        return second

    # (a): two bridged circles in one cluster, a dense blob of equal mass in
    # the other (2m points so both clusters carry half the samples)
    c1 = circle_points((0.0, 0.0), r, m)
    c2 = circle_points((2.0 * r + gap, 0.0), r, m)
    cluster1 = np.concatenate([c1, c2])
    blob = disk_points((r + gap / 2.0, 3.0 * sep), 0.87 * r, 2 * m)
    blob = place_second(cluster1, blob)
    cloud_a = np.concatenate([cluster1, blob])
    # (b): one circle per cluster
    d1 = circle_points((0.0, 0.0), r, m)
    d2 = place_second(d1, circle_points((0.0, 3.0 * sep), r, m))
    cloud_b = np.concatenate([d1, d2])
    if noise > 0:
        cloud_a = cloud_a + rng.uniform(-noise, noise, size=cloud_a.shape)
        cloud_b = cloud_b + rng.uniform(-noise, noise, size=cloud_b.shape)
    return cloud_a, cloud_b


def experiment_figure1(
    radius: float = 1.0,
    separation: float | None = None,
    noise: float = 0.0,
    seed: int = 0,
    points_per_circle: int = 40,
    mesh: float = 0.25,
    zeta: float = 0.5,
    options: SolverOptions = SolverOptions(),
) -> dict:
    """Same barcodes, different decorated trees: bottlenecks vs DMT estimate."""
    cloud_a, cloud_b = figure_one_clouds(radius, separation, noise, seed, points_per_circle)
    max_radius = 1.35 * radius
    summary_a = summarize_point_cloud(cloud_a, max_radius)
    summary_b = summarize_point_cloud(cloud_b, max_radius)
    est = estimate_dmt_distance(summary_a.dmt, summary_b.dmt, mesh=mesh, zeta=zeta, options=options)
    return {
        "format_version": "1",
        "experiment": "figure1",
        "seed": seed,
        "options": {
            "radius": radius,
            "separation": separation if separation is not None else 3.0 * radius,
            "noise": noise,
            "points_per_circle": points_per_circle,
            "mesh": mesh,
            "zeta": zeta,
        },
        "bottleneck0": bottleneck(summary_a.barcodes[0], summary_b.barcodes[0]),
        "bottleneck1": bottleneck(summary_a.barcodes[1], summary_b.barcodes[1]),
        "dmt_estimate": est.value,
        "certificates": {"a": summary_a.certificate_ok, "b": summary_b.certificate_ok},
    }


# ---------------------------------------------------------------------------
# graph matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphMatchResult:
    assignment: dict[int, int]  # vertex of B -> vertex of A
    estimate: InterleavingEstimate
    coupling: Coupling
    vertex_node_a: dict[int, int]
    vertex_node_b: dict[int, int]


def _origin_vertices(up_tree: MergeTree, node_vertex: dict[int, int]) -> dict[int, int]:
    """Originating graph vertex per upsampled node (walk down to an original node)."""
    out = dict(node_vertex)
    for n in up_tree.node_ids:
        if n in out or n == up_tree.root:
            continue
        cur = n
        while cur not in node_vertex:
            cur = min(up_tree.children[cur])
        out[n] = node_vertex[cur]
    return out


def graph_match(
    g_a: WeightedGraph,
    g_b: WeightedGraph,
    mesh: float = 0.25,
    zeta: float = 0.5,
    degree: int = 1,
    hop_threshold: int = 1,
    options: SolverOptions = SolverOptions(),
) -> GraphMatchResult:
    """Topology-driven node assignment between two node-weighted graphs.

    Decorated merge trees are built from the sublevel filtrations, matched by
    the fused-GW estimator, and each vertex of B is assigned the vertex of A
    whose tree node carries the largest coupling entry in its column.  Every
    graph vertex owns a tree node (absorbed vertices get degree-2 nodes), so
    the assignment is total.
    """
    sweep_a = graph_sweep(g_a, record_all_vertices=True)
    sweep_b = graph_sweep(g_b, record_all_vertices=True)
    dmts = []
    for g, sweep in ((g_a, sweep_a), (g_b, sweep_b)):
        cx = graph_sublevel_complex(g, add_rips_triangles=True, hop_threshold=hop_threshold)
        pairs = reduce_complex(cx)
        dmts.append(lift_decorate(sweep.tree, cx, pairs, degree, sweep.vertex_leaf))
    dmt_a, dmt_b = dmts
    est = estimate_dmt_distance(dmt_a, dmt_b, mesh=mesh, zeta=zeta, options=options)

    origin_a = _origin_vertices(est.tree_f, sweep_a.node_vertex)
    col_of = {node: j for j, node in enumerate(est.node_order_g)}
    heights_a = est.tree_f.height
    mat = est.coupling.matrix
    assignment = {}
    for v in range(g_b.vertex_count):
        node_b = sweep_b.vertex_node[v]
        col = mat[:, col_of[node_b]]
        top = col.max()
        if top <= 0:
            raise ValueError("zero column in coupling")
        cand = [i for i in range(len(col)) if col[i] == top]
        node_a = min((est.node_order_f[i] for i in cand), key=lambda n: (heights_a[n], n))
        assignment[v] = origin_a[node_a]
    return GraphMatchResult(
        assignment=assignment,
        estimate=est,
        coupling=est.coupling,
        vertex_node_a=dict(sweep_a.vertex_node),
        vertex_node_b=dict(sweep_b.vertex_node),
    )
