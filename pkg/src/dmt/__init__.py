"""Decorated merge trees: construction, comparison and visualization."""

from .barcode import Barcode, Interval
from .decoration import (
    DecoratedMergeTree,
    DisjointnessCertificate,
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
from .filtration import (
    FilteredComplex,
    SweepResult,
    WeightedGraph,
    density_subsample,
    graph_merge_tree,
    graph_sublevel_complex,
    graph_sweep,
    image_to_grid_graph,
    scalar_to_merge_tree,
    single_linkage_tree,
    single_linkage_sweep,
    sliding_window,
    vietoris_rips,
)
from .mergetree import Labeling, MergeTree, lca_matrix, merge_height_matrix, upsample, validate_tree
from .metrics import (
    Matching,
    bottleneck,
    epsilon_matching_check,
    exhaustive_labeled_distance,
    labeled_cost,
    matching_cost_barcodes,
)
from .persistence import PersistencePair, barcode, reduce
from .pipeline import (
    InterleavingEstimate,
    SolverOptions,
    estimate_dmt_distance,
    estimate_tree_distance,
    experiment_figure1,
    experiment_scalar_classification,
    graph_match,
    labelings_from_maps,
    pairwise_matrix,
    summarize_point_cloud,
    tree_to_network,
)
from .transport import (
    Coupling,
    MeasureNetwork,
    SolverResult,
    StructuredMeasureNetwork,
    coupling_to_maps,
    gw_distortion,
    gw_distortion_loop,
    ot_lmo,
    solve_fgw,
    solve_gw,
)

__version__ = "0.1.0"
