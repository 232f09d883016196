"""Command-line surface.

One binary, subcommand per pipeline.  Exit codes: 0 ok, 2 usage, 3 schema
violation, 4 numeric/solver failure, 5 IO failure.  All outputs are written
atomically and runs are deterministic given (inputs, seed); worker count is
capped by the DMT_THREADS environment variable.
"""
from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import pipeline, render as render_mod, serialize
from .decoration import check_disjointness, lift_decorate, validate_dmt
from .filtration import graph_sublevel_complex, graph_sweep, image_to_grid_graph, scalar_to_merge_tree, sliding_window
from .mergetree import validate_tree
from .persistence import barcode as extract_barcode, reduce as reduce_complex
from .serialize import SchemaError
from .transport import SolverError

EXIT_SCHEMA = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


def _run(body):
    try:
        body()
    except SchemaError as exc:
        click.echo(f"error: schema: {exc}", err=True)
        sys.exit(EXIT_SCHEMA)
    except (SolverError, FloatingPointError) as exc:
        click.echo(f"error: numeric: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except OSError as exc:
        click.echo(f"error: io: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as exc:
        click.echo(f"error: schema: {exc}", err=True)
        sys.exit(EXIT_SCHEMA)


@click.group()
def main():
    """Decorated merge tree toolkit.

    Exit codes: 0 ok, 2 usage, 3 schema violation, 4 numeric failure, 5 IO.
    """


solver_options = [
    click.option("--max-iters", default=200, show_default=True),
    click.option("--tol", default=1e-9, show_default=True),
]


def _options(fn, opts):
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command("scalar-tree")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
def scalar_tree_cmd(input_path, output_path):
    """Merge tree of a scalar series CSV (columns t,f)."""

    def body():
        series = serialize.read_series_csv(input_path)
        tree = scalar_to_merge_tree(series)
        serialize.write_json(output_path, serialize.merge_tree_to_json(tree))
        click.echo(f"wrote merge tree with {len(tree.leaves)} leaves to {output_path}")

    _run(body)


@main.command("pointcloud-dmt")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--degree", default=1, show_default=True)
@click.option("--max-radius", default=math.inf, show_default=True, help="Rips truncation radius.")
@click.option("--distances", is_flag=True, help="Input is a distance matrix, not points.")
@click.option("--barcodes-output", type=click.Path(), default=None)
def pointcloud_dmt_cmd(input_path, output_path, degree, max_radius, distances, barcodes_output):
    """Decorated merge tree of a point cloud CSV."""

    def body():
        data = serialize.read_matrix_csv(input_path)
        if distances:
            summary = pipeline.summarize_point_cloud_distances(data, max_radius, degree)
        else:
            summary = pipeline.summarize_point_cloud(data, max_radius, degree)
        serialize.write_json(output_path, serialize.dmt_to_json(summary.dmt))
        if barcodes_output:
            doc = {
                "format_version": serialize.FORMAT_VERSION,
                "barcodes": [serialize.barcode_to_json(b) for b in summary.barcodes.values()],
            }
            serialize.write_json(barcodes_output, doc)
        status = "certified" if summary.certificate_ok else "uncertified"
        click.echo(f"wrote {status} degree-{degree} decoration with {len(summary.dmt.lifted_bars)} bars to {output_path}")

    _run(body)


@main.command("graph-dmt")
@click.option("--edges", "edges_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--degree", default=1, show_default=True)
@click.option("--triangles/--no-triangles", default=True, show_default=True)
@click.option("--hop-threshold", default=2, show_default=True)
def graph_dmt_cmd(edges_path, weights_path, output_path, degree, triangles, hop_threshold):
    """Decorated merge tree of a node-weighted graph."""

    def body():
        g = serialize.graph_from_files(edges_path, weights_path)
        sweep = graph_sweep(g)
        cx = graph_sublevel_complex(g, add_rips_triangles=triangles, hop_threshold=hop_threshold)
        pairs = reduce_complex(cx)
        dmt = lift_decorate(sweep.tree, cx, pairs, degree, sweep.vertex_leaf)
        serialize.write_json(output_path, serialize.dmt_to_json(dmt))
        status = "certified" if dmt.certified else "uncertified"
        click.echo(f"wrote {status} graph decoration with {len(dmt.lifted_bars)} bars to {output_path}")

    _run(body)


@main.command("image-dmt")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--degree", default=1, show_default=True)
@click.option("--eight-connected", is_flag=True)
@click.option("--hop-threshold", default=1, show_default=True)
def image_dmt_cmd(input_path, output_path, degree, eight_connected, hop_threshold):
    """Decorated merge tree of a grayscale image (plain PGM or CSV matrix)."""

    def body():
        pixels = serialize.read_image(input_path)
        g = image_to_grid_graph(pixels, eight_connected=eight_connected)
        sweep = graph_sweep(g)
        cx = graph_sublevel_complex(g, add_rips_triangles=degree > 0, hop_threshold=hop_threshold)
        pairs = reduce_complex(cx)
        dmt = lift_decorate(sweep.tree, cx, pairs, degree, sweep.vertex_leaf)
        serialize.write_json(output_path, serialize.dmt_to_json(dmt))
        click.echo(f"wrote image decoration with {len(dmt.lifted_bars)} bars to {output_path}")

    _run(body)


@main.command("sliding-window")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("-d", "--dimension", "d", required=True, type=int, help="Window dimension d.")
@click.option("--tau", required=True, type=float, help="Delay; a multiple of the sample spacing.")
def sliding_window_cmd(input_path, output_path, d, tau):
    """Delay embedding of a series CSV into a point cloud CSV."""

    def body():
        series = serialize.read_series_csv(input_path)
        points = sliding_window(series, d, tau)
        names = [f"x{i}" for i in range(points.shape[1])]
        serialize.atomic_write_text(output_path, serialize.matrix_to_csv(points, names))
        click.echo(f"wrote {len(points)} embedded points to {output_path}")

    _run(body)


@main.command("distance")
@click.argument("file_a", type=click.Path(exists=True))
@click.argument("file_b", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["tree", "dmt", "bottleneck0", "bottleneck1", "max01"]), default="tree")
@click.option("--mesh", default=0.5, show_default=True)
@click.option("--zeta", default=0.5, show_default=True)
@click.option("--norm", type=click.Choice(["inf", "l2"]), default="inf", show_default=True)
@click.option("--output", "output_path", type=click.Path(), default=None, help="Write a JSON report; coupling CSV lands beside it.")
@click.option("--max-iters", default=200, show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
def distance_cmd(file_a, file_b, mode, mesh, zeta, norm, output_path, max_iters, tol):
    """Distance between two serialized objects; prints one number."""

    def body():
        options = pipeline.SolverOptions(max_iters=max_iters, tol=tol)
        extras = {}
        if mode == "tree":
            ta = serialize.merge_tree_from_json(serialize.read_json(file_a))
            tb = serialize.merge_tree_from_json(serialize.read_json(file_b))
            est = pipeline.estimate_tree_distance(ta, tb, mesh, norm, options)
            value = est.value
            extras["estimate"] = est
        elif mode == "dmt":
            da = serialize.dmt_from_json(serialize.read_json(file_a))
            db = serialize.dmt_from_json(serialize.read_json(file_b))
            est = pipeline.estimate_dmt_distance(da, db, mesh, zeta, norm, options)
            value = est.value
            extras["estimate"] = est
        else:
            from .metrics import bottleneck

            degs = {"bottleneck0": (0,), "bottleneck1": (1,), "max01": (0, 1)}[mode]
            ba = _load_barcodes(file_a)
            bb = _load_barcodes(file_b)
            value = max(bottleneck(ba[d], bb[d]) for d in degs)
        click.echo(repr(float(value)))
        if output_path:
            doc = {
                "format_version": serialize.FORMAT_VERSION,
                "mode": mode,
                "value": None if math.isinf(value) else value,
                "value_is_infinite": math.isinf(value),
                "inputs": [file_a, file_b],
                "options": {"mesh": mesh, "zeta": zeta, "norm": norm},
            }
            serialize.write_json(output_path, doc)
            if "estimate" in extras:
                est = extras["estimate"]
                base = os.path.splitext(output_path)[0]
                serialize.atomic_write_text(
                    base + ".coupling.csv",
                    serialize.matrix_to_csv(est.coupling.matrix, [f"n{j}" for j in est.node_order_g]),
                )
                serialize.atomic_write_text(base + ".trace.csv", serialize.trace_to_csv(est.trace))

    _run(body)


def _load_barcodes(path: str) -> dict:
    """Degree-keyed barcodes from a barcode, multi-barcode or DMT document."""
    doc = serialize.read_json(path)
    from .barcode import Barcode

    out: dict[int, Barcode] = {}
    if "barcodes" in doc:
        for rec in doc["barcodes"]:
            bc = serialize.barcode_from_json(rec)
            out[bc.degree] = bc
    elif "nodes" in doc and "bars" in doc:
        from .decoration import pushforward_barcode

        dmt = serialize.dmt_from_json(doc)
        out[dmt.degree] = pushforward_barcode(dmt)
    elif "bars" in doc:
        bc = serialize.barcode_from_json(doc)
        out[bc.degree] = bc
    else:
        raise SchemaError(f"{path}: no barcode payload found")
    for d in (0, 1):
        out.setdefault(d, Barcode((), d))
    return out


@main.command("matrix")
@click.argument("files", nargs=-1, type=click.Path(exists=True))
@click.option("--metric", type=click.Choice(["tree", "dmt", "bottleneck0", "bottleneck1", "max01"]), required=True)
@click.option("--mesh", default=0.5, show_default=True)
@click.option("--zeta", default=0.5, show_default=True)
@click.option("--norm", type=click.Choice(["inf", "l2"]), default="inf", show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--max-iters", default=200, show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
def matrix_cmd(files, metric, mesh, zeta, norm, output_path, max_iters, tol):
    """Pairwise distance matrix over serialized items, written as CSV."""

    def body():
        if len(files) < 1:
            raise SchemaError("need at least one input file")
        options = pipeline.SolverOptions(max_iters=max_iters, tol=tol)
        if metric == "tree":
            items = [serialize.merge_tree_from_json(serialize.read_json(f)) for f in files]
        elif metric == "dmt":
            items = [serialize.dmt_from_json(serialize.read_json(f)) for f in files]
        else:
            items = [_load_barcodes(f) for f in files]
        mat = pipeline.pairwise_matrix(items, metric, mesh=mesh, zeta=zeta, norm=norm, options=options)
        names = [os.path.basename(f) for f in files]
        serialize.atomic_write_text(output_path, serialize.matrix_to_csv(mat, names))
        click.echo(f"wrote {mat.shape[0]}x{mat.shape[1]} {metric} matrix to {output_path}")

    _run(body)


@main.command("experiment")
@click.argument("name", type=click.Choice(["scalar-classification", "figure1"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--samples-per-class", default=10, show_default=True)
@click.option("--mesh", default=0.5, show_default=True)
@click.option("--zeta", default=0.5, show_default=True)
@click.option("--radius", default=1.0, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--max-iters", default=200, show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
def experiment_cmd(name, seed, output_path, samples_per_class, mesh, zeta, radius, noise, max_iters, tol):
    """Run a built-in experiment and write its JSON report."""

    def body():
        options = pipeline.SolverOptions(max_iters=max_iters, tol=tol)
        if name == "scalar-classification":
            report = pipeline.experiment_scalar_classification(
                seed=seed, samples_per_class=samples_per_class, mesh=mesh, options=options
            )
            summary = ", ".join(f"{k}={v:.4f}" for k, v in report["accuracy"].items())
        else:
            report = pipeline.experiment_figure1(
                radius=radius, noise=noise, seed=seed, mesh=mesh, zeta=zeta, options=options
            )
            summary = (
                f"bottleneck0={report['bottleneck0']:.4f} bottleneck1={report['bottleneck1']:.4f} "
                f"dmt={report['dmt_estimate']:.4f}"
            )
        serialize.write_json(output_path, report)
        click.echo(f"{name}: {summary} -> {output_path}")

    _run(body)


@main.command("render")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["svg", "dot"]), default="svg", show_default=True)
@click.option("--bar-threshold", default=0.0, show_default=True)
@click.option("--tree-threshold", default=0.0, show_default=True)
def render_cmd(input_path, output_path, fmt, bar_threshold, tree_threshold):
    """Render a decorated merge tree to SVG or DOT."""

    def body():
        doc = serialize.read_json(input_path)
        if "bars" in doc:
            dmt = serialize.dmt_from_json(doc)
        else:
            from .decoration import DecoratedMergeTree

            tree = serialize.merge_tree_from_json(doc)
            dmt = DecoratedMergeTree(tree=tree, degree=0, lifted_bars=())
        text = render_mod.render(dmt, fmt, bar_threshold, tree_threshold)
        serialize.atomic_write_text(output_path, text)
        click.echo(f"rendered {fmt} to {output_path}")

    _run(body)


@main.command("validate")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
def validate_cmd(input_path):
    """Validate a serialized merge tree or decorated merge tree."""

    def body():
        doc = serialize.read_json(input_path)
        if "bars" in doc:
            dmt = serialize.dmt_from_json(doc)
            problems = validate_tree(dmt.tree) + validate_dmt(dmt)
            cert = check_disjointness(dmt)
            if not cert.ok:
                click.echo(f"note: decoration uncertified; violating bar pairs {list(cert.violations)}")
        else:
            tree = serialize.merge_tree_from_json(doc)
            problems = validate_tree(tree)
        if problems:
            raise SchemaError("; ".join(problems))
        click.echo("ok")

    _run(body)


if __name__ == "__main__":
    main()
