import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from dmt.barcode import Barcode, Interval
from dmt.cli import main
from dmt.decoration import leaf_barcode
from dmt.mergetree import INF, MergeTree
from dmt.render import render
from dmt.serialize import (
    SchemaError,
    barcode_from_json,
    barcode_to_json,
    dmt_from_json,
    dmt_to_json,
    merge_tree_from_json,
    merge_tree_to_json,
    read_pgm,
)

from helpers import random_lift_dmt, random_tree


class TestRoundtrip:
    def test_tree_roundtrip_random(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            t = random_tree(rng, round_heights=False)
            doc = json.loads(json.dumps(merge_tree_to_json(t)))
            back = merge_tree_from_json(doc)
            assert back.parent == t.parent
            assert back.height == t.height  # bit-exact floats

    def test_root_inf_survives(self):
        t = MergeTree.single_leaf(0.25)
        doc = merge_tree_to_json(t)
        assert any(rec["height"] == "inf" for rec in doc["nodes"])
        assert math.isinf(merge_tree_from_json(doc).height[t.root])

    def test_barcode_multiplicity_preserved(self):
        bc = Barcode((Interval(0.0, 1.0), Interval(0.0, 1.0), Interval(0.5, INF)), degree=1)
        back = barcode_from_json(json.loads(json.dumps(barcode_to_json(bc))))
        assert back.sorted_bars() == bc.sorted_bars()
        assert back.degree == 1

    def test_dmt_roundtrip_preserves_leaf_barcodes(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            dmt = random_lift_dmt(rng)
            back = dmt_from_json(json.loads(json.dumps(dmt_to_json(dmt))))
            assert back.degree == dmt.degree
            for leaf in dmt.tree.leaves:
                assert leaf_barcode(back, leaf).sorted_bars() == leaf_barcode(dmt, leaf).sorted_bars()

    def test_unknown_major_version_rejected(self):
        t = MergeTree.single_leaf(0.0)
        doc = merge_tree_to_json(t)
        doc["format_version"] = "2"
        with pytest.raises(SchemaError):
            merge_tree_from_json(doc)

    def test_missing_version_rejected(self):
        with pytest.raises(SchemaError):
            merge_tree_from_json({"nodes": []})


class TestPgm:
    def test_parse_with_comments(self, tmp_path):
        p = tmp_path / "img.pgm"
        p.write_text("P2\n# test image\n2 2\n4\n0 2\n4 1\n")
        img = read_pgm(str(p))
        assert img.tolist() == [[0.0, 0.5], [1.0, 0.25]]

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "img.pgm"
        p.write_text("P5\n2 2\n255\n")
        with pytest.raises(SchemaError):
            read_pgm(str(p))


class TestRender:
    def test_deterministic_and_well_formed(self):
        rng = np.random.default_rng(5)
        dmt = random_lift_dmt(rng)
        svg1 = render(dmt, "svg", 0.0, 0.0)
        svg2 = render(dmt, "svg", 0.0, 0.0)
        assert svg1 == svg2
        assert svg1.startswith("<svg") and svg1.rstrip().endswith("</svg>")
        dot = render(dmt, "dot", 0.0, 0.0)
        assert dot.startswith("digraph") and dot.rstrip().endswith("}")

    def test_one_offset_line_per_bar(self):
        tree = MergeTree.single_leaf(0.0)
        from dmt.decoration import DecoratedMergeTree, LiftedBar

        dmt = DecoratedMergeTree(
            tree=tree, degree=1,
            lifted_bars=(LiftedBar(Interval(0.25, 1.75), birth_edge=0, death_edge=0),),
        )
        svg = render(dmt, "svg")
        bar_lines = [l for l in svg.splitlines() if "d62728" in l and "<line" in l]
        assert len(bar_lines) == 1
        assert "0.25" in repr((0.25, 1.75))  # endpoints live in the geometry

    def test_empty_decoration_plain_tree(self):
        rng = np.random.default_rng(7)
        tree = random_tree(rng)
        from dmt.decoration import DecoratedMergeTree

        dmt = DecoratedMergeTree(tree=tree, degree=0, lifted_bars=())
        svg = render(dmt, "svg")
        assert not [l for l in svg.splitlines() if "d62728" in l and "<line" in l]


@pytest.fixture
def runner():
    return CliRunner()


class TestCli:
    def test_scalar_tree_roundtrip(self, runner, tmp_path):
        src = tmp_path / "s.csv"
        src.write_text("t,f\n0,0\n1,-1\n2,0\n3,-2\n4,0\n")
        out = tmp_path / "t.json"
        result = runner.invoke(main, ["scalar-tree", "--input", str(src), "--output", str(out)])
        assert result.exit_code == 0, result.output
        tree = merge_tree_from_json(json.loads(out.read_text()))
        assert sorted(tree.height[l] for l in tree.leaves) == [-2.0, -1.0]

    def test_malformed_json_schema_exit(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        out = tmp_path / "out.svg"
        result = runner.invoke(main, ["render", "--input", str(bad), "--output", str(out)])
        assert result.exit_code == 3
        assert not out.exists()  # no partial output

    def test_distance_prints_number_and_writes_coupling(self, runner, tmp_path):
        t1 = MergeTree.single_leaf(0.0)
        t2 = MergeTree.single_leaf(1.0)
        f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
        f1.write_text(json.dumps(merge_tree_to_json(t1)))
        f2.write_text(json.dumps(merge_tree_to_json(t2)))
        out = tmp_path / "d.json"
        result = runner.invoke(
            main,
            ["distance", str(f1), str(f2), "--mode", "tree", "--mesh", "0.5", "--output", str(out)],
        )
        assert result.exit_code == 0, result.output
        value = float(result.output.strip().splitlines()[-1])
        assert value == pytest.approx(1.0)
        assert (tmp_path / "d.coupling.csv").exists()
        assert (tmp_path / "d.trace.csv").exists()

    def test_validate_ok_and_invalid(self, runner, tmp_path):
        good = tmp_path / "good.json"
        good.write_text(json.dumps(merge_tree_to_json(MergeTree.single_leaf(0.0))))
        assert runner.invoke(main, ["validate", "--input", str(good)]).exit_code == 0
        bad_tree = {"format_version": "1", "nodes": [
            {"id": 0, "height": 1.0, "parent": 1},
            {"id": 1, "height": 1.0, "parent": None},
        ]}
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(bad_tree))
        result = runner.invoke(main, ["validate", "--input", str(bad)])
        assert result.exit_code == 3
        assert "height" in result.output or "height" in (result.stderr or "")

    def test_sliding_window_cmd(self, runner, tmp_path):
        src = tmp_path / "s.csv"
        src.write_text("0,1\n1,2\n2,3\n3,4\n")
        out = tmp_path / "pts.csv"
        result = runner.invoke(
            main, ["sliding-window", "--input", str(src), "--output", str(out), "-d", "1", "--tau", "1"]
        )
        assert result.exit_code == 0, result.output
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "x0,x1"
        assert len(rows) == 4

    def test_pointcloud_dmt_and_render(self, runner, tmp_path):
        rng = np.random.default_rng(9)
        angles = 2 * np.pi * np.arange(12) / 12
        pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        src = tmp_path / "pts.csv"
        src.write_text("\n".join(f"{x},{y}" for x, y in pts) + "\n")
        out = tmp_path / "dmt.json"
        result = runner.invoke(
            main,
            ["pointcloud-dmt", "--input", str(src), "--output", str(out), "--max-radius", "2.0"],
        )
        assert result.exit_code == 0, result.output
        dmt = dmt_from_json(json.loads(out.read_text()))
        assert len(dmt.lifted_bars) == 1  # the circle
        svg = tmp_path / "out.svg"
        result = runner.invoke(main, ["render", "--input", str(out), "--output", str(svg)])
        assert result.exit_code == 0
        assert svg.read_text().startswith("<svg")

    def test_graph_dmt_cmd(self, runner, tmp_path):
        edges = tmp_path / "e.csv"
        edges.write_text("u,v\n0,1\n1,2\n2,0\n")
        weights = tmp_path / "w.csv"
        weights.write_text("vertex,weight\n0,0.1\n1,0.2\n2,0.3\n")
        out = tmp_path / "g.json"
        result = runner.invoke(
            main,
            ["graph-dmt", "--edges", str(edges), "--weights", str(weights), "--output", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["degree"] == 1

    def test_image_dmt_cmd(self, runner, tmp_path):
        img = tmp_path / "img.pgm"
        img.write_text("P2\n3 3\n9\n0 9 0\n9 9 9\n0 9 1\n")
        out = tmp_path / "i.json"
        result = runner.invoke(main, ["image-dmt", "--input", str(img), "--output", str(out)])
        assert result.exit_code == 0, result.output
        dmt = dmt_from_json(json.loads(out.read_text()))
        # local minima: the three 0-corners and the 1/9 corner
        assert len(dmt.tree.leaves) == 4

    def test_matrix_cmd(self, runner, tmp_path):
        files = []
        for i, h in enumerate((0.0, 0.5)):
            f = tmp_path / f"t{i}.json"
            f.write_text(json.dumps(merge_tree_to_json(MergeTree.single_leaf(h))))
            files.append(str(f))
        out = tmp_path / "m.csv"
        result = runner.invoke(
            main, ["matrix", *files, "--metric", "tree", "--mesh", "0.5", "--output", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t0.json,t1.json"
        assert float(lines[1].split(",")[1]) == pytest.approx(0.5)

    def test_byte_identical_reruns(self, runner, tmp_path):
        src = tmp_path / "s.csv"
        src.write_text("t,f\n0,0\n1,-1\n2,0\n3,-2\n4,0\n")
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert runner.invoke(main, ["scalar-tree", "--input", str(src), "--output", str(out)]).exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
