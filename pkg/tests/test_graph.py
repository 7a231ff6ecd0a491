import json

import numpy as np
import pytest

from dualedge.errors import GraphError
from dualedge.graph import (GraphConfig, InputSpec, Node, default_sffnet_neck, execute, graph_weight_shapes,
                            init_graph_weights, validate)
from dualedge.rng import SplitMix64

from conftest import rand_tensor

SMALL = (8, 16, 32, 64)


def _pyramid(widths, size, seed=0, batch=1):
    g = SplitMix64(seed)
    return {f"C{i + 2}": rand_tensor(g, (batch, c, size // 2 ** (i + 2), size // 2 ** (i + 2)))
            for i, c in enumerate(widths)}


def test_default_neck_shapes_full_width():
    report = validate(default_sffnet_neck())
    assert report.shapes["P3"] == (1, 128, 80, 80)
    assert report.shapes["P4"] == (1, 256, 40, 40)
    assert report.shapes["P5"] == (1, 512, 20, 20)


def test_default_neck_structure():
    cfg = default_sffnet_neck()
    wpm = [n for n in cfg.nodes if n.op == "wpm"]
    ld = [n for n in cfg.nodes if n.op == "ldconv"]
    assert len(wpm) == 1 and cfg.node("P3").inputs == [wpm[0].id]
    assert len(ld) == 1 and ld[0].inputs == ["C2"]


def test_default_neck_runs_repeatably():
    cfg = default_sffnet_neck(SMALL, (128, 128))
    inputs = _pyramid(SMALL, 128)
    w = init_graph_weights(cfg, 42)
    a = execute(cfg, inputs, w)
    assert {k: v.shape for k, v in a.items()} == {"P3": (1, 16, 16, 16), "P4": (1, 32, 8, 8), "P5": (1, 64, 4, 4)}
    b = execute(cfg, inputs, w, workers=4)
    c = execute(cfg, inputs, w, order=validate(cfg).order)
    for k in a:
        assert np.array_equal(a[k], b[k]) and np.array_equal(a[k], c[k])
    with pytest.raises(GraphError, match="before its input"):
        execute(cfg, inputs, w, order=list(reversed(validate(cfg).order)))


def test_identity_graph():
    cfg = GraphConfig([InputSpec("x", 3)], [Node("y", "output", ["x"])], ["y"])
    x = rand_tensor(SplitMix64(1), (2, 3, 5, 5))
    out = execute(cfg, {"x": x})
    assert np.array_equal(out["y"], x)


def test_delta_conv_passthrough():
    cfg = GraphConfig([InputSpec("x", 2)], [Node("c", "conv", ["x"], {"kernel": 3, "act": False})], ["c"])
    w = {"c.weight": np.zeros((2, 2, 3, 3), np.float32), "c.bias": np.zeros(2, np.float32)}
    w["c.weight"][[0, 1], [0, 1], 1, 1] = 1
    x = rand_tensor(SplitMix64(2), (1, 2, 6, 7))
    assert np.array_equal(execute(cfg, {"x": x}, w)["c"], x)


def test_concat_mismatch_names_both_nodes():
    cfg = GraphConfig([InputSpec("a", 2, 8), InputSpec("b", 2, 16)], [Node("cat", "concat", ["a", "b"])],
                      ["cat"], image_size=(640, 640))
    with pytest.raises(GraphError) as err:
        validate(cfg)
    assert "'a'" in str(err.value) and "'b'" in str(err.value)
    assert err.value.axis == "height"


@pytest.mark.parametrize("cfg,match", [
    (GraphConfig([InputSpec("x", 2)], [], ["x"]), "no nodes"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "conv", ["b"]), Node("b", "conv", ["a"])], ["a"]), "cycle"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "conv", ["zz"])], ["a"]), "unknown input"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "warp", ["x"])], ["a"]), "unknown op"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "conv", ["x"]), Node("a", "conv", ["x"])], ["a"]), "duplicate"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "conv", ["x"], {"dilation": 2})], ["a"]), "unknown params"),
    (GraphConfig([InputSpec("x", 6)], [Node("a", "wpm", ["x"])], ["a"]), "divisible"),
    (GraphConfig([InputSpec("x", 2)], [Node("a", "conv", ["x"])], ["q"]), "not a node"),
])
def test_validation_errors(cfg, match):
    cfg.image_size = (16, 16)
    with pytest.raises(GraphError, match=match):
        validate(cfg)


def test_config_roundtrip(tmp_path):
    cfg = default_sffnet_neck(SMALL, (256, 256), batch=2, wpm_kernel=7)
    path = tmp_path / "neck.json"
    cfg.save(path)
    again = GraphConfig.load(path)
    assert again == cfg
    assert again.dumps() == cfg.dumps()
    d = json.loads(cfg.dumps())
    d["extra"] = 1
    with pytest.raises(GraphError, match="unknown keys"):
        GraphConfig.from_dict(d)
    d.pop("extra")
    d["schema_version"] = 2
    with pytest.raises(GraphError, match="schema_version"):
        GraphConfig.from_dict(d)


def test_unbound_input_and_channel_mismatch():
    cfg = GraphConfig([InputSpec("x", 2)], [Node("y", "output", ["x"])], ["y"])
    with pytest.raises(GraphError, match="not bound"):
        execute(cfg, {})
    with pytest.raises(GraphError, match="channels"):
        execute(cfg, {"x": np.zeros((1, 3, 4, 4), np.float32)})


def test_weight_names_follow_node_ids():
    shapes = graph_weight_shapes(default_sffnet_neck(SMALL, (128, 128)))
    assert shapes["T3.weight"] == (16, 16 + 32 + 8, 1, 1)
    assert shapes["ld2.proj.weight"] == (8, 8 * 9, 1, 1)
    assert shapes["wpm3.dw_sq.weight"] == (4, 1, 31, 31)


def _random_graph(g):
    """Random shape-consistent DAG over a two-level pyramid."""
    c0 = 4 * g.integers(1, 3)
    inputs = [InputSpec("A", c0, 1), InputSpec("B", 4, 2)]
    live = {"A": (c0, 1), "B": (4, 2)}  # id -> (channels, stride)
    nodes = []
    for i in range(g.integers(2, 7)):
        nid = f"n{i}"
        src = sorted(live)[g.integers(0, len(live))]
        c, s = live[src]
        kind = g.integers(0, 6)
        if kind == 0:
            nodes.append(Node(nid, "conv", [src], {"out_channels": 4 * g.integers(1, 3), "kernel": 1}))
            live[nid] = (nodes[-1].params["out_channels"], s)
        elif kind == 1 and s == 1:
            nodes.append(Node(nid, "downsample", [src], {"out_channels": 4}))
            live[nid] = (4, 2)
        elif kind == 2 and s == 2:
            nodes.append(Node(nid, "upsample", [src], {"factor": 2}))
            live[nid] = (c, 1)
        elif kind == 3:
            same = [k for k in sorted(live) if live[k][1] == s]
            other = same[g.integers(0, len(same))]
            nodes.append(Node(nid, "concat", [src, other]))
            live[nid] = (c + live[other][0], s)
        elif kind == 4:
            nodes.append(Node(nid, "wpm", [src], {"K": 3}))
            live[nid] = (c, s)
        else:
            nodes.append(Node(nid, "ldconv", [src], {"num_points": g.integers(1, 6), "out_channels": 4}))
            live[nid] = (4, s)
    last = nodes[-1].id
    nodes.append(Node("out", "output", [last]))
    return GraphConfig(inputs, nodes, ["out"], image_size=(8, 8)), live[last]


def test_random_graphs_infer_and_execute_consistently():
    g = SplitMix64(2024)
    for _ in range(50):
        cfg, (c, s) = _random_graph(g)
        report = validate(cfg)
        assert report.shapes["out"] == (1, c, 8 // s, 8 // s)
        inputs = {"A": rand_tensor(g, (1, cfg.inputs[0].channels, 8, 8)), "B": rand_tensor(g, (1, 4, 4, 4))}
        w = init_graph_weights(cfg, 1)
        a = execute(cfg, inputs, w)["out"]
        assert a.shape == report.shapes["out"]
        assert np.array_equal(a, execute(cfg, inputs, w, workers=3)["out"])
