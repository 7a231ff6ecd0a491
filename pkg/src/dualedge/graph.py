"""Declarative feature-graph executor and the default pyramid neck.

A :class:`GraphConfig` lists named entry tensors (channels and stride relative
to the image) and nodes ``(id, op, inputs, params)``. Node inputs refer to
other node ids or directly to entry names. :func:`validate` infers every
node's output shape statically; :func:`execute` evaluates nodes in dependency
order and checks each result against the inferred shape.

Node weights live under the node id, e.g. a ``conv`` node ``T4`` reads
``T4.weight``, ``T4.bias`` and optional ``T4.bn.*``.

Config files are JSON with a ``schema_version`` field; unknown keys are
rejected at every level.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import weights as W
from .deie import DeieParams, deie_forward
from .errors import GraphError
from .ldconv import LdconvConfig, ldconv_forward, ldconv_weight_shapes
from .mddc import MddcConfig, mddc_forward, mddc_weight_shapes
from .tensor import Padding, as_tensor, bilinear_upsample, cbs, concat_channels, conv2d
from .wpm import WpmConfig, wpm_forward, wpm_weight_shapes

SCHEMA_VERSION = 1
Shape = Tuple[int, int, int, int]

OP_PARAMS = {
    "input": set(),
    "output": set(),
    "conv": {"out_channels", "kernel", "stride", "groups", "act"},
    "downsample": {"out_channels", "act"},
    "upsample": {"factor"},
    "concat": set(),
    "mddc": {"scales", "reduce_ratio", "deie", "bypass_activation"},
    "wpm": {"K", "fuse_activation", "merge_conv"},
    "ldconv": {"num_points", "out_channels", "stride"},
    "deie": {"alpha", "beta", "gamma", "k", "r", "normalize_magnitude", "gates", "combine"},
}


@dataclass
class InputSpec:
    name: str
    channels: int
    stride: int = 1


@dataclass
class Node:
    id: str
    op: str
    inputs: List[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)


@dataclass
class GraphConfig:
    inputs: List[InputSpec]
    nodes: List[Node]
    outputs: List[str]
    image_size: Optional[Tuple[int, int]] = None
    batch: int = 1
    schema_version: int = SCHEMA_VERSION

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise GraphError(f"unknown node id {node_id!r}", node=node_id)

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "batch": self.batch,
            "inputs": [vars(i).copy() for i in self.inputs],
            "nodes": [{"id": n.id, "op": n.op, "inputs": list(n.inputs), "params": dict(n.params)}
                      for n in self.nodes],
            "outputs": list(self.outputs),
        }
        if self.image_size is not None:
            d["image_size"] = list(self.image_size)
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "GraphConfig":
        _check_keys(d, {"schema_version", "batch", "inputs", "nodes", "outputs", "image_size"}, "graph config")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise GraphError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        inputs = []
        for i in d.get("inputs", []):
            _check_keys(i, {"name", "channels", "stride"}, "input entry")
            inputs.append(InputSpec(**i))
        nodes = []
        for n in d.get("nodes", []):
            _check_keys(n, {"id", "op", "inputs", "params"}, f"node {n.get('id')!r}")
            nodes.append(Node(n["id"], n["op"], list(n.get("inputs", [])), dict(n.get("params", {}))))
        size = d.get("image_size")
        return cls(inputs, nodes, list(d.get("outputs", [])),
                   tuple(size) if size is not None else None, d.get("batch", 1), version)

    @classmethod
    def loads(cls, text: str) -> "GraphConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "GraphConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise GraphError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise GraphError(f"{where}: unknown keys {sorted(extra)}")


@dataclass
class ShapeReport:
    order: List[str]
    shapes: Dict[str, Shape]

    def table(self) -> str:
        lines = [f"{'node':<16} {'shape':>24}"]
        for nid in self.order:
            lines.append(f"{nid:<16} {str(self.shapes[nid]):>24}")
        return "\n".join(lines)


def _topo_order(cfg: GraphConfig) -> List[str]:
    entry = {i.name for i in cfg.inputs}
    ids = [n.id for n in cfg.nodes]
    seen = set()
    for nid in ids:
        if nid in seen or nid in entry:
            raise GraphError(f"duplicate node id {nid!r}", node=nid)
        seen.add(nid)
    pending = {}
    for n in cfg.nodes:
        if n.op not in OP_PARAMS:
            raise GraphError(f"node {n.id!r}: unknown op {n.op!r}", node=n.id)
        deps = []
        for ref in n.inputs:
            if ref in entry:
                continue
            if ref not in seen:
                raise GraphError(f"node {n.id!r}: unknown input id {ref!r}", node=n.id)
            deps.append(ref)
        pending[n.id] = set(deps)
    order = []
    done = set()
    while pending:
        ready = [nid for nid in ids if nid in pending and pending[nid] <= done]
        if not ready:
            stuck = next(nid for nid in ids if nid in pending)
            raise GraphError(f"cycle detected through node {stuck!r}", node=stuck)
        for nid in ready:
            order.append(nid)
            done.add(nid)
            del pending[nid]
    return order


def _levels(cfg: GraphConfig, order: Sequence[str]) -> List[List[str]]:
    depth = {}
    for nid in order:
        refs = [r for r in cfg.node(nid).inputs if r in depth]
        depth[nid] = 1 + max((depth[r] for r in refs), default=-1)
    out = [[] for _ in range(max(depth.values()) + 1)]
    for nid in order:
        out[depth[nid]].append(nid)
    return out


def _entry_shapes(cfg: GraphConfig, input_shapes: Optional[Mapping] = None) -> Dict[str, Shape]:
    shapes = {}
    for spec in cfg.inputs:
        if input_shapes is not None and spec.name in input_shapes:
            shp = tuple(int(v) for v in input_shapes[spec.name])
            if len(shp) != 4:
                raise GraphError(f"input {spec.name!r}: expected rank 4, got {shp}", node=spec.name)
            if shp[1] != spec.channels:
                raise GraphError(f"input {spec.name!r}: axis 'channels' is {shp[1]}, config declares "
                                 f"{spec.channels}", node=spec.name, axis="channels")
        elif cfg.image_size is not None:
            h, w = cfg.image_size
            if h % spec.stride or w % spec.stride:
                raise GraphError(f"input {spec.name!r}: stride {spec.stride} does not divide image size",
                                 node=spec.name)
            shp = (cfg.batch, spec.channels, h // spec.stride, w // spec.stride)
        else:
            raise GraphError(f"input {spec.name!r}: no shape given and no image_size in config",
                             node=spec.name)
        shapes[spec.name] = shp
    return shapes


def _check_params(node: Node):
    extra = set(node.params) - OP_PARAMS[node.op]
    if extra:
        raise GraphError(f"node {node.id!r}: unknown params {sorted(extra)} for op {node.op!r}", node=node.id)


def _arity(node: Node, lo: int, hi: Optional[int] = None):
    k = len(node.inputs)
    if k < lo or (hi is not None and k > hi):
        want = f"at least {lo}" if hi is None else str(lo) if hi == lo else f"{lo} to {hi}"
        raise GraphError(f"node {node.id!r}: op {node.op!r} takes {want} inputs, got {k}", node=node.id)


def _mddc_cfg(node: Node) -> MddcConfig:
    return MddcConfig(prefix=node.id, **node.params)


def _wpm_cfg(node: Node) -> WpmConfig:
    return WpmConfig(prefix=node.id, **node.params)


def _ldconv_cfg(node: Node) -> LdconvConfig:
    return LdconvConfig(prefix=node.id, **node.params)


def _deie_params(node: Node) -> DeieParams:
    return DeieParams(**node.params)


def _infer(node: Node, ins: List[Shape]) -> Shape:
    op, p = node.op, node.params
    if op in ("input", "output"):
        _arity(node, 1, 1)
        return ins[0]
    if op == "concat":
        _arity(node, 1)
        n, _, h, w = ins[0]
        for ref, shp in zip(node.inputs[1:], ins[1:]):
            for axis, a, b in (("batch", n, shp[0]), ("height", h, shp[2]), ("width", w, shp[3])):
                if a != b:
                    raise GraphError(f"node {node.id!r}: concat inputs {node.inputs[0]!r} and {ref!r} "
                                     f"disagree on axis '{axis}' ({a} vs {b})", node=node.id, axis=axis)
        return (n, sum(s[1] for s in ins), h, w)
    _arity(node, 1, 1)
    n, c, h, w = ins[0]
    if op == "conv":
        k = p.get("kernel", 1)
        s = p.get("stride", 1)
        g = p.get("groups", 1)
        co = p.get("out_channels", c)
        if c % g or co % g:
            raise GraphError(f"node {node.id!r}: groups {g} do not divide channels", node=node.id,
                             axis="channels")
        pad = (k - 1) // 2
        return (n, co, (h + 2 * pad - k) // s + 1, (w + 2 * pad - k) // s + 1)
    if op == "downsample":
        return (n, p.get("out_channels", c), (h - 1) // 2 + 1, (w - 1) // 2 + 1)
    if op == "upsample":
        f = p.get("factor", 2)
        return (n, c, h * f, w * f)
    if op == "mddc":
        cfg = _mddc_cfg(node)
        try:
            cfg.reduced(c)
        except ValueError as exc:
            raise GraphError(f"node {node.id!r}: {exc}", node=node.id, axis="channels") from exc
        if max(cfg.scales) > min(h, w):
            raise GraphError(f"node {node.id!r}: pooled scale {max(cfg.scales)} exceeds plane {(h, w)}",
                             node=node.id, axis="height" if h <= w else "width")
        return (n, c, h, w)
    if op == "wpm":
        _wpm_cfg(node)
        if c % 4:
            raise GraphError(f"node {node.id!r}: channels {c} not divisible by 4", node=node.id,
                             axis="channels")
        return (n, c, h, w)
    if op == "ldconv":
        cfg = _ldconv_cfg(node)
        s = cfg.stride
        return (n, cfg.c_out(c), (h - 1) // s + 1, (w - 1) // s + 1)
    if op == "deie":
        dp = _deie_params(node)
        return (n, 3 * c if dp.combine == "concat" else c, h, w)
    raise GraphError(f"node {node.id!r}: unknown op {op!r}", node=node.id)


def validate(cfg: GraphConfig, input_shapes: Optional[Mapping] = None) -> ShapeReport:
    """Static shape inference over the whole graph; raises on the first inconsistency."""
    if not cfg.nodes:
        raise GraphError("graph has no nodes")
    order = _topo_order(cfg)
    shapes: Dict[str, Shape] = dict(_entry_shapes(cfg, input_shapes))
    for nid in order:
        node = cfg.node(nid)
        _check_params(node)
        try:
            shapes[nid] = _infer(node, [shapes[r] for r in node.inputs])
        except GraphError:
            raise
        except (ValueError, TypeError) as exc:
            raise GraphError(f"node {nid!r}: {exc}", node=nid) from exc
        if min(shapes[nid]) < 1:
            raise GraphError(f"node {nid!r}: empty output {shapes[nid]}", node=nid)
    if not cfg.outputs:
        raise GraphError("graph declares no outputs")
    for out in cfg.outputs:
        if out not in shapes or out in {i.name for i in cfg.inputs}:
            raise GraphError(f"declared output {out!r} is not a node", node=out)
    return ShapeReport(order, {nid: shapes[nid] for nid in order})


def node_weight_shapes(node: Node, in_shapes: List[Shape]) -> W.Shapes:
    c = in_shapes[0][1] if in_shapes else 0
    p = node.params
    if node.op == "conv":
        k = p.get("kernel", 1)
        g = p.get("groups", 1)
        return W.conv_shapes(node.id, p.get("out_channels", c), c // g, k, k)
    if node.op == "downsample":
        return W.conv_shapes(node.id, p.get("out_channels", c), c, 3, 3)
    if node.op == "mddc":
        return mddc_weight_shapes(c, _mddc_cfg(node))
    if node.op == "wpm":
        return wpm_weight_shapes(c, _wpm_cfg(node))
    if node.op == "ldconv":
        return ldconv_weight_shapes(c, _ldconv_cfg(node))
    return {}


def graph_weight_shapes(cfg: GraphConfig, input_shapes: Optional[Mapping] = None) -> W.Shapes:
    report = validate(cfg, input_shapes)
    shapes = dict(_entry_shapes(cfg, input_shapes))
    shapes.update(report.shapes)
    out = {}
    for nid in report.order:
        node = cfg.node(nid)
        out.update(node_weight_shapes(node, [shapes[r] for r in node.inputs]))
    return out


def init_graph_weights(cfg: GraphConfig, seed: int = 42, input_shapes: Optional[Mapping] = None):
    return W.init_weights(graph_weight_shapes(cfg, input_shapes), seed)


def _run_node(node: Node, ins: List[np.ndarray], weights: Mapping) -> np.ndarray:
    op, p = node.op, node.params
    if op in ("input", "output"):
        return ins[0]
    if op == "concat":
        return concat_channels(ins)
    x = ins[0]
    c = x.shape[1]
    if op == "conv":
        k = p.get("kernel", 1)
        g = p.get("groups", 1)
        co = p.get("out_channels", c)
        spec = W.conv_spec(weights, node.id, (co, c // g, k, k), stride=p.get("stride", 1),
                           padding=Padding.uniform((k - 1) // 2), groups=g)
        if p.get("act", True):
            return cbs(x, spec, W.bn_params(weights, node.id + ".bn", co))
        return conv2d(x, spec)
    if op == "downsample":
        co = p.get("out_channels", c)
        spec = W.conv_spec(weights, node.id, (co, c, 3, 3), stride=2, padding=Padding.uniform(1))
        if p.get("act", True):
            return cbs(x, spec, W.bn_params(weights, node.id + ".bn", co))
        return conv2d(x, spec)
    if op == "upsample":
        f = p.get("factor", 2)
        return bilinear_upsample(x, (x.shape[2] * f, x.shape[3] * f))
    if op == "mddc":
        return mddc_forward(x, _mddc_cfg(node), weights)
    if op == "wpm":
        return wpm_forward(x, _wpm_cfg(node), weights)
    if op == "ldconv":
        return ldconv_forward(x, _ldconv_cfg(node), weights)
    if op == "deie":
        dp = _deie_params(node)
        gates = W.require(weights, node.id + ".gates", (3,)) if node.id + ".gates" in weights else None
        return deie_forward(x, dp, gates)
    raise GraphError(f"node {node.id!r}: unknown op {op!r}", node=node.id)


def execute(cfg: GraphConfig, inputs: Mapping[str, np.ndarray], weights: Mapping = None,
            workers: int = 1, order: Optional[Sequence[str]] = None) -> Dict[str, np.ndarray]:
    """Evaluate the graph and return the declared outputs by id.

    ``workers > 1`` evaluates each dependency level concurrently; ``order``
    forces a specific serial topological order. Every schedule yields
    bitwise-identical results.
    """
    for spec in cfg.inputs:
        if spec.name not in inputs:
            raise GraphError(f"graph input {spec.name!r} is not bound", node=spec.name)
    values: Dict[str, np.ndarray] = {k: as_tensor(v, k) for k, v in inputs.items()
                                      if k in {i.name for i in cfg.inputs}}
    report = validate(cfg, {k: v.shape for k, v in values.items()})
    if weights is None:
        weights = init_graph_weights(cfg, input_shapes={k: v.shape for k, v in values.items()})

    def run(nid):
        node = cfg.node(nid)
        y = _run_node(node, [values[r] for r in node.inputs], weights)
        if tuple(y.shape) != report.shapes[nid]:
            raise GraphError(f"node {nid!r}: runtime shape {y.shape} deviates from inferred "
                             f"{report.shapes[nid]} (internal error)", node=nid)
        return y

    if order is not None:
        if sorted(order) != sorted(report.order):
            raise GraphError("explicit order must list every node exactly once")
        for nid in order:
            missing = [r for r in cfg.node(nid).inputs if r not in values]
            if missing:
                raise GraphError(f"order evaluates {nid!r} before its input {missing[0]!r}", node=nid)
            values[nid] = run(nid)
    elif workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for level in _levels(cfg, report.order):
                for nid, y in zip(level, pool.map(run, level)):
                    values[nid] = y
    else:
        for nid in report.order:
            values[nid] = run(nid)
    return {out: values[out] for out in cfg.outputs}


def default_sffnet_neck(widths: Sequence[int] = (64, 128, 256, 512), image_size=(640, 640),
                        batch: int = 1, wpm_kernel: int = 31, ldconv_points: int = 9) -> GraphConfig:
    """Concat-fusion neck over C2..C5 (strides 4, 8, 16, 32) producing P3, P4, P5.

    Top-down: ``T4 = fuse(C4 ++ up(C5))``, ``T3 = fuse(C3 ++ up(T4) ++ down(ldconv(C2)))``,
    ``P3 = wpm(T3)``. Bottom-up: ``P4 = fuse(T4 ++ down(P3))``,
    ``P5 = fuse(C5 ++ down(P4))``. Fuse nodes are 1x1 CBS convolutions.
    """
    c2, c3, c4, c5 = (int(v) for v in widths)
    if isinstance(image_size, int):
        image_size = (image_size, image_size)
    inputs = [InputSpec("C2", c2, 4), InputSpec("C3", c3, 8), InputSpec("C4", c4, 16), InputSpec("C5", c5, 32)]
    nodes = [
        Node("up5", "upsample", ["C5"], {"factor": 2}),
        Node("cat4", "concat", ["C4", "up5"]),
        Node("T4", "conv", ["cat4"], {"out_channels": c4, "kernel": 1}),
        Node("ld2", "ldconv", ["C2"], {"num_points": ldconv_points, "out_channels": c2}),
        Node("ld2_down", "downsample", ["ld2"], {"out_channels": c2}),
        Node("up4", "upsample", ["T4"], {"factor": 2}),
        Node("cat3", "concat", ["C3", "up4", "ld2_down"]),
        Node("T3", "conv", ["cat3"], {"out_channels": c3, "kernel": 1}),
        Node("wpm3", "wpm", ["T3"], {"K": wpm_kernel}),
        Node("P3", "output", ["wpm3"]),
        Node("down3", "downsample", ["wpm3"], {"out_channels": c3}),
        Node("cat4b", "concat", ["T4", "down3"]),
        Node("T4b", "conv", ["cat4b"], {"out_channels": c4, "kernel": 1}),
        Node("P4", "output", ["T4b"]),
        Node("down4", "downsample", ["T4b"], {"out_channels": c4}),
        Node("cat5", "concat", ["C5", "down4"]),
        Node("T5", "conv", ["cat5"], {"out_channels": c5, "kernel": 1}),
        Node("P5", "output", ["T5"]),
    ]
    return GraphConfig(inputs, nodes, ["P3", "P4", "P5"], tuple(image_size), batch)
