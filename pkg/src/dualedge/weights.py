"""Named parameter lookup and seeded initialization.

A weights set is any ``Mapping[str, np.ndarray]``. Convolution entries are
mandatory; batchnorm statistics and branch gates fall back to neutral
defaults (mean 0, var 1, scale 1, shift 0, gate 1) when absent.
"""

from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import MissingWeightError, ShapeError
from .rng import SplitMix64, name_seed
from .tensor import BnParams, ConvSpec, Padding

Shapes = Dict[str, Tuple[int, ...]]


def require(weights: Mapping, name: str, shape=None) -> np.ndarray:
    if name not in weights:
        raise MissingWeightError(name)
    arr = np.asarray(weights[name])
    if shape is not None and tuple(arr.shape) != tuple(shape):
        raise ShapeError(f"weight {name!r} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def conv_spec(weights: Mapping, prefix: str, shape, stride=1, padding=None, groups=1, bias=True) -> ConvSpec:
    w = require(weights, prefix + ".weight", shape)
    b = require(weights, prefix + ".bias", (shape[0],)) if bias else None
    if padding is None:
        padding = Padding.same(shape[2], shape[3])
    return ConvSpec(w, b, stride=stride, padding=padding, groups=groups)


def bn_params(weights: Mapping, prefix: str, c: int) -> BnParams:
    """Batchnorm statistics under ``prefix``; missing vectors take neutral defaults."""
    defaults = {"mean": 0.0, "var": 1.0, "scale": 1.0, "shift": 0.0}
    vals = {}
    for key, default in defaults.items():
        name = f"{prefix}.{key}"
        vals[key] = require(weights, name, (c,)) if name in weights else np.full(c, default)
    return BnParams(**vals)


def gate(weights: Mapping, name: str, default: float = 1.0) -> float:
    if name not in weights:
        return default
    return float(np.asarray(weights[name]).reshape(-1)[0])


def conv_shapes(prefix: str, c_out: int, c_in_per_group: int, kh: int, kw: int, bias=True) -> Shapes:
    shapes = {prefix + ".weight": (c_out, c_in_per_group, kh, kw)}
    if bias:
        shapes[prefix + ".bias"] = (c_out,)
    return shapes


def init_weights(shapes: Shapes, seed: int = 42) -> Dict[str, np.ndarray]:
    """Uniform(+-1/sqrt(fan_in)) draws, one independent stream per name.

    Biases take the fan-in of their sibling ``.weight`` entry.
    """
    out = {}
    for name in sorted(shapes):
        shape = tuple(shapes[name])
        if len(shape) >= 2:
            fan_in = int(np.prod(shape[1:]))
        else:
            sibling = name.rsplit(".", 1)[0] + ".weight"
            ws = shapes.get(sibling)
            fan_in = int(np.prod(ws[1:])) if ws is not None else shape[0]
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        gen = SplitMix64(name_seed(seed, name))
        out[name] = gen.uniform(-bound, bound, shape).astype(np.float32)
    return out


def merged(*parts: Optional[Mapping]) -> Dict[str, np.ndarray]:
    out = {}
    for p in parts:
        if p:
            out.update(p)
    return out
