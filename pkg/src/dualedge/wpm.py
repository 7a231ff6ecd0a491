"""Wide-area perception module.

A 1x1 CBS mixes the input, then the channels split into a processed quarter
``X1`` and an untouched remainder ``X2``. ``X1`` goes through a 1x1 conv and
five parallel same-padded paths (identity, depthwise 1x1, 1xK, Kx1, KxK). The
paths are concatenated (5 * C/4 channels), fused back to C/4 by a 1x1 conv and
placed in front of ``X2``.

Weight names under prefix ``wpm``::

    wpm.cbs.{weight,bias}   (C, C, 1, 1)     wpm.cbs_bn.*  optional
    wpm.pre.{weight,bias}   (C/4, C/4, 1, 1)
    wpm.dw1 (C/4,1,1,1)  wpm.dw_h (C/4,1,1,K)  wpm.dw_v (C/4,1,K,1)  wpm.dw_sq (C/4,1,K,K)
    wpm.fuse.{weight,bias}  (C/4, 5C/4, 1, 1)  wpm.fuse_bn.*  when fuse_activation
    wpm.merge.{weight,bias} (C, C, 1, 1)       only when merge_conv
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import weights as W
from .errors import ShapeError
from .tensor import ConvSpec, Padding, as_tensor, cbs, concat_channels, conv2d, split_channels

PATHS = ("identity", "dw1", "dw_h", "dw_v", "dw_sq")


@dataclass
class WpmConfig:
    K: int = 31
    fuse_activation: bool = False
    merge_conv: bool = False
    prefix: str = "wpm"

    def __post_init__(self):
        if self.K < 1 or self.K % 2 == 0:
            raise ValueError(f"kernel extent K must be odd and >= 1, got {self.K}")

    def path_kernels(self):
        return {"dw1": (1, 1), "dw_h": (1, self.K), "dw_v": (self.K, 1), "dw_sq": (self.K, self.K)}


def _quarter(c: int) -> int:
    if c % 4:
        raise ShapeError(f"wpm: axis 'channels' ({c}) must be divisible by 4")
    return c // 4


def wpm_weight_shapes(c: int, cfg: WpmConfig = None) -> W.Shapes:
    cfg = cfg or WpmConfig()
    q = _quarter(c)
    p = cfg.prefix
    shapes = {}
    shapes.update(W.conv_shapes(f"{p}.cbs", c, c, 1, 1))
    shapes.update(W.conv_shapes(f"{p}.pre", q, q, 1, 1))
    for name, (kh, kw) in cfg.path_kernels().items():
        shapes.update(W.conv_shapes(f"{p}.{name}", q, 1, kh, kw))
    shapes.update(W.conv_shapes(f"{p}.fuse", q, 5 * q, 1, 1))
    if cfg.merge_conv:
        shapes.update(W.conv_shapes(f"{p}.merge", c, c, 1, 1))
    return shapes


def init_wpm_weights(c: int, cfg: WpmConfig = None, seed: int = 42):
    return W.init_weights(wpm_weight_shapes(c, cfg), seed)


def depthwise_param_count(c: int, K: int, bias: bool = False) -> int:
    """Weights of the four depthwise paths: ``C/4 * (1 + K + K + K*K)``."""
    q = _quarter(c)
    return q * (1 + K + K + K * K) + (4 * q if bias else 0)


def dense_param_count(c: int, K: int) -> int:
    """Four dense KxK depthwise paths, the comparison baseline."""
    return _quarter(c) * 4 * K * K


def strip_dense_ratio(K: int) -> float:
    """Closed form of depthwise_param_count / dense_param_count."""
    return (K + 1) ** 2 / (4 * K * K)


def strip_conv(x, orientation: str, weight, bias=None) -> np.ndarray:
    """Depthwise same-padded convolution along one axis."""
    x = as_tensor(x)
    c = x.shape[1]
    weight = np.asarray(weight)
    if weight.ndim != 4 or weight.shape[0] != c or weight.shape[1] != 1:
        raise ShapeError(f"strip_conv: weight shape {weight.shape} is not depthwise for {c} channels")
    kh, kw = weight.shape[2:]
    if orientation in ("horizontal", "1xK"):
        ok = kh == 1
    elif orientation in ("vertical", "Kx1"):
        ok = kw == 1
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if not ok:
        raise ShapeError(f"strip_conv: weight shape {weight.shape} does not match {orientation} strip")
    return conv2d(x, ConvSpec(weight, bias, padding=Padding.same(kh, kw), groups=c))


def _path(x1, name, cfg, weights):
    q = x1.shape[1]
    if name == "identity":
        return x1
    kh, kw = cfg.path_kernels()[name]
    spec = W.conv_spec(weights, f"{cfg.prefix}.{name}", (q, 1, kh, kw), padding=Padding.same(kh, kw), groups=q)
    return conv2d(x1, spec)


def wpm_forward(x, cfg: WpmConfig = None, weights: Mapping = None, workers: int = 1) -> np.ndarray:
    cfg = cfg or WpmConfig()
    x = as_tensor(x)
    c = x.shape[1]
    q = _quarter(c)
    if weights is None:
        weights = init_wpm_weights(c, cfg)
    p = cfg.prefix
    y = cbs(x, W.conv_spec(weights, f"{p}.cbs", (c, c, 1, 1)), W.bn_params(weights, f"{p}.cbs_bn", c))
    x1, x2 = split_channels(y, [q, c - q])
    x1 = conv2d(x1, W.conv_spec(weights, f"{p}.pre", (q, q, 1, 1)))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            paths = list(pool.map(lambda name: _path(x1, name, cfg, weights), PATHS))
    else:
        paths = [_path(x1, name, cfg, weights) for name in PATHS]

    fuse = W.conv_spec(weights, f"{p}.fuse", (q, 5 * q, 1, 1))
    if cfg.fuse_activation:
        z = cbs(concat_channels(paths), fuse, W.bn_params(weights, f"{p}.fuse_bn", q))
    else:
        z = conv2d(concat_channels(paths), fuse)
    out = concat_channels([z, x2])
    if cfg.merge_conv:
        out = conv2d(out, W.conv_spec(weights, f"{p}.merge", (c, c, 1, 1)))
    return out
