"""Multi-scale dynamic dual-domain coupling.

For every pooled size ``s`` the input is average-pooled to ``s x s``, reduced
to ``C/4`` channels by a 1x1 CBS, filtered by a depthwise 3x3 CBS, resized
back to ``(h, w)`` and passed through DEIE (3x channels). A bypass branch
applies one depthwise 3x3 (optionally with BN+SiLU) at full resolution.
Branch outputs are concatenated in scale order, bypass last, and a 1x1
convolution maps the ``len(scales) * 3C/4 + C`` channels back to ``C``.

Weight names, for prefix ``mddc`` and scale 3::

    mddc.s3.conv1.{weight,bias}   (C/4, C, 1, 1)
    mddc.s3.bn1.{mean,var,scale,shift}      optional
    mddc.s3.conv3.{weight,bias}   (C/4, 1, 3, 3)
    mddc.s3.bn3.*                           optional
    mddc.s3.gates                 (3,)      optional DEIE branch gates
    mddc.bypass.conv.{weight,bias} (C, 1, 3, 3)
    mddc.bypass.bn.*                        optional
    mddc.fuse.{weight,bias}       (C, len(scales)*3C/4 + C, 1, 1)
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Mapping

import numpy as np

from . import weights as W
from .deie import DeieParams, deie_forward
from .errors import ShapeError, SpectralResidueError
from .tensor import (Padding, adaptive_avg_pool, as_tensor, bilinear_upsample, cbs,
                     concat_channels, conv2d)


@dataclass
class MddcConfig:
    scales: List[int] = field(default_factory=lambda: [3, 6, 9, 12])
    reduce_ratio: int = 4
    deie: DeieParams = field(default_factory=DeieParams)
    bypass_activation: bool = True
    prefix: str = "mddc"

    def __post_init__(self):
        self.scales = [int(s) for s in self.scales]
        if not self.scales or any(s < 1 for s in self.scales):
            raise ValueError(f"scales must be a nonempty list of positive sizes, got {self.scales}")
        if self.reduce_ratio < 1:
            raise ValueError("reduce_ratio must be >= 1")
        if isinstance(self.deie, dict):
            self.deie = DeieParams(**self.deie)

    def reduced(self, c: int) -> int:
        if c % self.reduce_ratio:
            raise ShapeError(f"mddc: axis 'channels' ({c}) not divisible by reduce_ratio {self.reduce_ratio}")
        return c // self.reduce_ratio

    def branch_channels(self, c: int) -> int:
        return 3 * self.reduced(c) if self.deie.combine == "concat" else self.reduced(c)

    def concat_channels(self, c: int) -> int:
        return len(self.scales) * self.branch_channels(c) + c


def mddc_weight_shapes(c: int, cfg: MddcConfig = None) -> W.Shapes:
    cfg = cfg or MddcConfig()
    q = cfg.reduced(c)
    p = cfg.prefix
    shapes = {}
    for s in cfg.scales:
        shapes.update(W.conv_shapes(f"{p}.s{s}.conv1", q, c, 1, 1))
        shapes.update(W.conv_shapes(f"{p}.s{s}.conv3", q, 1, 3, 3))
    shapes.update(W.conv_shapes(f"{p}.bypass.conv", c, 1, 3, 3))
    shapes.update(W.conv_shapes(f"{p}.fuse", c, cfg.concat_channels(c), 1, 1))
    return shapes


def init_mddc_weights(c: int, cfg: MddcConfig = None, seed: int = 42):
    return W.init_weights(mddc_weight_shapes(c, cfg), seed)


def _deie_params(cfg: MddcConfig, weights: Mapping, s: int) -> DeieParams:
    name = f"{cfg.prefix}.s{s}.gates"
    if name not in weights:
        return cfg.deie
    gates = W.require(weights, name, (3,))
    return DeieParams(**{**cfg.deie.to_dict(), "gates": tuple(float(g) for g in gates)})


def multiscale_branch(x, s: int, cfg: MddcConfig, weights: Mapping) -> np.ndarray:
    x = as_tensor(x)
    n, c, h, w = x.shape
    q = cfg.reduced(c)
    if s > min(h, w):
        raise ShapeError(f"mddc scale {s}: pooled size exceeds plane {(h, w)}")
    pre = f"{cfg.prefix}.s{s}"
    xs = adaptive_avg_pool(x, (s, s))
    conv1 = W.conv_spec(weights, pre + ".conv1", (q, c, 1, 1))
    xs = cbs(xs, conv1, W.bn_params(weights, pre + ".bn1", q))
    conv3 = W.conv_spec(weights, pre + ".conv3", (q, 1, 3, 3), padding=Padding.uniform(1), groups=q)
    xs = cbs(xs, conv3, W.bn_params(weights, pre + ".bn3", q))
    x_up = bilinear_upsample(xs, (h, w))
    try:
        return deie_forward(x_up, _deie_params(cfg, weights, s))
    except SpectralResidueError as exc:
        raise SpectralResidueError(f"mddc branch scale {s}: {exc}") from exc


def bypass_branch(x, cfg: MddcConfig, weights: Mapping) -> np.ndarray:
    x = as_tensor(x)
    c = x.shape[1]
    pre = f"{cfg.prefix}.bypass"
    conv = W.conv_spec(weights, pre + ".conv", (c, 1, 3, 3), padding=Padding.uniform(1), groups=c)
    if cfg.bypass_activation:
        return cbs(x, conv, W.bn_params(weights, pre + ".bn", c))
    return conv2d(x, conv)


def mddc_forward(x, cfg: MddcConfig = None, weights: Mapping = None, workers: int = 1) -> np.ndarray:
    cfg = cfg or MddcConfig()
    x = as_tensor(x)
    c = x.shape[1]
    cfg.reduced(c)
    if weights is None:
        weights = init_mddc_weights(c, cfg)
    # resolve the fuse weights first so a missing entry fails before any heavy work
    fuse = W.conv_spec(weights, f"{cfg.prefix}.fuse", (c, cfg.concat_channels(c), 1, 1))

    def run(s):
        return multiscale_branch(x, s, cfg, weights)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            branches = list(pool.map(run, cfg.scales))
    else:
        branches = [run(s) for s in cfg.scales]
    branches.append(bypass_branch(x, cfg, weights))
    return conv2d(concat_channels(branches), fuse)
