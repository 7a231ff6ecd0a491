"""Linear deformable convolution.

A plain 3x3 convolution predicts ``2P`` offset channels (``dy`` then ``dx``
for each point). Output position ``(i, j)`` samples every input channel at
``(i*stride + gy_p + dy_p, j*stride + gx_p + dx_p)`` for the ``P`` base-grid
points ``(gy_p, gx_p)``, using bilinear interpolation with zeros outside the
plane. The ``C*P`` samples (channel-major: index ``c*P + p``) are projected to
``c_out`` channels by a 1x1 convolution, so parameters grow linearly in P.

This is one concrete, testable variant; it makes no claim to reproduce any
particular published implementation detail beyond the properties above.

Weight names under prefix ``ldconv``::

    ldconv.offset.{weight,bias}  (2P, C, 3, 3)
    ldconv.proj.{weight,bias}    (c_out, C*P, 1, 1)
"""

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np

from . import weights as W
from .tensor import ConvSpec, Padding, _finish, as_tensor, conv2d


@dataclass
class LdconvConfig:
    num_points: int = 9
    out_channels: Optional[int] = None  # None: same as input
    stride: int = 1
    prefix: str = "ldconv"

    def __post_init__(self):
        if self.num_points < 1:
            raise ValueError("num_points must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    def c_out(self, c_in: int) -> int:
        return c_in if self.out_channels is None else self.out_channels


def base_grid(P: int) -> List[Tuple[int, int]]:
    """Row-major fill of a centered ``ceil(sqrt(P))``-wide square, first P cells."""
    if P < 1:
        raise ValueError("P must be >= 1")
    side = math.isqrt(P - 1) + 1
    origin = (side - 1) // 2
    return [(i // side - origin, i % side - origin) for i in range(P)]


def bilinear_sample(plane, y: float, x: float) -> float:
    """Bilinear read of a 2D plane with zero padding outside it."""
    a = np.asarray(plane, dtype=np.float64)
    return float(_sample(a[None, None], np.array([[[y]]]), np.array([[[x]]]))[0, 0, 0, 0])


def _sample(x: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """x: (n, c, h, w); ys, xs: (n, ho, wo) -> (n, c, ho, wo), zero padded."""
    n, c, h, w = x.shape
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    ty, tx = ys - y0, xs - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    out = np.zeros((n, c) + ys.shape[1:])
    bidx = np.arange(n)[:, None, None]
    for dy, wy in ((0, 1.0 - ty), (1, ty)):
        for dx, wx in ((0, 1.0 - tx), (1, tx)):
            yy, xx = y0 + dy, x0 + dx
            valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
            vals = x[bidx, :, np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]  # (n, ho, wo, c)
            wgt = np.where(valid, wy * wx, 0.0)
            out += np.moveaxis(vals * wgt[..., None], -1, 1)
    return out


def ldconv_weight_shapes(c_in: int, cfg: LdconvConfig = None) -> W.Shapes:
    cfg = cfg or LdconvConfig()
    P = cfg.num_points
    shapes = {}
    shapes.update(W.conv_shapes(f"{cfg.prefix}.offset", 2 * P, c_in, 3, 3))
    shapes.update(W.conv_shapes(f"{cfg.prefix}.proj", cfg.c_out(c_in), c_in * P, 1, 1))
    return shapes


def ldconv_param_count(c_in: int, c_out: int, P: int) -> int:
    return 3 * 3 * c_in * 2 * P + 2 * P + P * c_in * c_out + c_out


def init_ldconv_weights(c_in: int, cfg: LdconvConfig = None, seed: int = 42):
    return W.init_weights(ldconv_weight_shapes(c_in, cfg), seed)


def ldconv_forward(x, cfg: LdconvConfig = None, weights: Mapping = None) -> np.ndarray:
    cfg = cfg or LdconvConfig()
    x = as_tensor(x)
    n, c, h, w = x.shape
    P = cfg.num_points
    if weights is None:
        weights = init_ldconv_weights(c, cfg)
    s = cfg.stride
    off_spec = W.conv_spec(weights, f"{cfg.prefix}.offset", (2 * P, c, 3, 3), stride=s,
                           padding=Padding.uniform(1))
    proj = W.conv_spec(weights, f"{cfg.prefix}.proj", (cfg.c_out(c), c * P, 1, 1))
    offsets = conv2d(x, off_spec).astype(np.float64)
    ho, wo = offsets.shape[2:]
    iy = (np.arange(ho) * s)[None, :, None].astype(np.float64)
    ix = (np.arange(wo) * s)[None, None, :].astype(np.float64)
    xd = x.astype(np.float64)
    samples = np.empty((n, c, P, ho, wo))
    for p, (gy, gx) in enumerate(base_grid(P)):
        ys = iy + gy + offsets[:, 2 * p]
        xs = ix + gx + offsets[:, 2 * p + 1]
        samples[:, :, p] = _sample(xd, ys, xs)
    stacked = _finish(samples.reshape(n, c * P, ho, wo))
    return conv2d(stacked, proj)


def conv3x3_as_projection(kernel: np.ndarray) -> np.ndarray:
    """Lay a (c_out, C, 3, 3) kernel out as P=9 projection weights (c_out, 9C, 1, 1)."""
    k = np.asarray(kernel)
    return k.reshape(k.shape[0], -1, 1, 1)
