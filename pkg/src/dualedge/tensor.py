"""Dense NCHW float32 tensor primitives.

Tensors are plain ``numpy.ndarray`` objects of rank 4 ``(n, c, h, w)`` and
dtype float32. Every public operation validates its operands with
:func:`as_tensor`, accumulates in float64 and hands back a fresh float32
array; inputs are never written to.

Local means are summed in float64 from float32 operands. Nine (or any
k*k < 2**29) float32 values add exactly in float64, and the correctly
rounded quotient of an exact ``k*k*c`` by ``k*k`` is ``c`` again, so
constant planes survive pooling and subtraction bit-exactly.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError

AXES = ("batch", "channels", "height", "width")
BN_EPS = 1e-5


def as_tensor(x, name="x") -> np.ndarray:
    """Validate ``x`` as a finite rank-4 tensor and return it as float32."""
    arr = np.asarray(x)
    if arr.ndim != 4:
        raise ShapeError(f"{name}: expected rank 4 (n, c, h, w), got shape {arr.shape}")
    for axis, extent in zip(AXES, arr.shape):
        if extent < 1:
            raise ShapeError(f"{name}: axis '{axis}' has extent {extent}")
    arr = arr.astype(np.float32, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: tensor contains NaN or Inf")
    return arr


def _finish(y) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=np.float32)
    if not np.all(np.isfinite(y)):
        raise ValueError("operation produced non-finite values")
    return y


@dataclass(frozen=True)
class Padding:
    top: int = 0
    bottom: int = 0
    left: int = 0
    right: int = 0
    mode: str = "zeros"

    @classmethod
    def same(cls, kh: int, kw: int, mode: str = "zeros") -> "Padding":
        return cls((kh - 1) // 2, kh // 2, (kw - 1) // 2, kw // 2, mode)

    @classmethod
    def uniform(cls, p: int, mode: str = "zeros") -> "Padding":
        return cls(p, p, p, p, mode)


@dataclass
class ConvSpec:
    """Weights and geometry of a 2D convolution.

    ``weight`` has shape ``(c_out, c_in // groups, kh, kw)``.
    """

    weight: np.ndarray
    bias: Optional[np.ndarray] = None
    stride: Tuple[int, int] = (1, 1)
    padding: Padding = Padding()
    groups: int = 1

    def __post_init__(self):
        self.weight = np.asarray(self.weight)
        if self.weight.ndim != 4:
            raise ShapeError(f"conv weight must be rank 4, got shape {self.weight.shape}")
        if isinstance(self.stride, int):
            self.stride = (self.stride, self.stride)
        if isinstance(self.padding, int):
            self.padding = Padding.uniform(self.padding)
        if self.groups < 1:
            raise ValueError("groups must be >= 1")
        if self.c_out % self.groups:
            raise ShapeError(f"c_out={self.c_out} not divisible by groups={self.groups}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias).reshape(-1)
            if self.bias.shape[0] != self.c_out:
                raise ShapeError(f"bias length {self.bias.shape[0]} != c_out {self.c_out}")
        if self.padding.mode not in ("zeros", "reflect"):
            raise ValueError(f"unknown padding mode {self.padding.mode!r}")

    @property
    def c_out(self) -> int:
        return self.weight.shape[0]

    @property
    def c_in(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def kernel(self) -> Tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]

    def output_hw(self, h: int, w: int) -> Tuple[int, int]:
        kh, kw = self.kernel
        p = self.padding
        ho = (h + p.top + p.bottom - kh) // self.stride[0] + 1
        wo = (w + p.left + p.right - kw) // self.stride[1] + 1
        return ho, wo

    def param_count(self) -> int:
        return self.weight.size + (0 if self.bias is None else self.bias.size)


@dataclass
class BnParams:
    mean: np.ndarray
    var: np.ndarray
    scale: np.ndarray
    shift: np.ndarray
    eps: float = BN_EPS

    def __post_init__(self):
        if np.any(np.asarray(self.var) < 0):
            raise ValueError("batchnorm variance must be non-negative")
        if not self.eps > 0:
            raise ValueError("batchnorm epsilon must be positive")

    @classmethod
    def identity(cls, c: int, eps: float = BN_EPS) -> "BnParams":
        return cls(np.zeros(c), np.ones(c), np.ones(c), np.zeros(c), eps)


def _pad(x, p: Padding):
    widths = ((0, 0), (0, 0), (p.top, p.bottom), (p.left, p.right))
    if p.mode == "reflect":
        return np.pad(x, widths, mode="reflect")
    return np.pad(x, widths, mode="constant")


def conv2d(x, spec: ConvSpec) -> np.ndarray:
    x = as_tensor(x)
    n, c, h, w = x.shape
    if c != spec.c_in:
        raise ShapeError(f"conv2d: input axis 'channels' is {c}, weights expect {spec.c_in}")
    kh, kw = spec.kernel
    p = spec.padding
    if h + p.top + p.bottom < kh:
        raise ShapeError(f"conv2d: padded axis 'height' ({h + p.top + p.bottom}) smaller than kernel {kh}")
    if w + p.left + p.right < kw:
        raise ShapeError(f"conv2d: padded axis 'width' ({w + p.left + p.right}) smaller than kernel {kw}")
    if p.mode == "reflect" and (max(p.top, p.bottom) >= h or max(p.left, p.right) >= w):
        raise ShapeError("conv2d: reflect padding must be smaller than the plane extent")

    ho, wo = spec.output_hw(h, w)
    sh, sw = spec.stride
    xp = _pad(x.astype(np.float64), p)
    weight = spec.weight.astype(np.float64)
    g = spec.groups
    cg_in, cg_out = c // g, spec.c_out // g

    if g == c and spec.weight.shape[1] == 1:
        out = _depthwise(xp, weight, ho, wo, sh, sw, mult=cg_out)
    else:
        out = np.empty((n, spec.c_out, ho, wo))
        for b in range(g):
            xs = xp[:, b * cg_in:(b + 1) * cg_in]
            ws = weight[b * cg_out:(b + 1) * cg_out]
            if kh == 1 and kw == 1:
                win = np.ascontiguousarray(xs[:, :, : (ho - 1) * sh + 1 : sh, : (wo - 1) * sw + 1 : sw])
                res = ws[:, :, 0, 0] @ win.reshape(n, cg_in, ho * wo)
                out[:, b * cg_out:(b + 1) * cg_out] = res.reshape(n, cg_out, ho, wo)
                continue
            win = sliding_window_view(xs, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw][:, :, :ho, :wo]
            res = np.tensordot(win, ws, axes=([1, 4, 5], [1, 2, 3]))  # (n, ho, wo, og)
            out[:, b * cg_out:(b + 1) * cg_out] = res.transpose(0, 3, 1, 2)
    if spec.bias is not None:
        out += spec.bias.astype(np.float64)[None, :, None, None]
    return _finish(out)


def _depthwise(xp, weight, ho, wo, sh, sw, mult=1):
    # shift-and-accumulate; cheaper than im2col for large square and strip kernels
    n, c = xp.shape[:2]
    kh, kw = weight.shape[2:]
    if mult > 1:
        xp = np.repeat(xp, mult, axis=1)
    out = np.zeros((n, c * mult, ho, wo))
    for dy in range(kh):
        for dx in range(kw):
            tap = weight[:, 0, dy, dx]
            if not np.any(tap):
                continue
            sl = xp[:, :, dy: dy + (ho - 1) * sh + 1: sh, dx: dx + (wo - 1) * sw + 1: sw]
            out += sl * tap[None, :, None, None]
    return out


def adaptive_avg_pool(x, out_hw) -> np.ndarray:
    """Average over floor/ceil regions so an ``s x s`` grid tiles the plane."""
    x = as_tensor(x)
    n, c, h, w = x.shape
    sh, sw = (out_hw, out_hw) if isinstance(out_hw, int) else out_hw
    if sh < 1 or sw < 1:
        raise ValueError(f"pooled size must be >= 1, got {(sh, sw)}")
    if sh > h or sw > w:
        raise ShapeError(f"adaptive_avg_pool: pooled size {(sh, sw)} exceeds plane {(h, w)}")
    xd = x.astype(np.float64)
    out = np.empty((n, c, sh, sw))
    for i in range(sh):
        r0, r1 = (i * h) // sh, -((-(i + 1) * h) // sh)
        for j in range(sw):
            c0, c1 = (j * w) // sw, -((-(j + 1) * w) // sw)
            out[:, :, i, j] = xd[:, :, r0:r1, c0:c1].mean(axis=(2, 3))
    return _finish(out)


def _local_mean(x: np.ndarray, k: int) -> np.ndarray:
    """k x k window mean with reflect padding, float64 result."""
    if k % 2 == 0 or k < 1:
        raise ValueError(f"window size must be odd, got {k}")
    r = k // 2
    xd = x.astype(np.float64)
    # numpy reflects repeatedly when r exceeds the extent and replicates 1-wide axes
    pad = [(0, 0)] * (x.ndim - 2) + [(r, r), (r, r)]
    xp = np.pad(xd, pad, mode="reflect")
    win = sliding_window_view(xp, (k, k), axis=(-2, -1))
    return win.sum(axis=(-2, -1)) / (k * k)


def avg_pool_local(x, k: int = 3, pad_mode: str = "reflect") -> np.ndarray:
    x = as_tensor(x)
    if k % 2 == 0:
        raise ValueError(f"avg_pool_local: kernel size must be odd, got {k}")
    if k < 3:
        raise ValueError(f"avg_pool_local: kernel size must be >= 3, got {k}")
    if pad_mode != "reflect":
        raise ValueError("avg_pool_local supports reflect padding only")
    return _finish(_local_mean(x, k))


def _interp_axis(a: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    in_len = a.shape[axis]
    pos = (np.arange(out_len) + 0.5) * (in_len / out_len) - 0.5
    pos = np.clip(pos, 0.0, in_len - 1)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, in_len - 1)
    t = pos - lo
    shape = [1] * a.ndim
    shape[axis] = out_len
    t = t.reshape(shape)
    a_lo = np.take(a, lo, axis=axis)
    a_hi = np.take(a, hi, axis=axis)
    # a + t*(b - a) is exact when a == b, which keeps constants constant
    return a_lo + t * (a_hi - a_lo)


def bilinear_upsample(x, out_hw) -> np.ndarray:
    """Half-pixel-center bilinear resize to a size no smaller than the input."""
    x = as_tensor(x)
    oh, ow = (out_hw, out_hw) if isinstance(out_hw, int) else out_hw
    h, w = x.shape[2:]
    if oh < h or ow < w:
        raise ShapeError(f"bilinear_upsample: cannot downscale {(h, w)} to {(oh, ow)}")
    y = _interp_axis(x.astype(np.float64), oh, 2)
    y = _interp_axis(y, ow, 3)
    return _finish(y)


def silu(x) -> np.ndarray:
    x = as_tensor(x).astype(np.float64)
    # x * sigmoid(x) written to avoid exp overflow for large |x|
    e = np.exp(-np.abs(x))
    sig = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _finish(x * sig)


def batchnorm_infer(x, p: BnParams) -> np.ndarray:
    x = as_tensor(x)
    c = x.shape[1]
    vecs = [np.asarray(v, dtype=np.float64).reshape(-1) for v in (p.mean, p.var, p.scale, p.shift)]
    if any(v.shape[0] != c for v in vecs):
        raise ShapeError(f"batchnorm: parameter length does not match axis 'channels' ({c})")
    mean, var, scale, shift = (v[None, :, None, None] for v in vecs)
    y = (x.astype(np.float64) - mean) / np.sqrt(var + p.eps) * scale + shift
    return _finish(y)


def concat_channels(tensors: Sequence) -> np.ndarray:
    ts = [as_tensor(t, f"input {i}") for i, t in enumerate(tensors)]
    if not ts:
        raise ValueError("concat_channels needs at least one tensor")
    n, _, h, w = ts[0].shape
    for i, t in enumerate(ts[1:], 1):
        if t.shape[0] != n:
            raise ShapeError(f"concat_channels: input {i} differs on axis 'batch'")
        if t.shape[2:] != (h, w):
            axis = "height" if t.shape[2] != h else "width"
            raise ShapeError(f"concat_channels: input {i} differs on axis '{axis}'")
    return np.concatenate(ts, axis=1)


def split_channels(x, sizes: Sequence[int]) -> list:
    x = as_tensor(x)
    if any(s < 1 for s in sizes) or sum(sizes) != x.shape[1]:
        raise ShapeError(f"split_channels: sizes {list(sizes)} do not sum to {x.shape[1]} channels")
    bounds = np.cumsum(sizes)[:-1]
    return [part.copy() for part in np.split(x, bounds, axis=1)]


def scale_channels(x, gate: float) -> np.ndarray:
    x = as_tensor(x)
    if not np.isfinite(gate):
        raise ValueError("gate must be finite")
    return _finish(x.astype(np.float64) * gate)


def cbs(x, conv: ConvSpec, bn: Optional[BnParams] = None) -> np.ndarray:
    """Convolution, inference batchnorm, SiLU."""
    y = conv2d(x, conv)
    if bn is not None:
        y = batchnorm_infer(y, bn)
    return silu(y)
