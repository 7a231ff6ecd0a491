"""2D discrete Fourier transform with an unnormalized forward convention.

``F[u, v] = sum_i sum_j x[i, j] * exp(-2j*pi*(u*i/M + v*j/N))`` with ``M`` rows
and ``N`` columns; the inverse carries the ``1/(M*N)`` factor. Bins stay in
natural order (no fftshift): the magnitude threshold downstream does not
care where a bin sits.

Lengths whose prime factors are all in {2, 3, 5} go through a recursive
mixed-radix decimation-in-time transform; any other length is handled with
Bluestein's chirp-z reformulation on a power-of-two grid. All arithmetic is
complex128 and batched over leading axes.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError, SpectralResidueError

RESIDUE_TOL = 1e-4


@dataclass
class Spectrum:
    """Complex frequency grid; leading axes (if any) index independent planes."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim < 2:
            raise ShapeError("spectrum needs at least two axes")

    @property
    def shape(self):
        return self.values.shape

    @property
    def re(self) -> np.ndarray:
        return self.values.real

    @property
    def im(self) -> np.ndarray:
        return self.values.imag

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.values.real, self.values.imag)

    @property
    def phase(self) -> np.ndarray:
        # zero bins get phase 0 regardless of signed zeros
        ph = np.arctan2(self.values.imag, self.values.real)
        return np.where((self.values.real == 0) & (self.values.imag == 0), 0.0, ph)

    def copy(self) -> "Spectrum":
        return Spectrum(self.values.copy())


def reconstruct(magnitude, phase) -> Spectrum:
    mag = np.asarray(magnitude, dtype=np.float64)
    ph = np.asarray(phase, dtype=np.float64)
    if mag.shape != ph.shape:
        raise ShapeError(f"magnitude {mag.shape} and phase {ph.shape} grids differ")
    if np.any(mag < 0):
        raise ValueError("magnitude must be non-negative")
    return Spectrum(mag * np.cos(ph) + 1j * (mag * np.sin(ph)))


def _plane(x) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim < 2:
        raise ShapeError(f"expected a 2D plane, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("plane contains NaN or Inf")
    return a


@lru_cache(maxsize=None)
def _dft_matrix(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    # reduce k*j mod n before scaling so the angle stays accurate for large n
    return np.exp(sign * 2j * np.pi * (np.outer(k, k) % n) / n)


def dft2_naive(plane) -> Spectrum:
    """Literal double sum over every input pixel for every output bin.

    O(M^2 N^2); vectorized over one frequency row at a time. Oracle for
    :func:`fft2`.
    """
    x = _plane(plane).astype(np.complex128)
    m, n = x.shape[-2:]
    i = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    v = np.arange(n)[:, None, None]
    out = np.empty(x.shape, dtype=np.complex128)
    for u in range(m):
        # exact integer reduction keeps the phase argument in [0, 2)
        turns = ((u * i) % m) / m + ((v * j) % n) / n  # (n_v, m, n)
        kernel = np.exp(-2j * np.pi * turns).reshape(n, m * n)
        out[..., u, :] = x.reshape(x.shape[:-2] + (m * n,)) @ kernel.T
    return Spectrum(out)


def _smallest_factor(n: int) -> int:
    for p in (4, 2, 3, 5):
        if n % p == 0:
            return p
    return 0


def _is_smooth(n: int) -> bool:
    for p in (2, 3, 5):
        while n % p == 0:
            n //= p
    return n == 1


@lru_cache(maxsize=None)
def _twiddles(n: int, p: int, sign: int) -> np.ndarray:
    m = n // p
    r = np.arange(p)[:, None]
    k1 = np.arange(m)[None, :]
    return np.exp(sign * 2j * np.pi * ((r * k1) % n) / n)


def _mixed_radix(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x
    p = _smallest_factor(n)
    m = n // p
    lead = x.shape[:-1]
    # sub[..., r, j] = x[..., j*p + r]
    sub = np.swapaxes(x.reshape(lead + (m, p)), -1, -2)
    y = _mixed_radix(np.ascontiguousarray(sub), sign) * _twiddles(n, p, sign)
    w = _dft_matrix(p, sign)
    out = np.empty(lead + (p, m), dtype=np.complex128)
    for q in range(p):
        acc = y[..., 0, :].copy()
        for r in range(1, p):
            acc += w[q, r] * y[..., r, :]
        out[..., q, :] = acc
    # X[k1 + m*k2] lives at out[..., k2, k1]
    return out.reshape(lead + (n,))


@lru_cache(maxsize=None)
def _chirp(n: int, sign: int):
    k = np.arange(n)
    chirp = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    size = 1
    while size < 2 * n - 1:
        size *= 2
    b = np.zeros(size, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[size - n + 1:] = np.conj(chirp[1:])[::-1]
    return chirp, _mixed_radix(b, -1), size


def _bluestein(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[-1]
    chirp, b_hat, size = _chirp(n, sign)
    a = np.zeros(x.shape[:-1] + (size,), dtype=np.complex128)
    a[..., :n] = x * chirp
    conv = _mixed_radix(_mixed_radix(a, -1) * b_hat, +1) / size
    return conv[..., :n] * chirp


def _fft_last(x: np.ndarray, sign: int) -> np.ndarray:
    if _is_smooth(x.shape[-1]):
        return _mixed_radix(x, sign)
    return _bluestein(x, sign)


def _fft2_raw(x: np.ndarray, sign: int) -> np.ndarray:
    y = _fft_last(np.ascontiguousarray(x, dtype=np.complex128), sign)
    y = np.swapaxes(y, -1, -2)
    y = _fft_last(np.ascontiguousarray(y), sign)
    return np.ascontiguousarray(np.swapaxes(y, -1, -2))


def fft2(plane) -> Spectrum:
    """Fast forward transform over the last two axes."""
    return Spectrum(_fft2_raw(_plane(plane), -1))


def idft2(spec: Spectrum, strict: bool = True) -> np.ndarray:
    """Inverse transform returning the real part.

    With ``strict`` the imaginary residue of every plane must stay below
    ``1e-4 * max|Re|``; a larger residue means the spectrum lost its
    Hermitian symmetry somewhere upstream.
    """
    vals = spec.values if isinstance(spec, Spectrum) else np.asarray(spec, dtype=np.complex128)
    m, n = vals.shape[-2:]
    x = _fft2_raw(vals, +1) / (m * n)
    if strict:
        im = np.abs(x.imag).max(axis=(-2, -1))
        re = np.abs(x.real).max(axis=(-2, -1))
        # absolute floor for planes that are zero up to rounding
        floor = 1e-12 * (np.abs(vals).max(axis=(-2, -1)) + 1.0)
        bad = im > RESIDUE_TOL * re + floor
        if np.any(bad):
            worst = float((im / np.maximum(re, 1e-300)).max())
            raise SpectralResidueError(
                f"inverse transform imaginary residue too large (max |Im|/max |Re| = {worst:.3g})"
            )
    return np.ascontiguousarray(x.real)


def log_magnitude_image(spec: Spectrum) -> np.ndarray:
    """``log1p(|F|)`` scaled to [0, 1] by its maximum, for viewing."""
    lm = np.log1p(spec.magnitude)
    top = lm.max()
    return lm / top if top > 0 else np.zeros_like(lm)
