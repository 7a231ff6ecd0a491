"""Oracle self-test suites and micro-benchmarks."""

import time
from dataclasses import dataclass
from typing import List

import numpy as np

from .deie import DeieParams, deie_branches
from .metrics import summarize
from .oracles import brute_force_summarize, naive_conv2d, random_scene
from .rng import SplitMix64
from .spectral import dft2_naive, fft2, idft2
from .tensor import ConvSpec, Padding, conv2d
from .wpm import PATHS, WpmConfig, _path, init_wpm_weights


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_dev: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<10} max_dev={self.max_dev:.3e} {self.detail}".rstrip()


def _spectral(seed) -> SuiteResult:
    gen = SplitMix64(seed)
    sizes = [(2, 2), (8, 8), (16, 16), (13, 17), (12, 10), (7, 11), (30, 25), (1, 5)]
    dev = rt = parseval = 0.0
    for m, n in sizes:
        x = gen.uniform(-1, 1, (m, n))
        f = fft2(x).values
        dev = max(dev, float(np.abs(f - dft2_naive(x).values).max()))
        rt = max(rt, float(np.abs(idft2(fft2(x)) - x).max()))
        parseval = max(parseval, abs(float((np.abs(f) ** 2).sum()) / (m * n * float((x ** 2).sum())) - 1))
    ok = dev < 1e-4 and rt < 1e-4 and parseval < 1e-3
    return SuiteResult("spectral", ok, max(dev, rt), f"roundtrip={rt:.3e} parseval_rel={parseval:.3e}")


def _conv(seed) -> SuiteResult:
    gen = SplitMix64(seed)
    dev = 0.0
    cases = [(3, 4, 1, 3, 1, 1), (4, 4, 4, 3, 1, 1), (2, 6, 2, 3, 2, 1), (3, 5, 1, 1, 1, 0), (4, 4, 4, 5, 1, 2)]
    for c_in, c_out, groups, k, stride, pad in cases:
        x = gen.uniform(-1, 1, (1, c_in, 8, 8)).astype(np.float32)
        w = gen.uniform(-1, 1, (c_out, c_in // groups, k, k)).astype(np.float32)
        b = gen.uniform(-1, 1, c_out).astype(np.float32)
        got = conv2d(x, ConvSpec(w, b, stride=stride, padding=Padding.uniform(pad), groups=groups))
        ref = naive_conv2d(x, w, b, (stride, stride), (pad,) * 4, groups)
        dev = max(dev, float(np.abs(got - ref).max()))
    return SuiteResult("conv", dev < 1e-5, dev)


def _deie(seed) -> SuiteResult:
    gen = SplitMix64(seed)
    x = gen.uniform(-1, 1, (1, 2, 8, 8)).astype(np.float32)
    _, _, x_fs = deie_branches(x, DeieParams(alpha=0.0, beta=0.0, gamma=1.0))
    dev = float(np.abs(x_fs - x).max())
    return SuiteResult("deie", dev < 1e-4, dev, "identity degeneration")


def _metrics(seed, scenes=40) -> SuiteResult:
    gen = SplitMix64(seed)
    mismatches = 0
    dev = 0.0
    for _ in range(scenes):
        preds, gts = random_scene(gen)
        fast = summarize(preds, gts).to_dict()
        slow = brute_force_summarize(preds, gts)
        if fast != slow:
            mismatches += 1
            dev = max(dev, max(abs(fast[k] - slow[k]) for k in fast))
    return SuiteResult("metrics", mismatches == 0, dev, f"scenes={scenes} mismatches={mismatches}")


def selftest(seed: int = 42) -> List[SuiteResult]:
    return [_spectral(seed), _conv(seed), _deie(seed), _metrics(seed)]


def _median_time(fn, repeats=5) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench(seed: int = 42, kernels=(3, 7, 15, 31, 63), channels: int = 16, size: int = 80, repeats: int = 5):
    """Median-of-``repeats`` wall times: list of (label, seconds) rows."""
    gen = SplitMix64(seed)
    plane = gen.uniform(-1, 1, (64, 64))
    rows = [
        ("fft2 64x64", _median_time(lambda: fft2(plane), repeats)),
        ("dft2_naive 64x64", _median_time(lambda: dft2_naive(plane), repeats)),
    ]
    x1 = gen.uniform(-1, 1, (1, channels // 4, size, size)).astype(np.float32)
    for K in kernels:
        cfg = WpmConfig(K=K)
        weights = init_wpm_weights(channels, cfg, seed)
        per_path = {name: _median_time(lambda name=name: _path(x1, name, cfg, weights), repeats)
                    for name in PATHS}
        rows.append((f"wpm K={K}", per_path))
    return rows
