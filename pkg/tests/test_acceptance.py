"""Acceptance criteria 1-10, each at its stated tolerance.

Every test appends one ``PASS``/``FAIL`` line to ``RESULTS``; the conftest hook
prints them after the run. Run directly with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import json
import math
import shutil
import sys
import time

import numpy as np
import pytest

from dualedge.cli import main
from dualedge.deie import (DeieParams, deie_branches, deie_forward, edge_strength, enhance_magnitude,
                           extract_high_freq, frequency_sharpen, high_pass_filter)
from dualedge.graph import default_sffnet_neck, execute, init_graph_weights, validate
from dualedge.ldconv import LdconvConfig, conv3x3_as_projection, init_ldconv_weights, ldconv_forward, ldconv_param_count
from dualedge.mddc import MddcConfig, init_mddc_weights, mddc_forward
from dualedge.metrics import DetectionRecord as R, summarize
from dualedge.oracles import brute_force_summarize, random_scene
from dualedge.rng import SplitMix64
from dualedge.spectral import dft2_naive, fft2, idft2
from dualedge.tensor import ConvSpec, Padding, conv2d
from dualedge.wpm import (WpmConfig, dense_param_count, depthwise_param_count, init_wpm_weights, strip_dense_ratio,
                          wpm_forward, wpm_weight_shapes)

from cli_fixtures import invocations, make_fixtures, snapshot

RESULTS = []


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_spectral_oracle():
    g = SplitMix64(1)
    sizes = [(2, 2), (3, 3), (5, 7), (7, 7), (8, 8), (11, 13), (13, 17), (16, 16), (17, 19), (19, 23),
             (23, 29), (29, 31), (31, 31), (32, 32), (12, 20), (9, 25), (1, 13), (37, 1), (24, 18), (41, 43)]
    t0 = time.perf_counter()
    dev = rt = par = 0.0
    for m, n in sizes:
        x = g.uniform(-1, 1, (m, n))
        f = fft2(x)
        dev = max(dev, float(np.abs(f.values - dft2_naive(x).values).max()))
        rt = max(rt, float(np.abs(idft2(f) - x).max()))
        energy = float((x ** 2).sum())
        par = max(par, abs(float((np.abs(f.values) ** 2).sum()) / (m * n) - energy) / energy)
    elapsed = time.perf_counter() - t0
    ok = dev < 1e-4 and rt < 1e-4 and par < 1e-3 and elapsed < 5.0
    record(1, ok, f"{len(sizes)} planes max|fft-direct|={dev:.2e} roundtrip={rt:.2e} "
                  f"parseval_rel={par:.2e} time={elapsed:.2f}s")


def test_criterion_02_identity_degeneration():
    g = SplitMix64(2)
    p = DeieParams(alpha=0.0, beta=0.0, gamma=1.0)
    dev = 0.0
    for _ in range(20):
        x = g.uniform(-1, 1, (1, 1, 8, 8)).astype(np.float32)
        _, _, x_fs = deie_branches(x, p)
        dev = max(dev, float(np.abs(x_fs - x).max()))
    record(2, dev < 1e-4, f"20 random 8x8 planes max|X_fs-X_up|={dev:.2e}")


def _phase_dev(before, after):
    alive = after.magnitude > 0
    d = np.angle(np.exp(1j * (after.phase - before.phase)))
    return float(np.abs(d[alive]).max()) if alive.any() else 0.0


def test_criterion_03_phase_preservation():
    g = SplitMix64(3)
    dev = 0.0
    for m, n in ((8, 8), (13, 17), (32, 24)):
        x = g.uniform(-1, 1, (1, 1, m, n)).astype(np.float32)
        spec = fft2(x.astype(np.float64))
        hp = high_pass_filter(spec, 0.1)
        s = edge_strength(extract_high_freq(x)).astype(np.float64)
        me = enhance_magnitude(hp, s, 1.5)
        fs = frequency_sharpen(me, 1.2)
        dev = max(dev, _phase_dev(spec, hp), _phase_dev(hp, me), _phase_dev(me, fs), _phase_dev(spec, fs))
    record(3, dev < 1e-5, f"max surviving-bin phase deviation={dev:.2e} rad")


def test_criterion_04_constant_input_law():
    worst = 0.0
    for value in (0.0, 1.0, -3.7, 0.1, 1e3, 123.456):
        for h, w in ((1, 1), (3, 3), (7, 5), (16, 16)):
            x = np.full((1, 2, h, w), value, np.float32)
            x_high = extract_high_freq(x)
            s = edge_strength(x_high)
            worst = max(worst, float(np.abs(x_high).max()), float(np.abs(s).max()))
    record(4, worst == 0.0, f"max|X_high|, max|S| over 24 constant planes = {worst!r} (exact zero required)")


def test_criterion_05_shape_laws():
    g = SplitMix64(5)
    all_scales = [3, 6, 9, 12]
    checked = 0
    ok = True
    for i in range(30):
        c = (4, 8, 64)[i % 3]
        size = (64, 80)[(i // 3) % 2]
        n = 1 + g.integers(0, 2)
        k = len(all_scales) if c != 64 else 1 + g.integers(0, 2)
        scales = sorted({all_scales[g.integers(0, 4)] for _ in range(k)})
        K = (3, 7, 15, 31)[g.integers(0, 4)]
        x = g.uniform(-1, 1, (n, c, size, size)).astype(np.float32)
        mcfg = MddcConfig(scales=scales)
        y_m = mddc_forward(x, mcfg, init_mddc_weights(c, mcfg, seed=i))
        wcfg = WpmConfig(K=K)
        y_w = wpm_forward(x, wcfg, init_wpm_weights(c, wcfg, seed=i))
        y_d = deie_forward(x[:, :2, :16, :16])
        ok &= y_m.shape == x.shape and y_w.shape == x.shape and y_d.shape == (n, 6, 16, 16)
        checked += 1
    record(5, bool(ok), f"{checked} fuzzed configs: mddc/wpm preserve (n,C,h,w), deie triples channels")


def test_criterion_06_wpm_parameter_linearity():
    count = depthwise_param_count(64, 31)
    product = 16 * (1 + 31 + 31 + 31 ** 2)
    shapes = wpm_weight_shapes(64, WpmConfig(K=31))
    from_shapes = sum(math.prod(shapes[f"wpm.{p}.weight"]) for p in ("dw1", "dw_h", "dw_v", "dw_sq"))
    ratios_ok = all(
        math.isclose(strip_dense_ratio(K), depthwise_param_count(64, K) / dense_param_count(64, K))
        and math.isclose(strip_dense_ratio(K), (K + 1) ** 2 / (4 * K * K))
        for K in (3, 7, 15, 31, 63)
    )
    ok = count == product == from_shapes and dense_param_count(64, 31) == 61504 and ratios_ok
    # the product 16*(1+31+31+31^2) is 16384; the decimal 16400 quoted next to it does not equal it
    record(6, ok, f"depthwise params C=64 K=31: {count} = 16*(1+31+31+31^2) = {product} (16400 != this product); "
                  f"dense 61504; closed-form ratio holds for K in 3,7,15,31,63")


def test_criterion_07_ldconv_reduction():
    g = SplitMix64(7)
    x = g.uniform(-1, 1, (1, 3, 12, 12)).astype(np.float32)
    kernel = g.uniform(-1, 1, (4, 3, 3, 3)).astype(np.float32)
    bias = g.uniform(-1, 1, 4).astype(np.float32)
    cfg = LdconvConfig(num_points=9, out_channels=4)
    w = init_ldconv_weights(3, cfg)
    w["ldconv.offset.weight"][:] = 0
    w["ldconv.offset.bias"][:] = 0
    w["ldconv.proj.weight"] = conv3x3_as_projection(kernel)
    w["ldconv.proj.bias"] = bias
    dev = float(np.abs(ldconv_forward(x, cfg, w) - conv2d(x, ConvSpec(kernel, bias, padding=Padding.uniform(1)))).max())
    second = [int(v) for c_in, c_out in ((3, 4), (64, 64), (1, 7))
              for v in np.diff([ldconv_param_count(c_in, c_out, P) for P in range(1, 20)], 2)]
    ok = dev < 1e-5 and not any(second)
    record(7, ok, f"zero-offset vs conv2d max dev={dev:.2e}; param-count second differences all zero")


def test_criterion_08_graph_executor():
    cfg = default_sffnet_neck((64, 128, 256, 512), (640, 640))
    shapes = validate(cfg).shapes
    g = SplitMix64(8)
    inputs = {s.name: g.uniform(-1, 1, (1, s.channels, 640 // s.stride, 640 // s.stride)).astype(np.float32)
              for s in cfg.inputs}
    w = init_graph_weights(cfg, 42)
    serial = execute(cfg, inputs, w)
    parallel = execute(cfg, inputs, w, workers=4)
    spatial = {k: v.shape[2:] for k, v in serial.items()}
    ok = (spatial == {"P3": (80, 80), "P4": (40, 40), "P5": (20, 20)}
          and all(shapes[k] == serial[k].shape for k in serial)
          and all(np.array_equal(serial[k], parallel[k]) for k in serial))
    record(8, ok, f"640x640 pyramid -> P3/P4/P5 spatial {spatial['P3'][0]}/{spatial['P4'][0]}/{spatial['P5'][0]}; "
                  f"serial and 4-worker schedules bitwise equal")


def test_criterion_09_metrics_oracle():
    g = SplitMix64(9)
    mismatches = 0
    invariants = True
    for _ in range(200):
        preds, gts = random_scene(g, max_boxes=6, max_classes=3)
        rep = summarize(preds, gts)
        mismatches += rep.to_dict() != brute_force_summarize(preds, gts)
        invariants &= rep.AP <= rep.AP50 and rep.AR_1 <= rep.AR_10 <= rep.AR_100
    gts = [R("a", 1, (0, 0, 10, 10)), R("a", 2, (30, 30, 20, 20)), R("b", 1, (5, 5, 50, 40))]
    perfect = summarize([R(t.image_id, t.category_id, t.bbox, 0.9) for t in gts], gts)
    low = summarize([R("a", 1, (1, 1, 2, 2), 0.9)], [R("a", 1, (0, 0, 2, 2))], iou_thrs=[0.5])
    ok = mismatches == 0 and invariants and perfect.AP == 1.0 and low.AP == 0.0
    record(9, bool(ok), f"200 micro-scenes, {mismatches} mismatches vs brute force; perfect AP={perfect.AP}; "
                        f"1/7-IoU pair AP@0.5={low.AP}; AP<=AP50 and AR_1<=AR_10<=AR_100 held={bool(invariants)}")


def _run_cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def test_criterion_10_cli_determinism(tmp_path):
    fx = make_fixtures(tmp_path / "fixtures")
    out = tmp_path / "out"
    differing = []
    for label, argv in invocations(fx, out).items():
        runs = []
        for _ in range(2):
            shutil.rmtree(out, ignore_errors=True)
            out.mkdir()
            code, text = _run_cli(argv)
            runs.append((code, text, snapshot(out)))
        if runs[0] != runs[1] or runs[0][0] != 0:
            differing.append(label)
    # bench reports wall-clock times; everything except the timings must repeat
    shapes = []
    for _ in range(2):
        shutil.rmtree(out, ignore_errors=True)
        out.mkdir()
        code, _ = _run_cli(["bench", "--kernels", "3", "--repeats", "1", "--json", str(out / "b.json")])
        rows = json.loads((out / "b.json").read_text())
        shapes.append((code, [(k, sorted(v) if isinstance(v, dict) else None) for k, v in rows.items()]))
    if shapes[0] != shapes[1]:
        differing.append("bench")
    n = len(invocations(fx, out)) + 1
    record(10, not differing, f"{n} subcommands run twice, byte-identical outputs"
                              + (f"; differing: {differing}" if differing else " (bench: timings excluded)"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
