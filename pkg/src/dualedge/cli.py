"""Command-line entry point: ``dualedge <subcommand> ...``.

Subcommands: enhance, spectrum, mddc, graph {validate,run,default,init-weights},
eval, selftest, bench. ``DUALEDGE_THREADS`` sets the worker count for
branch/graph parallelism; it never changes results.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .config import RunConfig
from .deie import DeieParams, deie_branches, deie_forward
from .errors import FormatError, GraphError, MissingWeightError, ShapeError, SpectralResidueError
from .graph import GraphConfig, default_sffnet_neck, execute, init_graph_weights, validate
from .mddc import MddcConfig, init_mddc_weights, mddc_forward
from .metrics import parse_thresholds, summarize
from .selftest import bench, selftest
from .spectral import fft2, log_magnitude_image
from .tensor import as_tensor


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DUALEDGE_THREADS", "1")))
    except ValueError:
        return 1


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _run_config(args) -> RunConfig:
    return RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()


def _deie_from_args(args, base: DeieParams) -> DeieParams:
    d = base.to_dict()
    for key in ("alpha", "beta", "gamma"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    if args.normalize_mag:
        d["normalize_magnitude"] = True
    if args.gates is not None:
        d["gates"] = tuple(_float_list(args.gates))
    return DeieParams(**d)


def _plane(x, batch=0, channel=0):
    x = as_tensor(x)
    if batch >= x.shape[0] or channel >= x.shape[1]:
        raise ShapeError(f"plane ({batch}, {channel}) out of range for shape {x.shape}")
    return x[batch, channel].astype(np.float64)


def cmd_enhance(args):
    p = _deie_from_args(args, _run_config(args).deie)
    x = as_tensor(fio.read_any_tensor(args.input))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    x_up, x_high, x_fs = deie_branches(x, p)
    fio.write_tensor(out / "x_up.sfft", x_up)
    fio.write_tensor(out / "x_high.sfft", x_high)
    fio.write_tensor(out / "x_fs.sfft", x_fs)
    fio.write_tensor(out / "deie.sfft", deie_forward(x, p))
    fio.write_pnm(out / "spectrum_before.pgm", log_magnitude_image(fft2(_plane(x_up, 0, args.channel))))
    fio.write_pnm(out / "spectrum_after.pgm", log_magnitude_image(fft2(_plane(x_fs, 0, args.channel))))
    print(f"wrote x_up, x_high, x_fs, deie tensors and spectra to {out}")
    return 0


def cmd_spectrum(args):
    x = fio.read_any_tensor(args.input)
    fio.write_pnm(args.out, log_magnitude_image(fft2(_plane(x, args.batch, args.channel))))
    print(f"wrote {args.out}")
    return 0


def cmd_mddc(args):
    rc = _run_config(args)
    cfg = rc.mddc
    if args.scales:
        cfg = MddcConfig(scales=_int_list(args.scales), reduce_ratio=cfg.reduce_ratio, deie=cfg.deie,
                         bypass_activation=cfg.bypass_activation, prefix=cfg.prefix)
    x = as_tensor(fio.read_tensor(args.input))
    seed = args.seed if args.seed is not None else rc.seed
    weights = fio.read_weights(args.weights) if args.weights else init_mddc_weights(x.shape[1], cfg, seed)
    if args.save_weights:
        fio.write_weights(args.save_weights, weights)
    y = mddc_forward(x, cfg, weights, workers=_threads())
    fio.write_tensor(args.out, y)
    print(f"wrote {args.out} shape={y.shape}")
    return 0


def cmd_graph_validate(args):
    cfg = GraphConfig.load(args.config)
    print(validate(cfg).table())
    return 0


def _parse_bindings(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"--inputs entry {item!r} must look like name=path")
        name, path = item.split("=", 1)
        out[name] = fio.read_tensor(path)
    return out


def cmd_graph_run(args):
    cfg = GraphConfig.load(args.config)
    inputs = _parse_bindings(args.inputs)
    shapes = {k: v.shape for k, v in inputs.items()}
    weights = fio.read_weights(args.weights) if args.weights else init_graph_weights(cfg, args.seed, shapes)
    outs = execute(cfg, inputs, weights, workers=_threads())
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, arr in outs.items():
        fio.write_tensor(outdir / f"{name}.sfft", arr)
        print(f"{name}: {arr.shape}")
    return 0


def cmd_graph_default(args):
    cfg = default_sffnet_neck(_int_list(args.widths), (args.image_size, args.image_size), args.batch,
                              wpm_kernel=args.wpm_kernel)
    validate(cfg)
    cfg.save(args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_graph_init_weights(args):
    cfg = GraphConfig.load(args.config)
    fio.write_weights(args.out, init_graph_weights(cfg, args.seed))
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args):
    gts = fio.read_detections(args.gt)
    dts = fio.read_detections(args.dt)
    report = summarize(dts, gts, parse_thresholds(args.iou_thrs))
    text = report.to_json()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_selftest(args):
    results = selftest(args.seed)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args):
    rows = bench(args.seed, kernels=_int_list(args.kernels), repeats=args.repeats)
    fft_t, naive_t = rows[0][1], rows[1][1]
    print(f"{rows[0][0]:<20} {fft_t * 1e3:9.3f} ms")
    print(f"{rows[1][0]:<20} {naive_t * 1e3:9.3f} ms  (fft speedup {naive_t / fft_t:.1f}x)")
    for label, per_path in rows[2:]:
        cells = "  ".join(f"{k}={v * 1e3:.2f}ms" for k, v in per_path.items())
        print(f"{label:<20} total={sum(per_path.values()) * 1e3:.2f}ms  {cells}")
    if args.json:
        Path(args.json).write_text(json.dumps({label: val for label, val in rows}, indent=2) + "\n")
    return 0


def _add_deie_flags(p):
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--normalize-mag", action="store_true")
    p.add_argument("--gates", help="three comma-separated branch gates")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="run DEIE on an image or tensor file")
    p.add_argument("input")
    p.add_argument("--outdir", required=True)
    p.add_argument("--channel", type=int, default=0, help="plane used for the spectrum images")
    p.add_argument("--config")
    _add_deie_flags(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("spectrum", help="write a log-magnitude PGM of one plane")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--batch", type=int, default=0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("mddc", help="run the multi-scale module on a tensor file")
    p.add_argument("--input", required=True)
    p.add_argument("--weights")
    p.add_argument("--scales")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--save-weights")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mddc)

    g = sub.add_parser("graph", help="feature-graph tools").add_subparsers(dest="graph_command", required=True)
    p = g.add_parser("validate")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_graph_validate)
    p = g.add_parser("run")
    p.add_argument("--config", required=True)
    p.add_argument("--weights")
    p.add_argument("--inputs", nargs="+", default=[])
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_graph_run)
    p = g.add_parser("default", help="write the default neck config")
    p.add_argument("--widths", default="64,128,256,512")
    p.add_argument("--image-size", type=int, default=640)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--wpm-kernel", type=int, default=31)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_default)
    p = g.add_parser("init-weights", help="write seeded weights for a graph config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_init_weights)

    p = sub.add_parser("eval", help="COCO-style AP/AR from JSONL detections")
    p.add_argument("--gt", required=True)
    p.add_argument("--dt", required=True)
    p.add_argument("--iou-thrs", default="0.5:0.05:0.95")
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selftest", help="run the oracle suites")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("bench", help="time fft2 vs the direct DFT and the WPM paths")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--kernels", default="3,7,15,31,63")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--json")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, GraphError, ShapeError, SpectralResidueError, MissingWeightError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
