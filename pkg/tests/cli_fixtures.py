"""Fixture files and one invocation per CLI subcommand, shared by the CLI and acceptance tests."""

import json
from pathlib import Path

import numpy as np

from dualedge import io as fio
from dualedge.graph import default_sffnet_neck
from dualedge.metrics import DetectionRecord
from dualedge.oracles import random_scene
from dualedge.rng import SplitMix64

NECK_WIDTHS = (8, 16, 32, 64)
NECK_SIZE = 128


def make_fixtures(root: Path) -> dict:
    root.mkdir(parents=True, exist_ok=True)
    g = SplitMix64(7)
    paths = {}
    img = g.uniform(0, 1, (24, 20))
    img[8:16, 6:14] += 1.0
    paths["image"] = root / "scene.pgm"
    fio.write_pnm(paths["image"], np.clip(img / 2, 0, 1))
    paths["feat"] = root / "feat.sfft"
    fio.write_tensor(paths["feat"], g.uniform(-1, 1, (1, 8, 16, 16)).astype(np.float32))
    cfg = default_sffnet_neck(NECK_WIDTHS, (NECK_SIZE, NECK_SIZE), wpm_kernel=7)
    paths["graph"] = root / "neck.json"
    cfg.save(paths["graph"])
    for spec in cfg.inputs:
        s = NECK_SIZE // spec.stride
        paths[spec.name] = root / f"{spec.name}.sfft"
        fio.write_tensor(paths[spec.name], g.uniform(-1, 1, (1, spec.channels, s, s)).astype(np.float32))
    preds, gts = [], []
    for _ in range(5):
        p, t = random_scene(g)
        k = len(gts)
        preds += [DetectionRecord(f"{r.image_id}-{k}", r.category_id, r.bbox, r.score) for r in p]
        gts += [DetectionRecord(f"{r.image_id}-{k}", r.category_id, r.bbox) for r in t]
    paths["gt"] = root / "gt.jsonl"
    paths["dt"] = root / "dt.jsonl"
    fio.write_detections(paths["gt"], gts)
    fio.write_detections(paths["dt"], preds)
    paths["run"] = root / "run.json"
    paths["run"].write_text(json.dumps({"schema_version": 1, "deie": {"alpha": 0.05}, "mddc": {"scales": [3, 6]}}))
    return paths


def invocations(fx: dict, out: Path) -> dict:
    """Subcommand label -> argv; every output lands under ``out``."""
    inputs = [f"{name}={fx[name]}" for name in ("C2", "C3", "C4", "C5")]
    return {
        "enhance": ["enhance", str(fx["image"]), "--outdir", str(out / "enhance"), "--config", str(fx["run"])],
        "spectrum": ["spectrum", str(fx["feat"]), "--out", str(out / "spec.pgm"), "--channel", "2"],
        "mddc": ["mddc", "--input", str(fx["feat"]), "--scales", "3,6", "--seed", "5",
                 "--save-weights", str(out / "mddc.sffw"), "--out", str(out / "mddc.sfft")],
        "graph validate": ["graph", "validate", "--config", str(fx["graph"])],
        "graph default": ["graph", "default", "--widths", "8,16,32,64", "--image-size", "128",
                          "--out", str(out / "default.json")],
        "graph init-weights": ["graph", "init-weights", "--config", str(fx["graph"]), "--seed", "3",
                               "--out", str(out / "neck.sffw")],
        "graph run": ["graph", "run", "--config", str(fx["graph"]), "--inputs", *inputs,
                      "--outdir", str(out / "neck")],
        "eval": ["eval", "--gt", str(fx["gt"]), "--dt", str(fx["dt"]), "--report", str(out / "report.json")],
        "selftest": ["selftest", "--seed", "3"],
    }


def snapshot(out: Path) -> dict:
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}
