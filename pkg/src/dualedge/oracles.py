"""Slow reference implementations used by ``selftest`` and the test suite.

They share no code with the fast paths they check beyond the record types.
"""

import math

import numpy as np


def naive_conv2d(x, weight, bias=None, stride=(1, 1), pad=(0, 0, 0, 0), groups=1):
    """Nested-loop zero-padded convolution. pad = (top, bottom, left, right)."""
    x = np.asarray(x, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.float64)
    n, c, h, w = x.shape
    co, cg, kh, kw = weight.shape
    top, bottom, left, right = pad
    sh, sw = stride
    ho = (h + top + bottom - kh) // sh + 1
    wo = (w + left + right - kw) // sw + 1
    og = co // groups
    out = np.zeros((n, co, ho, wo))
    for b in range(n):
        for o in range(co):
            g = o // og
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0 if bias is None else float(bias[o])
                    for ci in range(cg):
                        cin = g * cg + ci
                        for di in range(kh):
                            for dj in range(kw):
                                yy = i * sh + di - top
                                xx = j * sw + dj - left
                                if 0 <= yy < h and 0 <= xx < w:
                                    acc += x[b, cin, yy, xx] * weight[o, ci, di, dj]
                    out[b, o, i, j] = acc
    return out


def _box_iou(a, b):
    x1 = max(a[0], b[0])
    y1 = max(a[1], b[1])
    x2 = min(a[0] + a[2], b[0] + b[2])
    y2 = min(a[1] + a[3], b[1] + b[3])
    if x2 <= x1 or y2 <= y1:
        return 0.0
    inter = (x2 - x1) * (y2 - y1)
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


_AREAS = {"all": (0.0, math.inf), "small": (0.0, 1024.0), "medium": (1024.0, 9216.0), "large": (9216.0, math.inf)}
_THRS = [(50 + 5 * i) / 100 for i in range(10)]


def _setting(preds, gts, cat, thr, area, max_det):
    lo, hi = _AREAS[area]
    images = sorted({r.image_id for r in preds} | {r.image_id for r in gts})
    pooled = []
    n_pos = 0
    for img in images:
        g = [r for r in gts if r.image_id == img and r.category_id == cat]
        d = [(k, r) for k, r in enumerate(preds) if r.image_id == img and r.category_id == cat]
        d.sort(key=lambda kr: (-kr[1].score, kr[0]))
        d = [r for _, r in d[:max_det]]
        g_ign = [not (lo <= r.bbox[2] * r.bbox[3] <= hi) for r in g]
        n_pos += g_ign.count(False)
        used = [False] * len(g)
        for det in d:
            pick = None
            for ignored_pass in (False, True):
                best = None
                for gi, gt in enumerate(g):
                    if used[gi] or g_ign[gi] != ignored_pass:
                        continue
                    v = _box_iou(det.bbox, gt.bbox)
                    if v >= thr and (best is None or v > best[0]):
                        best = (v, gi)
                if best is not None:
                    pick = best[1]
                    break
            if pick is not None:
                used[pick] = True
                ignored = g_ign[pick]
            else:
                ignored = not (lo <= det.bbox[2] * det.bbox[3] <= hi)
            pooled.append((det.score, len(pooled), pick is not None, ignored))
    if n_pos == 0:
        return None
    pooled.sort(key=lambda t: (-t[0], t[1]))
    tp = fp = 0
    points = []
    for _, _, is_tp, ignored in pooled:
        if not ignored:
            tp += is_tp
            fp += not is_tp
        prec = tp / (tp + fp) if tp + fp else 0.0
        points.append((prec, tp / n_pos))
    levels = [i / 100 for i in range(101)]
    interp = [max((p for p, r in points if r >= lv), default=0.0) for lv in levels]
    ap = math.fsum(interp) / 101
    rec = points[-1][1] if points else 0.0
    return ap, rec


def brute_force_summarize(preds, gts):
    """Dict of the twelve report fields, computed by direct enumeration."""
    cats = sorted({r.category_id for r in preds} | {r.category_id for r in gts})

    def mean(vals):
        return math.fsum(vals) / len(vals) if vals else 0.0

    def collect(thrs, area, max_det, index):
        vals = []
        for t in thrs:
            for c in cats:
                res = _setting(preds, gts, c, t, area, max_det)
                if res is not None:
                    vals.append(res[index])
        return mean(vals)

    return {
        "AP": collect(_THRS, "all", 100, 0),
        "AP50": collect([0.5], "all", 100, 0),
        "AP75": collect([0.75], "all", 100, 0),
        "AP_s": collect(_THRS, "small", 100, 0),
        "AP_m": collect(_THRS, "medium", 100, 0),
        "AP_l": collect(_THRS, "large", 100, 0),
        "AR_1": collect(_THRS, "all", 1, 1),
        "AR_10": collect(_THRS, "all", 10, 1),
        "AR_100": collect(_THRS, "all", 100, 1),
        "AR_s": collect(_THRS, "small", 100, 1),
        "AR_m": collect(_THRS, "medium", 100, 1),
        "AR_l": collect(_THRS, "large", 100, 1),
    }


def random_scene(gen, max_boxes=6, max_classes=3, images=2):
    """Random micro-scene from a SplitMix64 stream: (preds, gts) record lists."""
    from .metrics import DetectionRecord

    preds, gts = [], []
    for img in range(images):
        img_gts = []
        for _ in range(gen.integers(0, max_boxes + 1)):
            x, y = gen.uniform(0, 120, 2)
            w, h = gen.uniform(4, 110, 2)
            img_gts.append(DetectionRecord(f"img{img}", gen.integers(1, max_classes + 1),
                                           (round(x, 1), round(y, 1), round(w, 1), round(h, 1))))
        for _ in range(gen.integers(0, max_boxes + 1)):
            if img_gts and gen.random(1)[0] < 0.6:
                base = img_gts[gen.integers(0, len(img_gts))]
                jitter = gen.uniform(-8, 8, 4)
                box = (base.bbox[0] + jitter[0], base.bbox[1] + jitter[1],
                       max(1.0, base.bbox[2] + jitter[2]), max(1.0, base.bbox[3] + jitter[3]))
                cat = base.category_id if gen.random(1)[0] < 0.8 else gen.integers(1, max_classes + 1)
            else:
                x, y = gen.uniform(0, 120, 2)
                w, h = gen.uniform(4, 110, 2)
                box, cat = (x, y, w, h), gen.integers(1, max_classes + 1)
            score = round(float(gen.random(1)[0]), 2)
            preds.append(DetectionRecord(f"img{img}", cat, tuple(round(v, 1) for v in box), score))
        gts.extend(img_gts)
    return preds, gts
