"""COCO-protocol box detection evaluation.

Matching is greedy per image and category: predictions in descending score
order (stable for ties) each take the still-unmatched ground truth with the
highest IoU at or above the threshold, lowest GT index winning IoU ties.
Ground truths outside the current area bucket are "ignored": a prediction
prefers any eligible non-ignored GT, falls back to an ignored one, and is
itself ignored if it lands on an ignored GT or stays unmatched with an
out-of-bucket area. Crowd regions are not modelled.

Per category, precision is read off the score-ranked cumulative TP/FP counts,
turned into its monotone upper envelope, and sampled at the 101 recall levels
0.00, 0.01, ..., 1.00. Headline AP averages IoU thresholds 0.50:0.05:0.95
and categories; categories without GT in a bucket do not count. Means use
``math.fsum`` so results do not depend on summation order.
"""

import json
import math
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

IOU_THRESHOLDS = tuple((50 + 5 * i) / 100 for i in range(10))
RECALL_LEVELS = tuple(i / 100 for i in range(101))
MAX_DETS = (1, 10, 100)
AREA_RANGES = {
    "all": (0.0, float("inf")),
    "small": (0.0, 32.0 ** 2),
    "medium": (32.0 ** 2, 96.0 ** 2),
    "large": (96.0 ** 2, float("inf")),
}


@dataclass
class DetectionRecord:
    image_id: str
    category_id: int
    bbox: Tuple[float, float, float, float]
    score: Optional[float] = None

    def __post_init__(self):
        self.image_id = str(self.image_id)
        self.category_id = int(self.category_id)
        self.bbox = tuple(float(v) for v in self.bbox)
        if len(self.bbox) != 4:
            raise ValueError(f"bbox must be (x, y, w, h), got {self.bbox}")
        if not (self.bbox[2] > 0 and self.bbox[3] > 0):
            raise ValueError(f"bbox extents must be positive, got {self.bbox}")
        if self.score is not None:
            self.score = float(self.score)
            if not 0.0 <= self.score <= 1.0:
                raise ValueError(f"score must lie in [0, 1], got {self.score}")

    @property
    def area(self) -> float:
        return self.bbox[2] * self.bbox[3]

    @property
    def is_prediction(self) -> bool:
        return self.score is not None

    @classmethod
    def from_json(cls, obj: dict) -> "DetectionRecord":
        extra = set(obj) - {"image_id", "category_id", "bbox", "score", "area"}
        if extra:
            raise ValueError(f"unknown detection fields {sorted(extra)}")
        return cls(obj["image_id"], obj["category_id"], obj["bbox"], obj.get("score"))


@dataclass
class MetricsReport:
    AP: float = 0.0
    AP50: float = 0.0
    AP75: float = 0.0
    AP_s: float = 0.0
    AP_m: float = 0.0
    AP_l: float = 0.0
    AR_1: float = 0.0
    AR_10: float = 0.0
    AR_100: float = 0.0
    AR_s: float = 0.0
    AR_m: float = 0.0
    AR_l: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def _score_order(preds: Sequence[DetectionRecord]) -> List[int]:
    return sorted(range(len(preds)), key=lambda i: -preds[i].score)


@dataclass
class MatchResult:
    dt_match: List[int]      # matched GT index per prediction (score order), -1 if none
    dt_order: List[int]      # prediction indices in score order
    gt_matched: List[bool]

    @property
    def tp(self) -> List[bool]:
        return [m >= 0 for m in self.dt_match]

    @property
    def fp(self) -> List[bool]:
        return [m < 0 for m in self.dt_match]

    @property
    def fn(self) -> List[bool]:
        return [not m for m in self.gt_matched]


def _greedy(ious: np.ndarray, thr: float, gt_ignore: Sequence[bool]) -> Tuple[List[int], List[bool]]:
    """ious: (num_dt in rank order, num_gt)."""
    n_dt, n_gt = ious.shape
    taken = [False] * n_gt
    match = []
    for d in range(n_dt):
        best = -1
        for want_ignored in (False, True):
            best_iou = -1.0
            for g in range(n_gt):
                if taken[g] or bool(gt_ignore[g]) != want_ignored:
                    continue
                v = ious[d, g]
                if v >= thr and v > best_iou:
                    best, best_iou = g, v
            if best >= 0:
                break
        if best >= 0:
            taken[best] = True
        match.append(best)
    return match, taken


def match_detections(preds: Sequence[DetectionRecord], gts: Sequence[DetectionRecord],
                     iou_thr: float = 0.5) -> MatchResult:
    """Greedy matching of one image/category group."""
    order = _score_order(preds)
    ious = np.array([[iou(preds[d].bbox, g.bbox) for g in gts] for d in order]).reshape(len(order), len(gts))
    match, taken = _greedy(ious, iou_thr, [False] * len(gts))
    return MatchResult(match, order, taken)


def precision_recall(tp_flags: Sequence[bool], num_gt: int, ignore: Optional[Sequence[bool]] = None):
    """Cumulative precision and recall over a score-ranked TP/FP list."""
    tp_flags = np.asarray(tp_flags, dtype=bool)
    keep = np.ones_like(tp_flags) if ignore is None else ~np.asarray(ignore, dtype=bool)
    tp = np.cumsum(tp_flags & keep).astype(np.float64)
    fp = np.cumsum(~tp_flags & keep).astype(np.float64)
    denom = tp + fp
    precision = np.divide(tp, denom, out=np.zeros_like(tp), where=denom > 0)
    recall = tp / num_gt if num_gt > 0 else np.zeros_like(tp)
    return precision, recall


def average_precision(precision, recall, levels: Sequence[float] = RECALL_LEVELS) -> float:
    """101-point interpolated AP of a raw (precision, recall) curve."""
    pr = np.array(precision, dtype=np.float64)
    rc = np.asarray(recall, dtype=np.float64)
    for i in range(len(pr) - 1, 0, -1):
        if pr[i] > pr[i - 1]:
            pr[i - 1] = pr[i]
    idx = np.searchsorted(rc, np.asarray(levels), side="left")
    q = [float(pr[i]) if i < len(pr) else 0.0 for i in idx]
    return math.fsum(q) / len(levels)


def _group(records: Iterable[DetectionRecord]) -> Dict[Tuple[str, int], List[DetectionRecord]]:
    out: Dict[Tuple[str, int], List[DetectionRecord]] = {}
    for r in records:
        out.setdefault((r.image_id, r.category_id), []).append(r)
    return out


def _in_range(area: float, rng: Tuple[float, float]) -> bool:
    return rng[0] <= area <= rng[1]


class _Evaluator:
    def __init__(self, preds, gts):
        self.preds = [p for p in preds]
        self.gts = [g for g in gts]
        for p in self.preds:
            if p.score is None:
                raise ValueError("prediction records need a score")
        for g in self.gts:
            if g.score is not None:
                raise ValueError("ground-truth records must not carry a score")
        self.dt_groups = _group(self.preds)
        self.gt_groups = _group(self.gts)
        self.images = sorted({k[0] for k in self.dt_groups} | {k[0] for k in self.gt_groups})
        self.categories = sorted({k[1] for k in self.dt_groups} | {k[1] for k in self.gt_groups})
        self._ious = {}
        self._ranked = {}
        for key in set(self.dt_groups) | set(self.gt_groups):
            dts = self.dt_groups.get(key, [])
            gts_ = self.gt_groups.get(key, [])
            order = _score_order(dts)
            self._ranked[key] = [dts[i] for i in order]
            self._ious[key] = np.array([[iou(dts[d].bbox, g.bbox) for g in gts_] for d in order],
                                       dtype=np.float64).reshape(len(order), len(gts_))

    def category_curve(self, cat, thr, area_rng, max_det):
        """(tp flags, ignore flags, scores, num non-ignored GT) pooled over images."""
        tps, igs, scores = [], [], []
        npig = 0
        for img in self.images:
            key = (img, cat)
            gts = self.gt_groups.get(key, [])
            dts = self._ranked.get(key, [])[:max_det]
            gt_ig = [not _in_range(g.area, area_rng) for g in gts]
            npig += sum(1 for v in gt_ig if not v)
            if not dts:
                continue
            ious = self._ious[key][: len(dts)]
            match, _ = _greedy(ious, thr, gt_ig)
            for d, m in zip(dts, match):
                tps.append(m >= 0)
                igs.append(gt_ig[m] if m >= 0 else not _in_range(d.area, area_rng))
                scores.append(d.score)
        order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="mergesort")
        return ([tps[i] for i in order], [igs[i] for i in order], npig)

    def evaluate(self, thr, area_rng, max_det):
        """Per-category (AP, recall) for one setting; None for categories without GT."""
        out = {}
        for cat in self.categories:
            tps, igs, npig = self.category_curve(cat, thr, area_rng, max_det)
            if npig == 0:
                out[cat] = None
                continue
            precision, recall = precision_recall(tps, npig, igs)
            ap = average_precision(precision, recall) if len(tps) else 0.0
            rec = float(recall[-1]) if len(tps) else 0.0
            out[cat] = (ap, rec)
        return out


def _mean(values: List[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def summarize(preds: Sequence[DetectionRecord], gts: Sequence[DetectionRecord],
              iou_thrs: Sequence[float] = IOU_THRESHOLDS) -> MetricsReport:
    """AP/AR family over ``iou_thrs``; AP50 and AP75 always use 0.50 and 0.75."""
    ev = _Evaluator(preds, gts)
    cache = {}

    def stats(thr, area, max_det):
        key = (thr, area, max_det)
        if key not in cache:
            cache[key] = ev.evaluate(thr, AREA_RANGES[area], max_det)
        return cache[key]

    def ap(thrs, area="all", max_det=100):
        return _mean([v[0] for t in thrs for v in stats(t, area, max_det).values() if v is not None])

    def ar(area="all", max_det=100):
        return _mean([v[1] for t in iou_thrs for v in stats(t, area, max_det).values() if v is not None])

    return MetricsReport(
        AP=ap(iou_thrs), AP50=ap([0.5]), AP75=ap([0.75]),
        AP_s=ap(iou_thrs, "small"), AP_m=ap(iou_thrs, "medium"), AP_l=ap(iou_thrs, "large"),
        AR_1=ar(max_det=1), AR_10=ar(max_det=10), AR_100=ar(max_det=100),
        AR_s=ar("small"), AR_m=ar("medium"), AR_l=ar("large"),
    )


def parse_thresholds(text: str) -> Tuple[float, ...]:
    """``"0.5:0.05:0.95"`` (inclusive range) or a comma list."""
    if ":" in text:
        lo, step, hi = (float(v) for v in text.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError(f"bad threshold range {text!r}")
        count = int(round((hi - lo) / step)) + 1
        return tuple(round(lo + i * step, 10) for i in range(count))
    return tuple(float(v) for v in text.split(","))
