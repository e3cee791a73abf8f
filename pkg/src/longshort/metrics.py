"""Streaming average precision.

Standard detection AP applied to latency-paired detections: greedy IoU
matching per frame in descending score order, 101-point interpolated AP per
(category, IoU threshold), averaged category-first.  The headline number
averages IoU thresholds 0.50:0.05:0.95; companion numbers report the 0.50
and 0.75 thresholds and the small/medium/large area splits.  A query frame
with no completed prediction simply contributes zero detections against its
ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .boxes import BBox, Detection, GroundTruthBox
from .streaming import EvalPairing

IOU_THRESHOLDS = tuple(i / 100 for i in range(50, 100, 5))

AREA_ALL = (0.0, math.inf)
AREA_SMALL = (0.0, 32.0**2)
AREA_MEDIUM = (32.0**2, 96.0**2)
AREA_LARGE = (96.0**2, math.inf)

RECALL_POINTS = tuple(i / 100 for i in range(101))


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union is empty."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class MatchResult:
    """Greedy matching outcome at one IoU threshold.

    det_matched[i] is the ground-truth index taken by input detection i (or
    None); gt_covered[j] says whether ground truth j was claimed.
    """

    iou_thr: float
    det_matched: tuple[Optional[int], ...]
    gt_covered: tuple[bool, ...]


def match_frame(dets: Sequence[Detection], gts: Sequence[GroundTruthBox], iou_thr: float) -> MatchResult:
    """Match one frame's detections (already category-filtered) to ground
    truth: descending score (ties keep insertion order), each detection
    greedily takes the unclaimed ground truth of highest IoU >= threshold
    (ties go to the lowest ground-truth index)."""
    det_matched: list[Optional[int]] = [None] * len(dets)
    covered = [False] * len(gts)
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    for i in order:
        best_j, best_iou = None, 0.0
        for j, g in enumerate(gts):
            if covered[j]:
                continue
            v = iou(dets[i].bbox, g.bbox)
            if v >= iou_thr and (best_j is None or v > best_iou):
                best_j, best_iou = j, v
        if best_j is not None:
            det_matched[i] = best_j
            covered[best_j] = True
    return MatchResult(iou_thr, tuple(det_matched), tuple(covered))


@dataclass(frozen=True)
class FrameMatches:
    """One frame's detections, ground truth, and their match result."""

    dets: tuple[Detection, ...]
    gts: tuple[GroundTruthBox, ...]
    result: MatchResult


def _in_range(area: float, area_range: tuple[float, float]) -> bool:
    lo, hi = area_range
    return lo <= area < hi


def average_precision(
    frames: Sequence[FrameMatches],
    iou_thr: float,
    area_range: tuple[float, float] = AREA_ALL,
) -> Optional[float]:
    """101-point interpolated AP over the pooled frames.

    Ground truth outside the area range is ignored; a detection matched to
    an ignored ground truth counts neither as true nor false positive.
    Returns None when the range contains no ground truth at all.
    """
    n_gt = 0
    rows: list[tuple[float, bool]] = []  # (score, is_tp), pooling order
    for fm in frames:
        if fm.result.iou_thr != iou_thr:
            raise ValueError(f"matches were computed at {fm.result.iou_thr}, not {iou_thr}")
        gt_ok = [_in_range(g.area, area_range) for g in fm.gts]
        n_gt += sum(gt_ok)
        for i, d in enumerate(fm.dets):
            j = fm.result.det_matched[i]
            if j is None:
                rows.append((d.score, False))
            elif gt_ok[j]:
                rows.append((d.score, True))
            # matched to an out-of-range ground truth: excluded entirely
    if n_gt == 0:
        return None
    if not rows:
        return 0.0
    rows.sort(key=lambda r: -r[0])  # stable: score ties keep pooling order
    precisions, recalls = [], []
    tp = fp = 0
    for _, is_tp in rows:
        tp += is_tp
        fp += not is_tp
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)
    # Right-to-left precision envelope, then read it at the recall grid.
    envelope = precisions[:]
    for i in range(len(envelope) - 2, -1, -1):
        envelope[i] = max(envelope[i], envelope[i + 1])
    total = 0.0
    j = 0
    for r in RECALL_POINTS:
        while j < len(recalls) and recalls[j] < r:
            j += 1
        total += envelope[j] if j < len(recalls) else 0.0
    return total / len(RECALL_POINTS)


@dataclass(frozen=True)
class SapReport:
    """Aggregate streaming-AP numbers, each in [0, 1] (None when the
    corresponding area split holds no ground truth)."""

    sap: float
    sap50: float
    sap75: float
    sap_small: Optional[float]
    sap_medium: Optional[float]
    sap_large: Optional[float]
    per_category: dict[int, float]


REPORT_COLUMNS = ("sAP", "sAP50", "sAP75", "sAP_s", "sAP_m", "sAP_l")


def _report_values(report: SapReport) -> tuple[Optional[float], ...]:
    return (report.sap, report.sap50, report.sap75, report.sap_small, report.sap_medium, report.sap_large)


def compute_sap_report(
    pairings: Sequence[EvalPairing],
    gts_by_frame: Sequence[Sequence[GroundTruthBox]],
    max_dets_per_frame: Optional[int] = None,
) -> SapReport:
    """Score latency-paired detections against per-frame ground truth.

    Categories are averaged first (those without ground truth are excluded),
    IoU thresholds second.  Area splits use the ground-truth box area:
    small < 32^2, medium in [32^2, 96^2), large >= 96^2.
    """
    categories = sorted({g.category for gts in gts_by_frame for g in gts})
    frame_dets: list[tuple[int, tuple[Detection, ...]]] = []
    for p in pairings:
        dets = tuple(p.paired_record.detections) if p.paired_record is not None else ()
        if max_dets_per_frame is not None and len(dets) > max_dets_per_frame:
            keep = sorted(range(len(dets)), key=lambda i: -dets[i].score)[:max_dets_per_frame]
            dets = tuple(dets[i] for i in sorted(keep))
        frame_dets.append((p.query_frame_index, dets))

    matches: dict[tuple[int, float], list[FrameMatches]] = {}
    for cat in categories:
        for thr in IOU_THRESHOLDS:
            per_frame = []
            for q, dets in frame_dets:
                dets_c = tuple(d for d in dets if d.category == cat)
                gts_c = tuple(g for g in gts_by_frame[q] if g.category == cat)
                per_frame.append(FrameMatches(dets_c, gts_c, match_frame(dets_c, gts_c, thr)))
            matches[(cat, thr)] = per_frame

    def mean_ap(thrs: Sequence[float], area_range: tuple[float, float]) -> Optional[float]:
        per_thr = []
        for thr in thrs:
            vals = [ap for cat in categories
                    if (ap := average_precision(matches[(cat, thr)], thr, area_range)) is not None]
            if vals:
                per_thr.append(sum(vals) / len(vals))
        return sum(per_thr) / len(per_thr) if per_thr else None

    sap = mean_ap(IOU_THRESHOLDS, AREA_ALL)
    if sap is None:
        raise ValueError("no ground truth supplied; the report is undefined")
    per_category = {}
    for cat in categories:
        vals = [average_precision(matches[(cat, thr)], thr, AREA_ALL) for thr in IOU_THRESHOLDS]
        per_category[cat] = sum(vals) / len(vals)
    return SapReport(
        sap=sap,
        sap50=mean_ap((0.50,), AREA_ALL),
        sap75=mean_ap((0.75,), AREA_ALL),
        sap_small=mean_ap(IOU_THRESHOLDS, AREA_SMALL),
        sap_medium=mean_ap(IOU_THRESHOLDS, AREA_MEDIUM),
        sap_large=mean_ap(IOU_THRESHOLDS, AREA_LARGE),
        per_category=per_category,
    )


def report_to_text(report: SapReport) -> str:
    """Flat key-value block, one metric per line."""
    lines = []
    for name, value in zip(REPORT_COLUMNS, _report_values(report)):
        lines.append(f"{name} = {'' if value is None else repr(value)}")
    for cat in sorted(report.per_category):
        lines.append(f"AP_cat_{cat} = {report.per_category[cat]!r}")
    return "\n".join(lines) + "\n"


def report_from_text(text: str) -> SapReport:
    fields: dict[str, Optional[float]] = {}
    per_category: dict[int, float] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, raw = line.partition(" = ")
        value = float(raw) if raw.strip() else None
        if key.startswith("AP_cat_"):
            per_category[int(key[len("AP_cat_"):])] = value
        else:
            fields[key] = value
    return SapReport(
        sap=fields["sAP"],
        sap50=fields["sAP50"],
        sap75=fields["sAP75"],
        sap_small=fields.get("sAP_s"),
        sap_medium=fields.get("sAP_m"),
        sap_large=fields.get("sAP_l"),
        per_category=per_category,
    )


def report_csv_header() -> str:
    return ",".join(REPORT_COLUMNS)


def report_to_csv_row(report: SapReport) -> str:
    return ",".join("" if v is None else repr(v) for v in _report_values(report))


def report_to_human_table(report: SapReport) -> str:
    """Percent rendering (x100, one decimal), the way result tables print."""
    header = " | ".join(f"{c:>6}" for c in REPORT_COLUMNS)
    cells = " | ".join(
        f"{'-':>6}" if v is None else f"{100.0 * v:>6.1f}" for v in _report_values(report)
    )
    return header + "\n" + cells + "\n"
