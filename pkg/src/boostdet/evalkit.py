"""Ground-truth matching and ROC / Precision-Recall curve generation.

Matching is greedy one-to-one: detections claim truth boxes in descending
margin order, each taking the unclaimed box of highest IoU at or above
the threshold. Because a bias sweep only ever removes a suffix of the
margin-sorted detection list, the greedy claims are computed once per
frame and every sweep point reads off a prefix.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .detector import Detection, iou
from .imaging import Rect


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_id: str
    boxes: tuple[Rect, ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class RocPoint:
    bias: float
    fp_per_frame: float
    tpr: float


@dataclass(frozen=True)
class PrPoint:
    bias: float
    recall: float
    precision: float


def _greedy_claims(dets: Sequence[Detection], boxes: Sequence[Rect],
                   iou_threshold: float) -> list[bool]:
    """Whether each margin-ordered detection claims a truth box.

    Detections are processed in descending margin order (ties by input
    order); IoU ties between truth boxes go to the lower index.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].margin, i))
    unclaimed = set(range(len(boxes)))
    claimed = [False] * len(dets)
    for i in order:
        best_j, best_iou = -1, 0.0
        for j in sorted(unclaimed):
            v = iou(dets[i].box, boxes[j])
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0 and best_iou >= iou_threshold:
            unclaimed.discard(best_j)
            claimed[i] = True
    return claimed


def match_frame(dets: Sequence[Detection], truth: GroundTruthFrame,
                iou_threshold: float = 0.5) -> MatchResult:
    """One-to-one greedy match of detections against one frame's truth."""
    claimed = _greedy_claims(dets, truth.boxes, iou_threshold)
    tp = sum(claimed)
    return MatchResult(tp=tp, fp=len(dets) - tp, fn=len(truth.boxes) - tp)


class _FrameSweep:
    """Per-frame prefix counts: claims of the margin-sorted detections."""

    def __init__(self, dets: Sequence[Detection], boxes: Sequence[Rect],
                 iou_threshold: float):
        order = sorted(range(len(dets)), key=lambda i: (-dets[i].margin, i))
        claimed = _greedy_claims(dets, boxes, iou_threshold)
        # negated margins ascend; detections kept at a bias form a prefix
        self.neg_margins = [-dets[i].margin for i in order]
        self.cum_tp = [0]
        for i in order:
            self.cum_tp.append(self.cum_tp[-1] + (1 if claimed[i] else 0))
        self.n_truth = len(boxes)

    def counts(self, bias: float) -> tuple[int, int]:
        """(tp, fp) over detections with margin strictly above ``bias``."""
        kept = bisect.bisect_left(self.neg_margins, -bias)
        tp = self.cum_tp[kept]
        return tp, kept - tp


def _build_sweeps(detections: Mapping[str, Sequence[Detection]],
                  truths: Sequence[GroundTruthFrame],
                  iou_threshold: float) -> tuple[list[_FrameSweep], int, int]:
    truth_by_id = {t.frame_id: t.boxes for t in truths}
    frame_ids = sorted(set(truth_by_id) | set(detections))
    sweeps = [_FrameSweep(detections.get(fid, ()), truth_by_id.get(fid, ()),
                          iou_threshold) for fid in frame_ids]
    total_truth = sum(s.n_truth for s in sweeps)
    return sweeps, total_truth, len(frame_ids)


def default_bias_sweep(detections: Mapping[str, Sequence[Detection]]) -> list[float]:
    """Descending unique margins wrapped in +/- infinity sentinels."""
    margins = sorted({d.margin for dets in detections.values() for d in dets},
                     reverse=True)
    return [math.inf] + margins + [-math.inf]


def roc_curve(detections: Mapping[str, Sequence[Detection]],
              truths: Sequence[GroundTruthFrame],
              bias_sweep: Sequence[float] | None = None,
              iou_threshold: float = 0.5) -> list[RocPoint]:
    """True-positive rate against false positives per frame, by descending bias."""
    sweeps, total_truth, n_frames = _build_sweeps(detections, truths, iou_threshold)
    if n_frames == 0:
        return []
    if bias_sweep is None:
        bias_sweep = default_bias_sweep(detections)
    points = []
    for bias in bias_sweep:
        tp = fp = 0
        for s in sweeps:
            t, f = s.counts(bias)
            tp += t
            fp += f
        tpr = tp / total_truth if total_truth else 0.0
        points.append(RocPoint(bias=bias, fp_per_frame=fp / n_frames, tpr=tpr))
    return points


def pr_curve(detections: Mapping[str, Sequence[Detection]],
             truths: Sequence[GroundTruthFrame],
             bias_sweep: Sequence[float] | None = None,
             iou_threshold: float = 0.5) -> list[PrPoint]:
    """Precision and recall by descending bias.

    Precision of an empty detection set is 1 by convention, which keeps
    the curve total.
    """
    sweeps, total_truth, n_frames = _build_sweeps(detections, truths, iou_threshold)
    if n_frames == 0:
        return []
    if bias_sweep is None:
        bias_sweep = default_bias_sweep(detections)
    points = []
    for bias in bias_sweep:
        tp = fp = 0
        for s in sweeps:
            t, f = s.counts(bias)
            tp += t
            fp += f
        recall = tp / total_truth if total_truth else 0.0
        precision = tp / (tp + fp) if tp + fp else 1.0
        points.append(PrPoint(bias=bias, recall=recall, precision=precision))
    return points


def auc(points: Sequence[RocPoint]) -> float:
    """Trapezoidal area under tpr with the fp axis normalized to [0, 1].

    Expects points sorted by fp_per_frame (a roc_curve result qualifies).
    A degenerate curve that never produces a false positive scores its
    best tpr.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 curve points")
    max_fp = points[-1].fp_per_frame
    if max_fp == 0.0:
        return max(p.tpr for p in points)
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.fp_per_frame - a.fp_per_frame) / max_fp * (a.tpr + b.tpr) / 2.0
    return area
