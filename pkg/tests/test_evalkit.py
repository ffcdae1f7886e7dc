import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boostdet.detector import Detection
from boostdet.evalkit import (
    GroundTruthFrame,
    MatchResult,
    RocPoint,
    auc,
    default_bias_sweep,
    match_frame,
    pr_curve,
    roc_curve,
)
from boostdet.imaging import Rect

BOX = Rect(10, 10, 20, 20)


def det(x, y, w, h, margin=1.0):
    return Detection(Rect(x, y, w, h), margin)


def truth(*boxes, frame_id="f0"):
    return GroundTruthFrame(frame_id=frame_id, boxes=tuple(boxes))


def test_match_perfect():
    assert match_frame([det(10, 10, 20, 20)], truth(BOX)) == MatchResult(1, 0, 0)


def test_match_disjoint():
    assert match_frame([det(50, 50, 5, 5)], truth(BOX)) == MatchResult(0, 1, 1)


def test_match_one_to_one():
    two = [det(10, 10, 20, 20, margin=2.0), det(11, 10, 20, 20, margin=1.0)]
    assert match_frame(two, truth(BOX)) == MatchResult(1, 1, 0)


def test_match_prefers_higher_margin():
    # the stronger detection claims the box even if listed second
    dets = [det(11, 10, 20, 20, margin=0.5), det(10, 10, 20, 20, margin=5.0)]
    result = match_frame(dets, truth(BOX))
    assert result == MatchResult(1, 1, 0)


def test_match_empty_inputs():
    assert match_frame([], truth(BOX)) == MatchResult(0, 0, 1)
    assert match_frame([det(0, 0, 4, 4)], truth()) == MatchResult(0, 1, 0)
    assert match_frame([], truth()) == MatchResult(0, 0, 0)


def _random_case(py: random.Random):
    dets = [det(py.randint(0, 50), py.randint(0, 50), py.randint(4, 30),
                py.randint(4, 30), margin=py.uniform(-2, 2))
            for _ in range(py.randint(0, 12))]
    boxes = [Rect(py.randint(0, 50), py.randint(0, 50), py.randint(4, 30),
                  py.randint(4, 30)) for _ in range(py.randint(0, 6))]
    return dets, boxes


@given(seed=st.integers(0, 2 ** 32 - 1))
@settings(max_examples=150, deadline=None)
def test_match_cardinalities(seed):
    py = random.Random(seed)
    dets, boxes = _random_case(py)
    r = match_frame(dets, truth(*boxes))
    assert r.tp <= min(len(dets), len(boxes))
    assert r.tp + r.fn == len(boxes)
    assert r.tp + r.fp == len(dets)


def test_match_scale_invariance():
    py = random.Random(77)
    for _ in range(200):
        dets, boxes = _random_case(py)
        scaled_dets = [Detection(Rect(d.box.x * 2, d.box.y * 2, d.box.w * 2,
                                      d.box.h * 2), d.margin) for d in dets]
        scaled_boxes = [Rect(b.x * 2, b.y * 2, b.w * 2, b.h * 2) for b in boxes]
        assert match_frame(dets, truth(*boxes)) == match_frame(
            scaled_dets, truth(*scaled_boxes))


def _curve_fixture(py: random.Random, n_frames: int = 6):
    detections = {}
    truths = []
    for i in range(n_frames):
        fid = f"frame{i}"
        dets, boxes = _random_case(py)
        detections[fid] = dets
        truths.append(GroundTruthFrame(frame_id=fid, boxes=tuple(boxes)))
    return detections, truths


def test_roc_sentinel_points():
    py = random.Random(5)
    detections, truths = _curve_fixture(py)
    points = roc_curve(detections, truths)
    assert points[0].tpr == 0.0 and points[0].fp_per_frame == 0.0
    # the lowest bias keeps every detection
    total = sum(len(v) for v in detections.values())
    last = points[-1]
    tp = sum(match_frame(detections[t.frame_id], t).tp for t in truths)
    assert last.fp_per_frame == pytest.approx((total - tp) / len(truths))


def test_roc_matches_brute_force_recount():
    py = random.Random(9)
    detections, truths = _curve_fixture(py, n_frames=5)
    points = roc_curve(detections, truths)
    total_truth = sum(len(t.boxes) for t in truths)
    for p in points:
        tp = fp = 0
        for t in truths:
            kept = [d for d in detections[t.frame_id] if d.margin > p.bias]
            r = match_frame(kept, t)
            tp += r.tp
            fp += r.fp
        assert p.tpr == pytest.approx(tp / total_truth if total_truth else 0.0)
        assert p.fp_per_frame == pytest.approx(fp / len(truths))


def test_roc_monotone_as_bias_drops():
    py = random.Random(13)
    for _ in range(30):
        detections, truths = _curve_fixture(py, n_frames=4)
        points = roc_curve(detections, truths)
        for a, b in zip(points, points[1:]):
            assert b.bias <= a.bias or math.isinf(a.bias)
            assert b.tpr >= a.tpr - 1e-15
            assert b.fp_per_frame >= a.fp_per_frame - 1e-15


def test_pr_conventions():
    detections = {"f0": [det(10, 10, 20, 20, margin=1.0)]}
    truths = [truth(BOX)]
    points = pr_curve(detections, truths)
    assert points[0].recall == 0.0 and points[0].precision == 1.0  # nothing kept
    assert points[-1].recall == 1.0 and points[-1].precision == 1.0


def test_pr_example_eight_two_two():
    # 10 truths in one frame, 8 hit, 2 missed, 2 false alarms
    boxes = [Rect(i * 40, 0, 20, 20) for i in range(10)]
    dets = [det(i * 40, 0, 20, 20, margin=2.0) for i in range(8)]
    dets += [det(i * 40, 500, 20, 20, margin=1.5) for i in range(2)]
    points = pr_curve({"f0": dets}, [truth(*boxes)], bias_sweep=[0.0])
    assert points[0].precision == pytest.approx(0.8)
    assert points[0].recall == pytest.approx(0.8)


def test_pr_all_points_in_unit_square():
    py = random.Random(17)
    detections, truths = _curve_fixture(py)
    for p in pr_curve(detections, truths):
        assert 0.0 <= p.recall <= 1.0
        assert 0.0 <= p.precision <= 1.0


def test_auc_triangle_and_rectangle():
    tri = [RocPoint(bias=1.0, fp_per_frame=0.0, tpr=0.0),
           RocPoint(bias=0.0, fp_per_frame=1.0, tpr=1.0)]
    assert auc(tri) == pytest.approx(0.5)
    rect = [RocPoint(bias=1.0, fp_per_frame=0.0, tpr=1.0),
            RocPoint(bias=0.0, fp_per_frame=2.0, tpr=1.0)]
    assert auc(rect) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        auc(tri[:1])


def test_auc_matches_riemann_oracle():
    import numpy as np

    py = random.Random(23)
    for _ in range(30):
        gaps = [py.uniform(0.1, 1.0) for _ in range(7)]
        xs = [0.0]
        for g in gaps:
            xs.append(xs[-1] + g)
        ys = sorted(py.uniform(0, 1) for _ in range(8))
        points = [RocPoint(bias=-i, fp_per_frame=x, tpr=y)
                  for i, (x, y) in enumerate(zip(xs, ys))]
        got = auc(points)
        # fine midpoint rectangle sum over the same piecewise-linear curve,
        # normalized the same way (x axis scaled to [0, 1])
        steps = 2_000_000
        max_x = xs[-1]
        grid = (np.arange(steps) + 0.5) / steps * max_x
        total = float(np.interp(grid, xs, ys).sum()) / steps
        assert got == pytest.approx(total, abs=1e-6)


def test_auc_zero_fp_curve_degenerates_to_best_tpr():
    points = [RocPoint(bias=1.0, fp_per_frame=0.0, tpr=0.2),
              RocPoint(bias=0.0, fp_per_frame=0.0, tpr=0.9)]
    assert auc(points) == pytest.approx(0.9)


def test_default_sweep_has_sentinels():
    detections = {"f0": [det(0, 0, 5, 5, margin=1.0), det(0, 0, 5, 5, margin=2.0)]}
    sweep = default_bias_sweep(detections)
    assert sweep[0] == math.inf and sweep[-1] == -math.inf
    assert sweep[1:-1] == [2.0, 1.0]
