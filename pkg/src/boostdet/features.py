"""The four weak-feature families and their boolean window tests.

All feature geometry lives in canonical-window coordinates (32 wide by
24 high). At evaluation time coordinates are scaled to the actual window
with floor rounding and extents clamped to >= 1, so every pyramid level
sees integer-only geometry.

Two evaluation routes exist for each family:

* scalar ops (``eval_haar`` etc.) that follow the rules one window at a
  time, used by the boosting contracts and as the reference path, and
* ``eval_batch`` over a ``WindowStack`` of canonical windows, the hot
  path for weak-learner search. Both routes perform the same IEEE
  operations in the same order, so their booleans agree exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .imaging import (
    SIGMA_MIN,
    BoundsError,
    GrayImage,
    IntegralImage,
    Rect,
    build_integral,
    rect_sum,
    window_stats,
)

CANONICAL_W = 32
CANONICAL_H = 24

MIN_CHAIN_LEN = 2
MAX_CHAIN_LEN = 12
MAX_CLASS_POINTS = 6


class FeatureKind(enum.Enum):
    HAAR = "haar"
    CONTROL_POINTS = "cp"
    SYMMETRIC_HAAR = "symhaar"
    CHAIN = "nconnex"


def _check_canonical_rect(r: Rect, half_width: bool = False) -> None:
    limit_w = CANONICAL_W // 2 if half_width else CANONICAL_W
    if not r.fits_in(limit_w, CANONICAL_H):
        zone = "left half of the canonical" if half_width else "canonical"
        raise ValueError(f"{r} exceeds the {zone} {CANONICAL_W}x{CANONICAL_H} window")


def _check_canonical_point(x: int, y: int) -> None:
    if not (0 <= x < CANONICAL_W and 0 <= y < CANONICAL_H):
        raise ValueError(f"point ({x}, {y}) outside canonical window")


@dataclass(frozen=True)
class HaarFeature:
    """Two rectangles compared by normalized mean difference.

    True iff |mean(rect_a) - mean(rect_b)| / sigma > threshold, where
    sigma is the clamped std dev of the whole window.
    """

    rect_a: Rect
    rect_b: Rect
    threshold: float

    def __post_init__(self):
        _check_canonical_rect(self.rect_a)
        _check_canonical_rect(self.rect_b)
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


@dataclass(frozen=True)
class ControlPointsFeature:
    """Two point classes whose raw pixel values must separate by ``separation``."""

    pos_points: tuple[tuple[int, int], ...]
    neg_points: tuple[tuple[int, int], ...]
    separation: int

    def __post_init__(self):
        object.__setattr__(self, "pos_points", tuple(tuple(p) for p in self.pos_points))
        object.__setattr__(self, "neg_points", tuple(tuple(p) for p in self.neg_points))
        for cls_name, pts in (("pos", self.pos_points), ("neg", self.neg_points)):
            if not 1 <= len(pts) <= MAX_CLASS_POINTS:
                raise ValueError(f"{cls_name} class must hold 1..{MAX_CLASS_POINTS} points")
            if len(set(pts)) != len(pts):
                raise ValueError(f"duplicate point in {cls_name} class")
            for x, y in pts:
                _check_canonical_point(x, y)
        if not 1 <= self.separation <= 255:
            raise ValueError(f"separation must be in 1..255, got {self.separation}")


@dataclass(frozen=True)
class SymmetricHaarFeature:
    """Three paired-rectangle tests: left, its horizontal mirror, and middle.

    The left sub-feature is confined to the left half of the window; the
    right one is derived by mirroring. The middle rects must be centered
    within one pixel of the vertical axis. ``sym_tol`` bounds how far the
    left/right responses may drift apart, ``mid_margin`` is the dominance
    the middle response must show over that drift.
    """

    left_a: Rect
    left_b: Rect
    mid_a: Rect
    mid_b: Rect
    t_left: float
    t_right: float
    t_mid: float
    sym_tol: float
    mid_margin: float

    def __post_init__(self):
        _check_canonical_rect(self.left_a, half_width=True)
        _check_canonical_rect(self.left_b, half_width=True)
        for r in (self.mid_a, self.mid_b):
            _check_canonical_rect(r)
            # horizontal center within 1px of the axis: |x + w/2 - W/2| <= 1
            if not (CANONICAL_W - 2 <= 2 * r.x + r.w <= CANONICAL_W + 2):
                raise ValueError(f"middle rect {r} not centered on the window axis")
        for name in ("t_left", "t_right", "t_mid", "sym_tol", "mid_margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ChainFeature:
    """Control-points variant whose points form an 8-connected chain.

    ``chain`` is an ordered tuple of (x, y, is_pos) entries; consecutive
    points sit at Chebyshev distance exactly 1 and both classes are
    non-empty.
    """

    chain: tuple[tuple[int, int, bool], ...]
    separation: int

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple((x, y, bool(t)) for x, y, t in self.chain))
        pts = [(x, y) for x, y, _ in self.chain]
        if not validate_chain(pts):
            raise ValueError(f"invalid 8-connected chain: {pts}")
        tags = [t for _, _, t in self.chain]
        if not (any(tags) and not all(tags)):
            raise ValueError("chain needs at least one pos and one neg point")
        if not 1 <= self.separation <= 255:
            raise ValueError(f"separation must be in 1..255, got {self.separation}")

    @property
    def pos_points(self) -> tuple[tuple[int, int], ...]:
        return tuple((x, y) for x, y, t in self.chain if t)

    @property
    def neg_points(self) -> tuple[tuple[int, int], ...]:
        return tuple((x, y) for x, y, t in self.chain if not t)


Feature = Union[HaarFeature, ControlPointsFeature, SymmetricHaarFeature, ChainFeature]

_KIND_BY_TYPE = {
    HaarFeature: FeatureKind.HAAR,
    ControlPointsFeature: FeatureKind.CONTROL_POINTS,
    SymmetricHaarFeature: FeatureKind.SYMMETRIC_HAAR,
    ChainFeature: FeatureKind.CHAIN,
}


def kind_of(feature: Feature) -> FeatureKind:
    return _KIND_BY_TYPE[type(feature)]


def mirror_rect(r: Rect, window_w: int) -> Rect:
    """Reflect ``r`` across the vertical axis of a ``window_w`` wide window."""
    return Rect(x=window_w - r.x - r.w, y=r.y, w=r.w, h=r.h)


def validate_chain(points: Sequence[tuple[int, int]],
                   width: int = CANONICAL_W, height: int = CANONICAL_H) -> bool:
    """True iff ``points`` is a valid ordered 8-connected chain.

    Valid means 2..12 points, all distinct, all inside ``width`` x
    ``height``, and every consecutive pair at Chebyshev distance 1.
    """
    pts = [tuple(p) for p in points]
    if not MIN_CHAIN_LEN <= len(pts) <= MAX_CHAIN_LEN:
        return False
    if len(set(pts)) != len(pts):
        return False
    for x, y in pts:
        if not (0 <= x < width and 0 <= y < height):
            return False
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if max(abs(x1 - x0), abs(y1 - y0)) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# geometry scaling: canonical coordinates -> a concrete window
# ---------------------------------------------------------------------------

def scale_rect_to_window(r: Rect, win: Rect) -> Rect:
    """Map a canonical-coordinates rect into ``win`` (frame coordinates).

    Offsets scale with floor rounding, extents clamp to >= 1. Raises
    BoundsError if the result leaks out of the window, which can only
    happen when the window is smaller than the canonical one.
    """
    x = (r.x * win.w) // CANONICAL_W
    y = (r.y * win.h) // CANONICAL_H
    w = max(1, (r.w * win.w) // CANONICAL_W)
    h = max(1, (r.h * win.h) // CANONICAL_H)
    if x + w > win.w or y + h > win.h:
        raise BoundsError(f"{r} scaled to {win.w}x{win.h} window leaks out of bounds")
    return Rect(x=win.x + x, y=win.y + y, w=w, h=h)


def scale_point_to_window(x: int, y: int, win: Rect) -> tuple[int, int]:
    """Map a canonical-coordinates point into ``win`` (frame coordinates)."""
    return win.x + (x * win.w) // CANONICAL_W, win.y + (y * win.h) // CANONICAL_H


# ---------------------------------------------------------------------------
# scalar evaluation
# ---------------------------------------------------------------------------

def _rect_mean(ii: IntegralImage, r: Rect) -> float:
    return rect_sum(ii, r) / r.area


def eval_haar(f: HaarFeature, ii: IntegralImage, win: Rect) -> bool:
    """Normalized mean-difference rule, strict comparison."""
    sigma = window_stats(ii, win).std_dev
    ma = _rect_mean(ii, scale_rect_to_window(f.rect_a, win))
    mb = _rect_mean(ii, scale_rect_to_window(f.rect_b, win))
    return abs(ma - mb) / sigma > f.threshold


def _require_canonical(window: GrayImage) -> None:
    if window.width != CANONICAL_W or window.height != CANONICAL_H:
        raise ValueError(
            f"expected canonical {CANONICAL_W}x{CANONICAL_H} window, "
            f"got {window.width}x{window.height}"
        )


def _points_separated(pos_vals: list[int], neg_vals: list[int], separation: int) -> bool:
    return (min(pos_vals) - max(neg_vals) > separation
            or min(neg_vals) - max(pos_vals) > separation)


def eval_control_points(f: ControlPointsFeature, window: GrayImage) -> bool:
    """True iff one point class sits more than ``separation`` above the other.

    Reads raw pixel values, no normalization.
    """
    _require_canonical(window)
    pos = [window.pixel(x, y) for x, y in f.pos_points]
    neg = [window.pixel(x, y) for x, y in f.neg_points]
    return _points_separated(pos, neg, f.separation)


def eval_chain(f: ChainFeature, window: GrayImage) -> bool:
    """Control-points rule applied to the chain's pos/neg tagged points."""
    _require_canonical(window)
    pos = [window.pixel(x, y) for x, y in f.pos_points]
    neg = [window.pixel(x, y) for x, y in f.neg_points]
    return _points_separated(pos, neg, f.separation)


def symmetric_diffs(f: SymmetricHaarFeature, ii: IntegralImage,
                    win: Rect) -> tuple[float, float, float]:
    """Normalized responses of the left, mirrored-right and middle pairs."""
    sigma = window_stats(ii, win).std_dev
    right_a = mirror_rect(f.left_a, CANONICAL_W)
    right_b = mirror_rect(f.left_b, CANONICAL_W)

    def diff(a: Rect, b: Rect) -> float:
        ma = _rect_mean(ii, scale_rect_to_window(a, win))
        mb = _rect_mean(ii, scale_rect_to_window(b, win))
        return abs(ma - mb) / sigma

    return diff(f.left_a, f.left_b), diff(right_a, right_b), diff(f.mid_a, f.mid_b)


def eval_symmetric_haar(f: SymmetricHaarFeature, ii: IntegralImage, win: Rect,
                        condition5_literal: bool = False) -> bool:
    """All five conditions of the symmetric three-pair test.

    The left, right and middle responses must each clear their threshold,
    left and right must agree within ``sym_tol``, and the middle response
    must exceed the left/right drift by more than ``mid_margin``. With
    ``condition5_literal`` the last test flips to drift - middle >
    ``mid_margin`` (near-unsatisfiable together with the drift bound;
    kept for experimentation).
    """
    d_left, d_right, d_mid = symmetric_diffs(f, ii, win)
    if not (d_left > f.t_left and d_right > f.t_right and d_mid > f.t_mid):
        return False
    drift = abs(d_left - d_right)
    if not drift < f.sym_tol:
        return False
    if condition5_literal:
        return drift - d_mid > f.mid_margin
    return d_mid - drift > f.mid_margin


def _eval_points_scaled(pos_points, neg_points, separation: int,
                        raw: GrayImage, win: Rect) -> bool:
    pos = [raw.pixel(*scale_point_to_window(x, y, win)) for x, y in pos_points]
    neg = [raw.pixel(*scale_point_to_window(x, y, win)) for x, y in neg_points]
    return _points_separated(pos, neg, separation)


def eval_feature(feature: Feature, ii: IntegralImage, raw: GrayImage, win: Rect,
                 condition5_literal: bool = False) -> bool:
    """Family dispatch over one window of a frame.

    Area-based families read the integral image; point-based families
    read raw pixels at scaled point positions. For a canonical window
    this reduces exactly to the family-specific ops.
    """
    if isinstance(feature, HaarFeature):
        return eval_haar(feature, ii, win)
    if isinstance(feature, SymmetricHaarFeature):
        return eval_symmetric_haar(feature, ii, win, condition5_literal)
    if isinstance(feature, ControlPointsFeature):
        return _eval_points_scaled(feature.pos_points, feature.neg_points,
                                   feature.separation, raw, win)
    if isinstance(feature, ChainFeature):
        return _eval_points_scaled(feature.pos_points, feature.neg_points,
                                   feature.separation, raw, win)
    raise TypeError(f"not a feature: {feature!r}")


# ---------------------------------------------------------------------------
# batch evaluation over stacked canonical windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowStack:
    """Canonical windows stacked for vectorized feature evaluation.

    Holds pixels as int16 (safe for subtraction), both integral tables,
    and the per-window clamped std dev, precomputed once since every
    feature normalizes by the same whole-window sigma.
    """

    pixels: np.ndarray        # (n, H, W) int16
    sums: np.ndarray          # (n, H+1, W+1) int64
    squared_sums: np.ndarray  # (n, H+1, W+1) int64
    sigma: np.ndarray         # (n,) float64

    def __len__(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_images(cls, windows: Sequence[GrayImage]) -> "WindowStack":
        for w in windows:
            _require_canonical(w)
        px = np.stack([w.pixels for w in windows]).astype(np.int16)
        px64 = px.astype(np.int64)
        sums = np.zeros((len(windows), CANONICAL_H + 1, CANONICAL_W + 1), dtype=np.int64)
        sq = np.zeros_like(sums)
        np.cumsum(np.cumsum(px64, axis=1), axis=2, out=sums[:, 1:, 1:])
        np.cumsum(np.cumsum(px64 * px64, axis=1), axis=2, out=sq[:, 1:, 1:])
        area = CANONICAL_W * CANONICAL_H
        total = sums[:, CANONICAL_H, CANONICAL_W]
        total_sq = sq[:, CANONICAL_H, CANONICAL_W]
        mean = total / area
        var = total_sq / area - mean * mean
        sigma = np.maximum(SIGMA_MIN, np.sqrt(np.maximum(0.0, var)))
        for arr in (px, sums, sq, sigma):
            arr.setflags(write=False)
        return cls(pixels=px, sums=sums, squared_sums=sq, sigma=sigma)


def _batch_rect_mean(stack: WindowStack, r: Rect) -> np.ndarray:
    s = stack.sums
    x0, y0, x1, y1 = r.x, r.y, r.x + r.w, r.y + r.h
    return (s[:, y1, x1] - s[:, y0, x1] - s[:, y1, x0] + s[:, y0, x0]) / r.area


def _batch_points(stack: WindowStack, points) -> np.ndarray:
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    return stack.pixels[:, ys, xs]


def _batch_separated(stack: WindowStack, pos_points, neg_points,
                     separation: int) -> np.ndarray:
    pos = _batch_points(stack, pos_points)
    neg = _batch_points(stack, neg_points)
    min_pos, max_pos = pos.min(axis=1), pos.max(axis=1)
    min_neg, max_neg = neg.min(axis=1), neg.max(axis=1)
    return (min_pos - max_neg > separation) | (min_neg - max_pos > separation)


def eval_batch(feature: Feature, stack: WindowStack,
               condition5_literal: bool = False) -> np.ndarray:
    """Evaluate ``feature`` on every window of ``stack`` at canonical scale.

    Returns a boolean vector identical to looping ``eval_feature`` over
    the windows.
    """
    if isinstance(feature, HaarFeature):
        ma = _batch_rect_mean(stack, feature.rect_a)
        mb = _batch_rect_mean(stack, feature.rect_b)
        return np.abs(ma - mb) / stack.sigma > feature.threshold
    if isinstance(feature, SymmetricHaarFeature):
        f = feature

        def diff(a: Rect, b: Rect) -> np.ndarray:
            return np.abs(_batch_rect_mean(stack, a) - _batch_rect_mean(stack, b)) / stack.sigma

        d_left = diff(f.left_a, f.left_b)
        d_right = diff(mirror_rect(f.left_a, CANONICAL_W), mirror_rect(f.left_b, CANONICAL_W))
        d_mid = diff(f.mid_a, f.mid_b)
        ok = (d_left > f.t_left) & (d_right > f.t_right) & (d_mid > f.t_mid)
        drift = np.abs(d_left - d_right)
        ok &= drift < f.sym_tol
        if condition5_literal:
            return ok & (drift - d_mid > f.mid_margin)
        return ok & (d_mid - drift > f.mid_margin)
    if isinstance(feature, (ControlPointsFeature, ChainFeature)):
        return _batch_separated(stack, feature.pos_points, feature.neg_points,
                                feature.separation)
    raise TypeError(f"not a feature: {feature!r}")


def integral_of(window: GrayImage) -> IntegralImage:
    """Convenience wrapper used by sample construction."""
    return build_integral(window)
