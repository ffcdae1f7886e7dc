"""AdaBoost training loop, weight bookkeeping and the strong-classifier vote.

The update multiplies correctly classified weights by beta = e/(1-e) and
renormalizes, which is the standard discrete update and makes the
weighted error of the round's weak classifier exactly 1/2 under the next
distribution. A ``literal_zero_update`` option zeroes misclassified
weights instead (a destructive variant kept for study, off by default).

A weak classifier with zero error is kept with its error floored at
EPS_MIN before computing its vote weight, then training stops; a round
whose error reaches 1/2 stops training without keeping the classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .features import (
    CANONICAL_H,
    CANONICAL_W,
    Feature,
    WindowStack,
    eval_batch,
    eval_feature,
)
from .imaging import GrayImage, IntegralImage, Rect, build_integral

EPS_MIN = 1e-6

CANONICAL_WINDOW = Rect(0, 0, CANONICAL_W, CANONICAL_H)


@dataclass(frozen=True)
class LabeledSample:
    """A canonical training window, its integral image and a -1/+1 label."""

    window: GrayImage
    integral: IntegralImage
    label: int

    def __post_init__(self):
        if (self.window.width, self.window.height) != (CANONICAL_W, CANONICAL_H):
            raise ValueError("sample window must be canonical size")
        if (self.integral.width, self.integral.height) != (CANONICAL_W, CANONICAL_H):
            raise ValueError("integral does not match the window")
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")

    @classmethod
    def from_window(cls, window: GrayImage, label: int) -> "LabeledSample":
        return cls(window=window, integral=build_integral(window), label=label)


@dataclass(frozen=True)
class WeightDistribution:
    """Per-sample weights, non-negative and summing to 1 within 1e-12."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if (w < 0).any():
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    def __len__(self) -> int:
        return len(self.weights)

    @classmethod
    def uniform(cls, n: int) -> "WeightDistribution":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class WeakClassifier:
    """A feature plus the polarity mapping its boolean output to a label."""

    feature: Feature
    polarity: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.polarity}")


@dataclass(frozen=True)
class Stage:
    alpha: float
    weak: WeakClassifier

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"stage weight must be finite and positive, got {self.alpha}")


@dataclass(frozen=True)
class StrongClassifier:
    """Weighted vote over weak classifiers, all defined on the canonical window."""

    stages: tuple[Stage, ...]
    canonical_w: int = CANONICAL_W
    canonical_h: int = CANONICAL_H

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if len(self.stages) < 1:
            raise ValueError("a trained model holds at least one stage")


def weak_predict(h: WeakClassifier, sample: LabeledSample) -> int:
    """polarity when the feature fires, -polarity otherwise."""
    fired = eval_feature(h.feature, sample.integral, sample.window, CANONICAL_WINDOW)
    return h.polarity if fired else -h.polarity


def weighted_error(h: WeakClassifier, dist: WeightDistribution,
                   samples: Sequence[LabeledSample]) -> float:
    """Sum of weights over samples ``h`` misclassifies."""
    if len(dist) != len(samples):
        raise ValueError(f"{len(dist)} weights for {len(samples)} samples")
    return float(sum(w for w, s in zip(dist.weights, samples)
                     if weak_predict(h, s) != s.label))


def beta(error: float) -> float:
    """Reweighting factor error/(1-error), defined on 0 < error < 1/2."""
    if not 0.0 < error < 0.5:
        raise ValueError(f"error must lie in (0, 0.5), got {error}")
    return error / (1.0 - error)


def alpha(beta_value: float) -> float:
    """Vote weight ln(1/beta), positive for any beta in (0, 1)."""
    if not 0.0 < beta_value < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta_value}")
    return math.log(1.0 / beta_value)


def update_weights(dist: WeightDistribution, correct: Sequence[bool], beta_value: float,
                   literal_zero_update: bool = False) -> WeightDistribution:
    """Scale correct weights by beta (misclassified stay), then renormalize.

    With ``literal_zero_update`` the misclassified weights are zeroed
    instead, which collapses the distribution onto the easy examples.
    """
    if not 0.0 < beta_value < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta_value}")
    mask = np.asarray(correct, dtype=bool)
    if len(mask) != len(dist):
        raise ValueError(f"{len(mask)} outcomes for {len(dist)} weights")
    if literal_zero_update:
        scaled = np.where(mask, dist.weights * beta_value, 0.0)
    else:
        scaled = np.where(mask, dist.weights * beta_value, dist.weights)
    z = scaled.sum()
    if z <= 0:
        raise ValueError("all weights vanished during the update")
    return WeightDistribution(scaled / z)


@dataclass(frozen=True)
class TrainConfig:
    eps_min: float = EPS_MIN
    literal_zero_update: bool = False


@dataclass(frozen=True)
class RoundLog:
    t: int
    epsilon: float
    beta: float
    alpha: float
    bound: float
    train_error: float


@dataclass
class TrainResult:
    model: StrongClassifier | None
    rounds: list[RoundLog] = field(default_factory=list)
    stop_reason: str = "completed"


WeakLearner = Callable[[Sequence[LabeledSample], WeightDistribution, int], WeakClassifier]


def train(samples: Sequence[LabeledSample], rounds: int, learner: WeakLearner,
          config: TrainConfig = TrainConfig()) -> TrainResult:
    """Run up to ``rounds`` boosting rounds over ``samples``.

    Each round asks ``learner`` for a weak classifier under the current
    distribution, re-derives its weighted error, and either keeps it with
    vote weight ln((1-e)/e) or stops: error zero keeps the stage (with the
    error floored at eps_min) and ends training, error at or above 1/2
    ends training without keeping the stage. The per-round log carries
    epsilon, beta, alpha, the running product of 2*sqrt(e(1-e)) and the
    empirical training error of the model so far.
    """
    labels = np.array([s.label for s in samples])
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not ((labels == 1).any() and (labels == -1).any()):
        raise ValueError("need at least one sample of each class")

    stack = WindowStack.from_images([s.window for s in samples])
    dist = WeightDistribution.uniform(len(samples))
    stages: list[Stage] = []
    rows: list[RoundLog] = []
    margins = np.zeros(len(samples))
    bound = 1.0
    stop_reason = "completed"

    for t in range(1, rounds + 1):
        weak = learner(samples, dist, t)
        fired = eval_batch(weak.feature, stack)
        preds = np.where(fired, weak.polarity, -weak.polarity)
        mistakes = preds != labels
        eps = float(dist.weights[mistakes].sum())

        if eps >= 0.5:
            stop_reason = f"stopped at round {t}: weak classifier error {eps:.6g} >= 0.5"
            break

        # the floor only matters for a perfect classifier; real errors
        # below eps_min keep their exact beta so the half-error property
        # of the updated distribution holds every continuing round
        if eps == 0.0:
            eps_eff = config.eps_min
            stop_reason = f"stopped at round {t}: perfect weak classifier"
        else:
            eps_eff = eps
        b = beta(eps_eff)
        a = alpha(b)
        stages.append(Stage(alpha=a, weak=weak))
        bound *= 2.0 * math.sqrt(eps_eff * (1.0 - eps_eff))

        margins += a * preds
        train_error = float(np.mean(np.where(margins > 0, 1, -1) != labels))
        rows.append(RoundLog(t=t, epsilon=eps, beta=b, alpha=a,
                             bound=bound, train_error=train_error))

        if eps == 0.0:
            break
        dist = update_weights(dist, ~mistakes, b,
                              literal_zero_update=config.literal_zero_update)

    model = StrongClassifier(stages=tuple(stages)) if stages else None
    return TrainResult(model=model, rounds=rows, stop_reason=stop_reason)


def score(model: StrongClassifier, sample: LabeledSample) -> float:
    """Margin of the weighted vote over all stages."""
    return sum(st.alpha * weak_predict(st.weak, sample) for st in model.stages)


def classify(model: StrongClassifier, sample: LabeledSample, bias: float = 0.0) -> int:
    """+1 iff the margin strictly exceeds ``bias``; ties reject."""
    return 1 if score(model, sample) > bias else -1
