"""Glue binding the boosting loop to the evolutionary weak learner."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Sequence

from .boosting import LabeledSample, TrainConfig, TrainResult, train
from .features import WindowStack
from .learner import LearnerConfig, derive_seed, search_best


def train_detector(samples: Sequence[LabeledSample], rounds: int,
                   learner_config: LearnerConfig,
                   train_config: TrainConfig = TrainConfig(),
                   progress: Callable[[int, int, float, float], None] | None = None,
                   ) -> TrainResult:
    """Boost ``rounds`` weak classifiers found by the evolutionary search.

    The sample stack is built once and shared across rounds; each round
    searches under a seed derived from (base seed, round), so the whole
    run is reproducible from the config alone. ``progress`` receives
    (round, generation, best_epsilon, mean_epsilon) ticks from inside
    the search.
    """
    stack = WindowStack.from_images([s.window for s in samples])

    def learner(smp, dist, t):
        sink = None
        if progress is not None:
            sink = lambda gen, best, mean: progress(t, gen, best, mean)
        cfg = replace(learner_config, seed=derive_seed(learner_config.seed, t))
        return search_best(cfg.family, dist, smp, cfg, stack=stack,
                           progress=sink).weak

    return train(samples, rounds, learner, train_config)
