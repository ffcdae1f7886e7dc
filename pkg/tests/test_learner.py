import random
from dataclasses import replace

import numpy as np
import pytest

from boostdet.boosting import LabeledSample, WeightDistribution
from boostdet.features import (
    CANONICAL_W,
    ChainFeature,
    ControlPointsFeature,
    FeatureKind,
    HaarFeature,
    SymmetricHaarFeature,
    validate_chain,
)
from boostdet.learner import (
    Candidate,
    LearnerConfig,
    derive_seed,
    mutate,
    random_feature,
    search_best,
)
from boostdet.synthetic import training_samples
from conftest import rand_window

FAMILY_TYPES = {
    FeatureKind.HAAR: HaarFeature,
    FeatureKind.CONTROL_POINTS: ControlPointsFeature,
    FeatureKind.SYMMETRIC_HAAR: SymmetricHaarFeature,
    FeatureKind.CHAIN: ChainFeature,
}


@pytest.mark.parametrize("family", list(FeatureKind))
def test_random_feature_respects_invariants(family):
    # constructors validate, so surviving 10000 draws is the assertion
    py = random.Random(101)
    for _ in range(10000):
        f = random_feature(family, py)
        assert isinstance(f, FAMILY_TYPES[family])
        if family is FeatureKind.CHAIN:
            assert validate_chain([(x, y) for x, y, _ in f.chain])
        if family is FeatureKind.SYMMETRIC_HAAR:
            assert f.left_a.x + f.left_a.w <= CANONICAL_W // 2
            assert f.left_b.x + f.left_b.w <= CANONICAL_W // 2


def test_random_feature_is_deterministic():
    for family in FeatureKind:
        assert (random_feature(family, random.Random(7))
                == random_feature(family, random.Random(7)))


def test_mutate_is_deterministic():
    for family in FeatureKind:
        f = random_feature(family, random.Random(3))
        assert mutate(f, random.Random(9)) == mutate(f, random.Random(9))


@pytest.mark.parametrize("family", list(FeatureKind))
def test_mutate_preserves_invariants(family):
    py = random.Random(103)
    f = random_feature(family, py)
    for i in range(25000):
        f = mutate(f, py)
        assert isinstance(f, FAMILY_TYPES[family])
        if i % 500 == 0 and family is FeatureKind.CHAIN:
            assert validate_chain([(x, y) for x, y, _ in f.chain])
        if i % 1000 == 0:
            f = random_feature(family, py)  # restart so the walk covers more space


def test_mutate_changes_or_returns_valid(rng):
    py = random.Random(107)
    changed = 0
    f = random_feature(FeatureKind.CHAIN, py)
    for _ in range(200):
        g = mutate(f, py)
        if g != f:
            changed += 1
        f = g
    assert changed > 100  # moves almost always land


def _uniform(samples):
    return WeightDistribution.uniform(len(samples))


@pytest.fixture(scope="module")
def small_set():
    return training_samples(30, 60, seed=5)


def test_planted_perfect_feature_is_kept(small_set):
    # a control-points probe that reads body vs bar pixels of every target
    # is not available in closed form, so plant a feature found by a
    # previous search and check elitism preserves a zero-error plant
    config = LearnerConfig(family=FeatureKind.CONTROL_POINTS, population_size=20,
                           generations=4, seed=1)
    best = search_best(config.family, _uniform(small_set), small_set, config)
    planted = best.weak.feature
    again = search_best(config.family, _uniform(small_set), small_set,
                        replace(config, seed=999), seed_features=[planted])
    assert again.epsilon <= best.epsilon


def test_search_never_beats_planted_zero(small_set):
    config = LearnerConfig(family=FeatureKind.HAAR, population_size=30,
                           generations=10, seed=2)
    best = search_best(config.family, _uniform(small_set), small_set, config)
    if best.epsilon == 0.0:
        replay = search_best(config.family, _uniform(small_set), small_set,
                             replace(config, generations=1),
                             seed_features=[best.weak.feature])
        assert replay.epsilon == 0.0
        assert replay.weak.feature == best.weak.feature


def test_result_not_worse_than_initial_population(small_set):
    config = LearnerConfig(family=FeatureKind.CHAIN, population_size=50,
                           generations=12, seed=11)
    dist = _uniform(small_set)
    best = search_best(config.family, dist, small_set, config)
    # the initial genomes are reconstructible from the per-candidate streams
    initial = [random_feature(config.family, random.Random(derive_seed(config.seed, i)))
               for i in range(config.population_size)]
    from boostdet.features import WindowStack, eval_batch
    stack = WindowStack.from_images([s.window for s in small_set])
    labels = np.array([s.label for s in small_set])
    initial_eps = []
    for f in initial:
        fired = eval_batch(f, stack)
        eps_plus = float(dist.weights[np.where(fired, 1, -1) != labels].sum())
        eps_minus = float(dist.weights[np.where(fired, 1, -1) == labels].sum())
        initial_eps.append(min(eps_plus, eps_minus))
    assert best.epsilon <= min(initial_eps) + 1e-15


def test_best_so_far_is_monotone(small_set):
    history = []
    config = LearnerConfig(family=FeatureKind.SYMMETRIC_HAAR, population_size=40,
                           generations=15, seed=13)
    search_best(config.family, _uniform(small_set), small_set, config,
                progress=lambda gen, best, mean: history.append((gen, best, mean)))
    bests = [b for _, b, _ in history]
    assert bests == sorted(bests, reverse=True) or all(
        b2 <= b1 + 1e-15 for b1, b2 in zip(bests, bests[1:]))
    assert len(history) >= 2


def test_epsilon_never_exceeds_half(rng):
    # adversarial labels: windows are pure noise, labels random
    windows = [rand_window(rng) for _ in range(40)]
    labels = [1 if rng.random() < 0.5 else -1 for _ in range(40)]
    labels[0], labels[1] = 1, -1
    samples = [LabeledSample.from_window(w, label) for w, label in zip(windows, labels)]
    for family in FeatureKind:
        config = LearnerConfig(family=family, population_size=20, generations=3,
                               seed=17)
        best = search_best(family, _uniform(samples), samples, config)
        assert best.epsilon <= 0.5 + 1e-12


def test_search_is_deterministic_and_worker_independent(small_set):
    base = LearnerConfig(family=FeatureKind.CONTROL_POINTS, population_size=40,
                         generations=8, seed=23)
    one = search_best(base.family, _uniform(small_set), small_set, base)
    two = search_best(base.family, _uniform(small_set), small_set, base)
    eight = search_best(base.family, _uniform(small_set), small_set,
                        replace(base, parallel_workers=8))
    assert one == two == eight


def test_candidate_validation():
    with pytest.raises(ValueError):
        Candidate(weak=None, epsilon=1.5)


def test_config_validation():
    with pytest.raises(ValueError):
        LearnerConfig(family=FeatureKind.HAAR, population_size=1)
    with pytest.raises(ValueError):
        LearnerConfig(family=FeatureKind.HAAR, generations=0)


def test_derive_seed_distinct():
    seeds = {derive_seed(42, n) for n in range(1000)}
    assert len(seeds) == 1000
