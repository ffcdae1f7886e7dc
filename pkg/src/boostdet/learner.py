"""Evolutionary weak-learner search over one feature family.

A mu+lambda loop: keep the best quarter of the population, refill with
mutated elites plus a trickle of fresh random genomes, stop on stall or
generation budget. Every genome is drawn from its own RNG stream derived
from (seed, candidate index), and aggregation order is fixed by candidate
index, so results do not depend on the worker count.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .boosting import LabeledSample, WeakClassifier, WeightDistribution
from .features import (
    CANONICAL_H,
    CANONICAL_W,
    MAX_CHAIN_LEN,
    MAX_CLASS_POINTS,
    MIN_CHAIN_LEN,
    ChainFeature,
    ControlPointsFeature,
    Feature,
    FeatureKind,
    HaarFeature,
    SymmetricHaarFeature,
    WindowStack,
    eval_batch,
)
from .imaging import Rect

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# beyond these ranges the features are constant on 8-bit data
HAAR_THRESHOLD_MAX = 8.0
SEPARATION_MAX = 128
SYM_TOL_MAX = 4.0
MID_MARGIN_MAX = 4.0
# the symmetric family must clear three thresholds at once, so its
# per-pair thresholds start low and let mutation push them up
SYM_THRESHOLD_MAX = 2.0

_NEIGHBORS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


def derive_seed(seed: int, n: int) -> int:
    """Decorrelated 64-bit stream id for sub-stream ``n`` of ``seed``."""
    return (seed ^ ((n * _GAMMA) & _MASK64)) & _MASK64


@dataclass(frozen=True)
class LearnerConfig:
    family: FeatureKind
    population_size: int = 100
    generations: int = 30
    stall_limit: int = 8
    mutations_per_child: tuple[int, int] = (1, 3)
    seed: int = 0
    parallel_workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")


@dataclass(frozen=True)
class Candidate:
    """A weak classifier and its weighted error under the search distribution."""

    weak: WeakClassifier
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")


# ---------------------------------------------------------------------------
# random genomes
# ---------------------------------------------------------------------------

def _random_rect(rng: random.Random, max_w: int = CANONICAL_W,
                 max_h: int = CANONICAL_H) -> Rect:
    w = rng.randint(1, max_w)
    h = rng.randint(1, max_h)
    return Rect(x=rng.randint(0, max_w - w), y=rng.randint(0, max_h - h), w=w, h=h)


def _random_mid_rect(rng: random.Random) -> Rect:
    # center within 1px of the axis: CANONICAL_W - 2 <= 2x + w <= CANONICAL_W + 2
    w = rng.randint(1, CANONICAL_W)
    lo = max(0, -(-(CANONICAL_W - 2 - w) // 2))
    hi = min(CANONICAL_W - w, (CANONICAL_W + 2 - w) // 2)
    h = rng.randint(1, CANONICAL_H)
    return Rect(x=rng.randint(lo, hi), y=rng.randint(0, CANONICAL_H - h), w=w, h=h)


def _random_points(rng: random.Random, count: int) -> tuple[tuple[int, int], ...]:
    cells = rng.sample(range(CANONICAL_W * CANONICAL_H), count)
    return tuple((c % CANONICAL_W, c // CANONICAL_W) for c in cells)


def _random_chain(rng: random.Random) -> ChainFeature:
    length = rng.randint(MIN_CHAIN_LEN, MAX_CHAIN_LEN)
    for _ in range(100):
        x = rng.randint(0, CANONICAL_W - 1)
        y = rng.randint(0, CANONICAL_H - 1)
        pts = [(x, y)]
        while len(pts) < length:
            cx, cy = pts[-1]
            options = [(cx + dx, cy + dy) for dx, dy in _NEIGHBORS
                       if 0 <= cx + dx < CANONICAL_W and 0 <= cy + dy < CANONICAL_H
                       and (cx + dx, cy + dy) not in pts]
            if not options:
                break
            pts.append(rng.choice(options))
        if len(pts) == length:
            tags = [rng.random() < 0.5 for _ in pts]
            if all(tags) or not any(tags):
                tags[rng.randrange(length)] = not tags[0]
            return ChainFeature(chain=tuple((px, py, t) for (px, py), t in zip(pts, tags)),
                                separation=rng.randint(1, SEPARATION_MAX))
    raise RuntimeError("could not grow a chain (should not happen on a 32x24 grid)")


def random_feature(family: FeatureKind, rng: random.Random) -> Feature:
    """Draw a feature satisfying all invariants of ``family``."""
    if family is FeatureKind.HAAR:
        return HaarFeature(rect_a=_random_rect(rng), rect_b=_random_rect(rng),
                           threshold=rng.uniform(0.0, HAAR_THRESHOLD_MAX))
    if family is FeatureKind.CONTROL_POINTS:
        return ControlPointsFeature(
            pos_points=_random_points(rng, rng.randint(1, MAX_CLASS_POINTS)),
            neg_points=_random_points(rng, rng.randint(1, MAX_CLASS_POINTS)),
            separation=rng.randint(1, SEPARATION_MAX))
    if family is FeatureKind.SYMMETRIC_HAAR:
        sym_tol = 0.0
        while sym_tol == 0.0:
            sym_tol = rng.uniform(0.0, SYM_TOL_MAX)
        return SymmetricHaarFeature(
            left_a=_random_rect(rng, max_w=CANONICAL_W // 2),
            left_b=_random_rect(rng, max_w=CANONICAL_W // 2),
            mid_a=_random_mid_rect(rng), mid_b=_random_mid_rect(rng),
            t_left=rng.uniform(0.0, SYM_THRESHOLD_MAX),
            t_right=rng.uniform(0.0, SYM_THRESHOLD_MAX),
            t_mid=rng.uniform(0.0, SYM_THRESHOLD_MAX),
            sym_tol=sym_tol, mid_margin=rng.uniform(0.0, MID_MARGIN_MAX))
    if family is FeatureKind.CHAIN:
        return _random_chain(rng)
    raise ValueError(f"unknown family {family}")


# ---------------------------------------------------------------------------
# mutation moves
# ---------------------------------------------------------------------------

_MAX_MUTATE_TRIES = 25


def _nudged_rect(r: Rect, rng: random.Random) -> Rect:
    field = rng.choice(("x", "y", "w", "h"))
    delta = rng.choice((-1, 1))
    return replace(r, **{field: getattr(r, field) + delta})


def _mutate_haar(f: HaarFeature, rng: random.Random) -> HaarFeature:
    move = rng.randrange(3)
    if move == 0:
        return HaarFeature(rect_a=_nudged_rect(f.rect_a, rng), rect_b=f.rect_b,
                           threshold=f.threshold)
    if move == 1:
        return HaarFeature(rect_a=f.rect_a, rect_b=_nudged_rect(f.rect_b, rng),
                           threshold=f.threshold)
    return HaarFeature(rect_a=f.rect_a, rect_b=f.rect_b,
                       threshold=f.threshold * rng.choice((0.9, 1.1)))


def _mutate_control_points(f: ControlPointsFeature,
                           rng: random.Random) -> ControlPointsFeature:
    pos, neg = list(f.pos_points), list(f.neg_points)
    sep = f.separation
    move = rng.randrange(4)
    side = rng.choice((pos, neg))
    if move == 0:
        i = rng.randrange(len(side))
        dx, dy = rng.choice(_NEIGHBORS)
        side[i] = (side[i][0] + dx, side[i][1] + dy)
    elif move == 1:
        side.append((rng.randint(0, CANONICAL_W - 1), rng.randint(0, CANONICAL_H - 1)))
    elif move == 2:
        side.pop(rng.randrange(len(side)))
    else:
        sep = min(255, max(1, sep + rng.choice((-1, 1)) * rng.randint(1, 8)))
    return ControlPointsFeature(pos_points=tuple(pos), neg_points=tuple(neg),
                                separation=sep)


def _mutate_symmetric(f: SymmetricHaarFeature,
                      rng: random.Random) -> SymmetricHaarFeature:
    if rng.randrange(2) == 0:
        which = rng.choice(("left_a", "left_b", "mid_a", "mid_b"))
        return replace(f, **{which: _nudged_rect(getattr(f, which), rng)})
    which = rng.choice(("t_left", "t_right", "t_mid", "sym_tol", "mid_margin"))
    return replace(f, **{which: getattr(f, which) * rng.choice((0.9, 1.1))})


def _mutate_chain(f: ChainFeature, rng: random.Random) -> ChainFeature:
    chain = list(f.chain)
    sep = f.separation
    move = rng.randrange(5)
    if move == 0:  # move an endpoint next to its neighbor
        end = rng.choice((0, len(chain) - 1))
        anchor = chain[1] if end == 0 else chain[-2]
        occupied = {(x, y) for x, y, _ in chain}
        options = [(anchor[0] + dx, anchor[1] + dy) for dx, dy in _NEIGHBORS
                   if (anchor[0] + dx, anchor[1] + dy) not in occupied]
        nx, ny = rng.choice(options) if options else chain[end][:2]
        chain[end] = (nx, ny, chain[end][2])
    elif move == 1:  # extend at an end
        end = rng.choice((0, len(chain) - 1))
        ax, ay, _ = chain[end]
        occupied = {(x, y) for x, y, _ in chain}
        options = [(ax + dx, ay + dy) for dx, dy in _NEIGHBORS
                   if (ax + dx, ay + dy) not in occupied]
        if options:
            nx, ny = rng.choice(options)
            new_pt = (nx, ny, rng.random() < 0.5)
            chain = [new_pt] + chain if end == 0 else chain + [new_pt]
    elif move == 2:  # shrink at an end
        chain.pop(rng.choice((0, len(chain) - 1)))
    elif move == 3:  # retag one point
        i = rng.randrange(len(chain))
        x, y, t = chain[i]
        chain[i] = (x, y, not t)
    else:
        sep = min(255, max(1, sep + rng.choice((-1, 1)) * rng.randint(1, 8)))
    return ChainFeature(chain=tuple(chain), separation=sep)


_MUTATORS: dict[type, Callable] = {
    HaarFeature: _mutate_haar,
    ControlPointsFeature: _mutate_control_points,
    SymmetricHaarFeature: _mutate_symmetric,
    ChainFeature: _mutate_chain,
}


def mutate(feature: Feature, rng: random.Random) -> Feature:
    """One random move on ``feature``; invalid proposals are re-drawn.

    Falls back to the unchanged input when every retry lands on an
    invalid genome.
    """
    mutator = _MUTATORS[type(feature)]
    for _ in range(_MAX_MUTATE_TRIES):
        try:
            return mutator(feature, rng)
        except (ValueError, IndexError):
            continue
    return feature


# ---------------------------------------------------------------------------
# the search itself
# ---------------------------------------------------------------------------

def _evaluate(feature: Feature, stack: WindowStack, weights: np.ndarray,
              labels: np.ndarray) -> Candidate:
    fired = eval_batch(feature, stack)
    mistakes_plus = np.where(fired, 1, -1) != labels
    eps_plus = float(weights[mistakes_plus].sum())
    eps_minus = float(weights[~mistakes_plus].sum())
    if eps_minus < eps_plus:
        return Candidate(weak=WeakClassifier(feature=feature, polarity=-1),
                         epsilon=eps_minus)
    return Candidate(weak=WeakClassifier(feature=feature, polarity=1),
                     epsilon=eps_plus)


def search_best(family: FeatureKind, dist: WeightDistribution,
                samples: Sequence[LabeledSample], config: LearnerConfig,
                stack: WindowStack | None = None,
                seed_features: Sequence[Feature] | None = None,
                progress: Callable[[int, float, float], None] | None = None) -> Candidate:
    """Best weak classifier found for ``family`` under ``dist``.

    Both polarities are scored for every genome, so the returned error
    never exceeds 0.5. ``seed_features`` are planted into the initial
    population (ahead of the random draws), ``progress`` receives
    (generation, best_epsilon, mean_epsilon) once per generation.
    """
    if len(dist) != len(samples):
        raise ValueError(f"{len(dist)} weights for {len(samples)} samples")
    if stack is None:
        stack = WindowStack.from_images([s.window for s in samples])
    weights = dist.weights
    labels = np.array([s.label for s in samples])

    # every candidate gets a unique id; its RNG stream derives from the id,
    # and ties in epsilon resolve by id, so the search is reproducible and
    # independent of the worker count
    next_id = 0

    def new_id() -> int:
        nonlocal next_id
        next_id += 1
        return next_id - 1

    def stream(candidate_id: int) -> random.Random:
        return random.Random(derive_seed(config.seed, candidate_id))

    def evaluate_all(features: list[Feature]) -> list[Candidate]:
        if config.parallel_workers > 1 and len(features) > 1:
            with ThreadPoolExecutor(max_workers=config.parallel_workers) as pool:
                return list(pool.map(
                    lambda f: _evaluate(f, stack, weights, labels), features))
        return [_evaluate(f, stack, weights, labels) for f in features]

    genomes: list[tuple[int, Feature]] = [
        (new_id(), f) for f in list(seed_features or [])[:config.population_size]]
    while len(genomes) < config.population_size:
        cid = new_id()
        genomes.append((cid, random_feature(family, stream(cid))))
    evaluated = evaluate_all([g for _, g in genomes])
    population = [(cid, cand) for (cid, _), cand in zip(genomes, evaluated)]

    elite_n = max(1, config.population_size // 4)
    fresh_n = max(1, round(config.population_size * 0.10))
    child_n = config.population_size - elite_n
    lo, hi = config.mutations_per_child

    def report(generation: int, best_eps: float) -> None:
        if progress is not None:
            mean_eps = sum(c.epsilon for _, c in population) / len(population)
            progress(generation, best_eps, mean_eps)

    best = min(population, key=lambda ic: (ic[1].epsilon, ic[0]))[1]
    report(0, best.epsilon)
    stall = 0

    for gen in range(1, config.generations + 1):
        if best.epsilon == 0.0 or stall >= config.stall_limit:
            break

        population.sort(key=lambda ic: (ic[1].epsilon, ic[0]))
        elites = population[:elite_n]

        offspring: list[tuple[int, Feature]] = []
        for k in range(child_n):
            cid = new_id()
            rng = stream(cid)
            if k < fresh_n:
                offspring.append((cid, random_feature(family, rng)))
            else:
                child = elites[(k - fresh_n) % elite_n][1].weak.feature
                for _ in range(rng.randint(lo, hi)):
                    child = mutate(child, rng)
                offspring.append((cid, child))

        evaluated = evaluate_all([g for _, g in offspring])
        population = elites + [(cid, cand)
                               for (cid, _), cand in zip(offspring, evaluated)]

        gen_best = min(population, key=lambda ic: (ic[1].epsilon, ic[0]))[1]
        if gen_best.epsilon < best.epsilon:
            best = gen_best
            stall = 0
        else:
            stall += 1
        report(gen, best.epsilon)

    return best
