"""Seeded randomized hyperparameter search."""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.hi >= self.lo or (self.log and self.lo <= 0):
            raise ValueError("invalid continuous range")

    def draw(self, rng):
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int  # inclusive
    log: bool = False

    def __post_init__(self):
        if self.hi < self.lo or (self.log and self.lo <= 0):
            raise ValueError("invalid integer range")

    def draw(self, rng):
        if self.log:
            v = math.exp(rng.uniform(math.log(self.lo), math.log(self.hi + 1)))
            return int(min(max(math.floor(v), self.lo), self.hi))
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self):
        if not self.values:
            raise ValueError("empty choice")

    def draw(self, rng):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class SearchSpace:
    params: dict
    budget: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")

    def sample(self, rng):
        # sorted keys: draw order must not depend on dict construction order
        return {name: self.params[name].draw(rng) for name in sorted(self.params)}


@dataclass(frozen=True)
class Trial:
    config: dict
    score: float
    error: str = None

    @property
    def failed(self):
        return self.error is not None


class SearchFailed(RuntimeError):
    pass


def randomized_search(space: SearchSpace, objective: Callable):
    """Evaluate ``space.budget`` seeded draws and return ``(best_config, trace)``.

    A draw whose objective raises, or returns a non-finite score, is recorded
    as failed and the search continues. Ties keep the earliest draw.
    """
    rng = np.random.default_rng(space.seed)
    trace = []
    for i in range(space.budget):
        cfg = space.sample(rng)
        try:
            score = float(objective(cfg))
            err = None if math.isfinite(score) else "non-finite score"
        except Exception as exc:  # noqa: BLE001 - any objective failure is a failed draw
            score, err = math.inf, f"{type(exc).__name__}: {exc}"
        if err:
            log.warning("search draw %d failed: %s", i, err)
            score = math.inf
        trace.append(Trial(cfg, score, err))
    ok = [t for t in trace if not t.failed]
    if not ok:
        raise SearchFailed("every search draw failed")
    best = min(ok, key=lambda t: t.score)
    return best.config, tuple(trace)
