"""Classical placement optimizers over the sum-SE objective.

All optimizers consume a SumSeObjective (an evaluation-counting callable)
and return an OptimizerResult whose trace records every improvement of the
best-so-far value, so different search strategies can be compared at equal
evaluation budgets.
"""

import itertools
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .config import ScenarioConfig
from .model import build_channels, build_geometry, sinr_and_se

DEFAULT_BUDGET_CAP = 1_000_000


class BudgetExceededError(RuntimeError):
    """Search space exceeds the allowed evaluation budget."""


class SumSeObjective:
    """Placement -> sum SE (bit/s/Hz), counting one evaluation per call."""

    def __init__(self, config: ScenarioConfig, geom=None, channels=None):
        config.validate()
        self.config = config
        self.geom = geom if geom is not None else build_geometry(config)
        self.channels = channels if channels is not None else build_channels(config, self.geom)
        self.evaluations = 0

    def __call__(self, placement) -> float:
        self.evaluations += 1
        return sinr_and_se(self.config, self.geom, self.channels, placement).sum_se

    def report(self, placement):
        """Full SEReport without touching the evaluation counter."""
        return sinr_and_se(self.config, self.geom, self.channels, placement)


@dataclass
class OptimizerResult:
    best_placement: Tuple[int, ...]
    best_value: float
    evaluations: int
    trace: List[Tuple[int, float]] = field(default_factory=list)  # (eval index, best so far)


class _BestTracker:
    """Keeps the first-seen maximizer and an improvement trace."""

    def __init__(self, objective):
        self.objective = objective
        self.start = objective.evaluations
        self.best_placement = None
        self.best_value = -np.inf
        self.trace = []

    def evaluate(self, placement) -> float:
        value = self.objective(placement)
        if value > self.best_value:
            self.best_value = value
            self.best_placement = tuple(int(n) for n in placement)
            self.trace.append((self.objective.evaluations - self.start, value))
        return value

    def result(self) -> OptimizerResult:
        return OptimizerResult(best_placement=self.best_placement,
                               best_value=self.best_value,
                               evaluations=self.objective.evaluations - self.start,
                               trace=self.trace)


def exhaustive_search(objective, num_aps: int, num_positions: int,
                      budget_cap: int = DEFAULT_BUDGET_CAP) -> OptimizerResult:
    """Global maximizer over all N^L placements.

    Ties break toward the lexicographically smallest placement (enumeration
    order is lexicographic and improvements are strict).
    """
    total = num_positions ** num_aps
    if total > budget_cap:
        raise BudgetExceededError(
            f"exhaustive search needs {total} evaluations, cap is {budget_cap}")
    tracker = _BestTracker(objective)
    for placement in itertools.product(range(1, num_positions + 1), repeat=num_aps):
        tracker.evaluate(placement)
    return tracker.result()


def random_search(objective, num_aps: int, num_positions: int, budget: int,
                  rng_seed: int = 0) -> OptimizerResult:
    """Best of ``budget`` i.i.d. uniform placements, reproducible from seed."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(rng_seed)
    tracker = _BestTracker(objective)
    for _ in range(budget):
        tracker.evaluate(rng.integers(1, num_positions + 1, size=num_aps))
    return tracker.result()


def greedy_coordinate_ascent(objective, num_aps: int, num_positions: int,
                             max_passes: int = 8) -> OptimizerResult:
    """Coordinate-wise sweeps from the all-ones placement.

    Each sweep visits APs in index order and sets n_l to the argmax over
    {1..N} with the other coordinates held fixed (ties -> smallest n_l);
    stops after a sweep that changes nothing, or after max_passes.
    """
    if max_passes < 1:
        raise ValueError("max_passes must be >= 1")
    tracker = _BestTracker(objective)
    current = np.ones(num_aps, dtype=np.int64)
    for _ in range(max_passes):
        changed = False
        for l in range(num_aps):
            best_n, best_val = None, -np.inf
            for n in range(1, num_positions + 1):
                candidate = current.copy()
                candidate[l] = n
                val = tracker.evaluate(candidate)
                if val > best_val:
                    best_n, best_val = n, val
            if best_n != current[l]:
                changed = True
                current[l] = best_n
        if not changed:
            break
    return tracker.result()


def fixed_baseline(objective, num_aps: int) -> OptimizerResult:
    """Single evaluation of the all-ones placement (fixed antennas)."""
    tracker = _BestTracker(objective)
    tracker.evaluate(np.ones(num_aps, dtype=np.int64))
    return tracker.result()
