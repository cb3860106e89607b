"""Speed and stability objectives computed from a walking trace."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .genome import DomainError


@dataclass(frozen=True)
class StabilityWeights:
    alpha: float = 0.02

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")


def speed_fitness(trace) -> float:
    """Straight-line distance covered per minute (m/min)."""
    t = np.asarray(trace.t)
    pos = np.asarray(trace.position)
    if len(t) < 2:
        raise DomainError("speed needs at least two samples")
    duration = t[-1] - t[0]
    if duration <= 0:
        raise DomainError("trace has zero duration")
    return 60.0 * float(np.linalg.norm(pos[-1] - pos[0])) / duration


def population_std(samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("population_std of an empty sample")
    # mean(x**2) - mean(x)**2 in centred form; shifting by x[0] first makes
    # constant samples come out exactly zero
    d = x.ravel() - x.ravel()[0]
    return float(np.sqrt(max(0.0, np.mean((d - d.mean()) ** 2))))


def stability_fitness(trace, w: StabilityWeights = StabilityWeights()) -> float:
    """Negated weighted spread of acceleration and orientation; 0 is perfectly still."""
    acc = np.asarray(trace.acceleration)
    ang = np.asarray(trace.orientation)
    if len(acc) == 0:
        raise DomainError("empty trace")
    acc_term = sum(population_std(acc[:, j]) for j in range(3))
    ang_term = sum(population_std(ang[:, j]) for j in range(3))
    return -(w.alpha * acc_term + ang_term)
