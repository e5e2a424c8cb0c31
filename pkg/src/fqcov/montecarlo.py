"""Order-independent Monte Carlo aggregation and replication fan-out."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int
    seed_base: int | None = None

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error

    def z(self, target: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.value == target else math.inf
        return (self.value - target) / self.std_error


def mc_estimate(samples, seed_base: int | None = None) -> McEstimate:
    """Mean and standard error of i.i.d. samples.

    Uses exactly rounded sums, so the result does not depend on the order
    in which samples were produced.
    """
    xs = [float(x) for x in np.asarray(samples, dtype=float).ravel()]
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two samples for a standard error")
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return McEstimate(value=mean, std_error=math.sqrt(var / n), n=n, seed_base=seed_base)


def _chunks(n: int, parts: int):
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def replicate(fn, n_reps: int, workers: int = 1, args: tuple = ()) -> np.ndarray:
    """Evaluate ``fn(start, stop, *args)`` over replication ranges.

    ``fn`` must return an array whose first axis indexes replications
    ``start .. stop-1``. Results are stitched back in replication order,
    so the output is identical for any worker count. ``fn`` must be a
    module-level callable when ``workers > 1``.
    """
    ranges = _chunks(n_reps, workers if workers > 1 else 1)
    if workers <= 1 or len(ranges) == 1:
        parts = [fn(a, b, *args) for a, b in ranges]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(fn, a, b, *args) for a, b in ranges]
            parts = [f.result() for f in futures]
    return np.concatenate([np.asarray(p, dtype=float) for p in parts], axis=0)
