"""Exact sampling of fractional Brownian motion on uniform grids.

Increments are synthesised as fractional Gaussian noise by circulant
embedding of their Toeplitz covariance (Davies-Harte) and summed. When the
embedding is not non-negative definite, the full increment covariance is
factorised instead and the path is flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .kernel import hurst
from .montecarlo import McEstimate, mc_estimate

EIG_TOL = 1e-10
CHOLESKY_JITTER = 1e-10
_MASK64 = (1 << 64) - 1


class EmbeddingError(RuntimeError):
    """Neither circulant embedding nor the Cholesky fallback produced a sampler."""


def splitmix64(state: int) -> int:
    """One step of the SplitMix64 output function."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed_base: int, i: int) -> int:
    """Seed of replication ``i``; depends only on (seed_base, i)."""
    return splitmix64((splitmix64(seed_base & _MASK64) + i) & _MASK64)


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    n_steps: int
    lookahead_steps: int = 0

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_steps < 2:
            raise ValueError("n_steps must be at least 2")
        if self.lookahead_steps < 0:
            raise ValueError("lookahead_steps must be non-negative")

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def total_steps(self) -> int:
        return self.n_steps + self.lookahead_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.total_steps + 1)

    def index(self, t: float) -> int:
        """Grid index of time ``t``; off-grid or out-of-range times raise."""
        k = t / self.dt
        i = int(round(k))
        if abs(k - i) > 1e-9 * max(1.0, abs(k)):
            raise ValueError(f"time {t} is not on the grid (dt={self.dt})")
        if not 0 <= i <= self.total_steps:
            raise ValueError(f"time {t} is outside the grid [0, {self.times[-1]}]")
        return i

    def steps(self, span: float) -> int:
        """Number of grid steps in a duration that must be a grid multiple."""
        k = span / self.dt
        i = int(round(k))
        if i < 1 or abs(k - i) > 1e-9 * max(1.0, k):
            raise ValueError(f"{span} is not a positive integer multiple of dt={self.dt}")
        return i


@dataclass
class FbmPath:
    grid: TimeGrid
    h: float
    values: np.ndarray
    seed: int
    method: str = "circulant"

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index(t)])


def fgn_autocovariance(n: int, h: float) -> np.ndarray:
    """gamma(k) for unit-step fractional Gaussian noise, k = 0..n-1."""
    k = np.arange(n, dtype=float)
    two_h = 2.0 * h
    return 0.5 * (np.abs(k + 1) ** two_h + np.abs(k - 1) ** two_h - 2 * k**two_h)


@lru_cache(maxsize=32)
def circulant_eigenvalues(n: int, h: float) -> np.ndarray:
    """Eigenvalues of the 2n circulant embedding of the n x n fGn covariance."""
    gam = fgn_autocovariance(n + 1, h)
    row = np.concatenate([gam[:n], gam[n : n + 1], gam[n - 1 : 0 : -1]])
    lam = np.fft.fft(row).real
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=8)
def _cholesky_factor(n: int, h: float) -> np.ndarray:
    cov = scipy.linalg.toeplitz(fgn_autocovariance(n, h))
    try:
        return scipy.linalg.cholesky(cov + CHOLESKY_JITTER * np.eye(n), lower=True)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError(
            f"increment covariance not PSD after regularisation (n={n}, H={h})"
        ) from exc


@dataclass
class _Sampler:
    n: int
    h: float
    method: str
    sqrt_lam: np.ndarray | None = field(default=None, repr=False)
    chol: np.ndarray | None = field(default=None, repr=False)


def _sampler(n: int, h: float, method: str = "auto") -> _Sampler:
    if method not in ("auto", "circulant", "cholesky"):
        raise ValueError(f"unknown method {method!r}")
    if method != "cholesky":
        lam = circulant_eigenvalues(n, h)
        if lam.min() >= -EIG_TOL:
            scale = np.sqrt(np.clip(lam, 0.0, None) / lam.size)
            return _Sampler(n, h, "circulant", sqrt_lam=scale)
        if method == "circulant":
            raise EmbeddingError(f"circulant embedding has eigenvalue {lam.min():.3e}")
    return _Sampler(n, h, "cholesky", chol=_cholesky_factor(n, h))


def _unit_fgn(sampler: _Sampler, rng: np.random.Generator) -> np.ndarray:
    if sampler.method == "circulant":
        m = sampler.sqrt_lam.size
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        return np.fft.fft(sampler.sqrt_lam * z).real[: sampler.n]
    return sampler.chol @ rng.standard_normal(sampler.n)


def generate_path(grid: TimeGrid, h, seed: int, method: str = "auto") -> FbmPath:
    """Sample B^H on ``grid`` (including its lookahead) from ``seed``.

    ``method='auto'`` uses circulant embedding and falls back to Cholesky
    when an embedding eigenvalue is below -1e-10; the chosen method is
    recorded on the returned path.
    """
    hv = hurst(h)
    n = grid.total_steps
    sampler = _sampler(n, hv, method)
    rng = np.random.Generator(np.random.PCG64(seed))
    incr = _unit_fgn(sampler, rng) * grid.dt**hv
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(incr, out=values[1:])
    return FbmPath(grid=grid, h=hv, values=values, seed=seed, method=sampler.method)


def generate_paths(grid: TimeGrid, h, seed_base: int, n_paths: int, start: int = 0):
    """Yield the replications ``start .. start+n_paths-1`` of a seed schedule."""
    for i in range(start, start + n_paths):
        yield generate_path(grid, h, derive_seed(seed_base, i))


def empirical_cov(paths, s: float, t: float) -> McEstimate:
    """Monte Carlo estimate of E[B_s B_t] over ``paths`` (a sequence of FbmPath)."""
    paths = list(paths)
    if len(paths) < 2:
        raise ValueError("need at least two paths")
    prods = [p.at(s) * p.at(t) for p in paths]
    return mc_estimate(prods)


def write_path_csv(path: FbmPath, out: str | Path) -> Path:
    """Dump a path as CSV (index, time, value) with a commented metadata header."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# H={path.h!r}",
        f"# seed={path.seed}",
        f"# dt={path.grid.dt!r}",
        f"# method={path.method}",
        "index,time,value",
    ]
    for i, (t, v) in enumerate(zip(path.times, path.values)):
        lines.append(f"{i},{t:.17g},{v:.17g}")
    out.write_text("\n".join(lines) + "\n")
    return out


def read_path_csv(src: str | Path) -> FbmPath:
    meta = {}
    rows = []
    for line in Path(src).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line and not line.startswith("index"):
            rows.append([float(x) for x in line.split(",")[1:]])
    arr = np.asarray(rows)
    dt = float(meta["dt"])
    n = len(arr) - 1
    grid = TimeGrid(t_max=dt * n, n_steps=n)
    if not math.isclose(grid.dt, dt, rel_tol=1e-12):
        raise ValueError("inconsistent dt in path file")
    return FbmPath(grid, float(meta["H"]), arr[:, 1], int(meta["seed"]), meta.get("method", "circulant"))
