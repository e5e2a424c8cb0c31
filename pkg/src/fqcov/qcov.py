"""Estimators of the weighted quadratic covariation [f(B^H), B^H]^(W)_t.

All sums run over grid cells [t_i, t_{i+1}) with t_i < t and are
aggregated with ``math.fsum``. The singular density 2H s^{2H-1} ds is
integrated exactly per cell through w_i = t_{i+1}^{2H} - t_i^{2H}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import FbmPath
from .functions import FunctionSpec
from .kernel import hermite_normal

FORMS = ("eps_limit", "riemann_sum", "closed_form")
FIRST_CELL = ("unit", "literal")


@dataclass(frozen=True)
class QcovEstimate:
    value: float
    form: str
    t: float
    eps_or_mesh: float

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown form {self.form!r}")


def cell_weights(path: FbmPath, k: int) -> np.ndarray:
    """w_i = t_{i+1}^{2H} - t_i^{2H} for the first ``k`` cells."""
    tt = path.times[: k + 1] ** (2 * path.h)
    return np.diff(tt)


def _window(path: FbmPath, eps: float, t: float):
    if not t > 0:
        raise ValueError("t must be positive")
    k = path.grid.index(t)
    m = path.grid.steps(eps)
    if k - 1 + m > path.grid.total_steps:
        raise ValueError(
            f"t + eps = {t + eps} exceeds the simulated grid; add lookahead_steps >= {k + m - 1 - path.grid.n_steps}"
        )
    return k, m


def _eps_terms(f: FunctionSpec, path: FbmPath, eps: float, t: float):
    """(f(B_{t_i+eps}), f(B_{t_i}), increment, scaled weight) per cell."""
    k, m = _window(path, eps, t)
    b = path.values
    lo, hi = b[:k], b[m : k + m]
    ts = path.times
    if f.time_dependent:
        f_hi, f_lo = f(hi, ts[m : k + m]), f(lo, ts[:k])
    else:
        f_hi, f_lo = f(hi), f(lo)
    w = cell_weights(path, k) / eps ** (2 * path.h)
    return np.asarray(f_hi, float), np.asarray(f_lo, float), hi - lo, w


def estimate_eps(f: FunctionSpec, path: FbmPath, eps: float, t: float) -> QcovEstimate:
    """eps^{-2H} sum (f(B_{t_i+eps}) - f(B_{t_i})) (B_{t_i+eps} - B_{t_i}) w_i."""
    if f.time_dependent:
        raise ValueError("f depends on time; use estimate_eps_td")
    f_hi, f_lo, db, w = _eps_terms(f, path, eps, t)
    return QcovEstimate(math.fsum((f_hi - f_lo) * db * w), "eps_limit", t, eps)


def estimate_eps_td(f: FunctionSpec, path: FbmPath, eps: float, t: float) -> QcovEstimate:
    """Time-dependent version with f(B_{t_i+eps}, t_i+eps) - f(B_{t_i}, t_i)."""
    f_hi, f_lo, db, w = _eps_terms(f, path, eps, t)
    return QcovEstimate(math.fsum((f_hi - f_lo) * db * w), "eps_limit", t, eps)


def estimate_decomposed(f: FunctionSpec, path: FbmPath, eps: float, t: float) -> tuple[float, float]:
    """(I+, I-) with I+ using f(B_{t_i+eps}) and I- using f(B_{t_i}); I+ - I- is estimate_eps."""
    f_hi, f_lo, db, w = _eps_terms(f, path, eps, t)
    return math.fsum(f_hi * db * w), math.fsum(f_lo * db * w)


def estimate_riemann(
    f: FunctionSpec,
    path: FbmPath,
    partition=None,
    t: float | None = None,
    first_cell: str = "unit",
) -> QcovEstimate:
    """2H sum_j Lambda_j^{2H-1} (f(B_{t_j}) - f(B_{t_{j-1}})) (B_{t_j} - B_{t_{j-1}}).

    ``partition`` is an increasing sequence of grid times starting at 0;
    by default every grid point up to ``t``. Lambda_j = t_j / (t_j - t_{j-1}).

    The cell touching 0 carries the factor 2H Lambda_1^{2H-1} = 2H only in
    the asymptotic reading of the sum; its exact weight mass is
    t_1^{2H} / t_1^{2H} = 1. ``first_cell='unit'`` (default) uses 1 there,
    ``'literal'`` keeps 2H.
    """
    if first_cell not in FIRST_CELL:
        raise ValueError(f"first_cell must be one of {FIRST_CELL}")
    if partition is None:
        if t is None:
            raise ValueError("give a partition or t")
        idx = np.arange(path.grid.index(t) + 1)
    else:
        part = np.asarray(partition, dtype=float)
        if part.ndim != 1 or part.size < 2:
            raise ValueError("partition needs at least two points")
        if np.any(np.diff(part) <= 0):
            raise ValueError("partition must be strictly increasing")
        if part[0] != 0.0:
            raise ValueError("partition must start at 0")
        idx = np.array([path.grid.index(x) for x in part])
    h = path.h
    tt = path.times[idx]
    b = path.values[idx]
    fb = np.asarray(f(b), float)
    lam = tt[1:] / np.diff(tt)
    coef = 2 * h * lam ** (2 * h - 1)
    if first_cell == "unit":
        coef[0] = 1.0
    value = math.fsum(coef * np.diff(fb) * np.diff(b))
    mesh = float(np.max(np.diff(tt)))
    return QcovEstimate(value, "riemann_sum", float(tt[-1]), mesh)


def closed_form(f: FunctionSpec, path: FbmPath, t: float) -> QcovEstimate:
    """sum_i (d/dx f)(B_{t_i}, t_i) w_i, the left-point discretisation of 2H int f'(B_s) s^{2H-1} ds."""
    df = f.derivative()
    if df is None:
        raise ValueError(f"{f.kind} has no registered derivative")
    if not t > 0:
        raise ValueError("t must be positive")
    k = path.grid.index(t)
    b = path.values[:k]
    vals = df(b, path.times[:k]) if df.time_dependent else df(b)
    value = math.fsum(np.asarray(vals, float) * cell_weights(path, k))
    return QcovEstimate(value, "closed_form", t, path.grid.dt)


def expected_closed_form(f: FunctionSpec, h: float, t: float, nodes: int = 64) -> float:
    """2H int_0^t E[f'(B_s)] s^{2H-1} ds for time-independent smooth f.

    With u = s^{2H} this is int_0^{t^{2H}} E f'(sqrt(u) Z) du, whose
    integrand is smooth in u: Gauss-Legendre in u, Gauss-Hermite in Z.
    """
    df = f.derivative()
    if df is None:
        raise ValueError(f"{f.kind} has no registered derivative")
    z, wz = hermite_normal(64)
    top = t ** (2 * h)
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * top * (x + 1.0)
    g = np.array([float(wz @ df(math.sqrt(ui) * z)) for ui in u])
    return 0.5 * top * math.fsum(w * g)
