"""Gaussian-weighted norms ||f||_H and ||f||_H*.

With x = s^H u the inner x-integral becomes s^H g(s), where
g(s) = E|f(s^H Z, s)|^2, so

    ||f||^2 terms = int_0^T s^{2H-1} g(s) ds  and  int_0^T s^H (T-s)^{H-1} g(s) ds.

g is taken in closed form when the catalog provides it, by Gauss-Hermite
for smooth f, and by piecewise Gauss-Legendre cut at the breakpoints
otherwise. The outer integrals use composite Gauss-Legendre panels whose
endpoint panels carry the algebraic singular weight exactly through
Gauss-Jacobi rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .functions import FunctionSpec
from .kernel import hermite_normal, hurst

N_SUB = 256
PANEL_NODES = 4
DEPTH = 40
U_MAX = 9.0


@dataclass(frozen=True)
class NormValue:
    value: float
    abs_error_estimate: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


INFINITE = NormValue(math.inf, math.inf)


def second_moment(f: FunctionSpec, sigma: float, s: float | None = None) -> float:
    """E|f(sigma Z, s)|^2 for Z standard normal."""
    exact = f.gaussian_second_moment(sigma, s)
    if exact is not None:
        return exact
    bp = f.breakpoints(s)
    if bp.size == 0:
        z, w = hermite_normal(64)
        return float(w @ np.abs(f(sigma * z, s)) ** 2)
    return _piecewise_moment(f, sigma, s, bp)


@lru_cache(maxsize=4)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _piecewise_moment(f, sigma, s, bp, nodes=16):
    cuts = bp / sigma
    cuts = cuts[(cuts > -U_MAX) & (cuts < U_MAX)]
    grid = np.unique(np.concatenate([np.linspace(-U_MAX, U_MAX, 19), cuts]))
    lo, hi = grid[:-1], grid[1:]
    gx, gw = _legendre(nodes)
    half = 0.5 * (hi - lo)
    u = (lo[:, None] + half[:, None] * (gx + 1.0)).ravel()
    w = (half[:, None] * gw).ravel()
    dens = np.exp(-0.5 * u**2) / math.sqrt(2 * math.pi)
    vals = np.abs(f(sigma * u, s)) ** 2
    return float(np.sum(w * dens * vals))


def _g(f, h, s_nodes, time_dependent):
    return np.array([second_moment(f, s**h, s if time_dependent else None) for s in s_nodes])


def _graded_panels(width: float, depth: int):
    """Panels [w 2^-(k+1), w 2^-k], k < depth, covering (w 2^-depth, w]."""
    right = width * 0.5 ** np.arange(depth)
    return right / 2, right


def _terms(f: FunctionSpec, t_max: float, h: float, n_sub: int, depth: int, time_dependent: bool):
    """(first term, second term) of the squared norm.

    Uniform panels on [w, T - w], a geometrically graded left panel so that
    algebraic behaviour of g at 0 is resolved, and Gauss-Jacobi rules on
    the innermost left piece and the right panel.
    """
    width = t_max / n_sub
    gx, gw = _legendre(PANEL_NODES)
    lo = np.concatenate([width * np.arange(1, n_sub - 1), _graded_panels(width, depth)[0]])
    hi = np.concatenate([width * np.arange(2, n_sub), _graded_panels(width, depth)[1]])
    half = 0.5 * (hi - lo)
    s_int = (lo[:, None] + half[:, None] * (gx + 1.0)).ravel()
    w_int = (half[:, None] * gw).ravel()
    g_int = _g(f, h, s_int, time_dependent)
    t1 = math.fsum(w_int * s_int ** (2 * h - 1) * g_int)
    t2 = math.fsum(w_int * s_int**h * (t_max - s_int) ** (h - 1) * g_int)

    # innermost piece [0, d]: weights s^{2H-1} and s^H absorbed by Gauss-Jacobi
    d = width * 0.5**depth
    xj, wj = roots_jacobi(PANEL_NODES, 0.0, 2 * h - 1)
    s_l = 0.5 * d * (xj + 1.0)
    t1 += (0.5 * d) ** (2 * h) * float(np.sum(wj * _g(f, h, s_l, time_dependent)))
    xj, wj = roots_jacobi(PANEL_NODES, 0.0, h)
    s_l = 0.5 * d * (xj + 1.0)
    t2 += (0.5 * d) ** (h + 1) * float(np.sum(wj * (t_max - s_l) ** (h - 1) * _g(f, h, s_l, time_dependent)))

    # right panel [T - w, T]: weight (T-s)^{H-1}
    a = t_max - width
    s_r = a + 0.5 * width * (gx + 1.0)
    t1 += float(np.sum(0.5 * width * gw * s_r ** (2 * h - 1) * _g(f, h, s_r, time_dependent)))
    xj, wj = roots_jacobi(PANEL_NODES, h - 1, 0.0)
    s_r = a + 0.5 * width * (xj + 1.0)
    t2 += (0.5 * width) ** h * float(np.sum(wj * s_r**h * _g(f, h, s_r, time_dependent)))
    return t1, t2


def _norm_from_terms(t1, t2):
    if not (math.isfinite(t1) and math.isfinite(t2)):
        return math.inf
    return math.sqrt(max(t1, 0.0)) + math.sqrt(max(t2, 0.0))


def _evaluate(f, t_max, h, n_sub, time_dependent) -> NormValue:
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_sub < 2:
        raise ValueError("need at least two panels")
    coarse = _norm_from_terms(*_terms(f, t_max, h, n_sub, DEPTH, time_dependent))
    fine = _norm_from_terms(*_terms(f, t_max, h, 2 * n_sub, DEPTH + 20, time_dependent))
    if not (math.isfinite(coarse) and math.isfinite(fine)):
        return INFINITE
    err = abs(fine - coarse)
    if fine > 0 and err > 1e-3 * fine:
        # slow or absent convergence: one more level decides
        finer = _norm_from_terms(*_terms(f, t_max, h, 4 * n_sub, DEPTH + 40, time_dependent))
        err2 = abs(finer - fine)
        if not math.isfinite(finer) or err2 > 0.6 * err:
            return INFINITE
        return NormValue(finer, err2)
    return NormValue(fine, err)


def norm_H(f: FunctionSpec, t_max: float, h, n_sub: int = N_SUB) -> NormValue:
    """||f||_H for a time-independent catalog function."""
    if f.time_dependent:
        raise ValueError("norm_H takes a time-independent function; use norm_H_star")
    return _evaluate(f, float(t_max), hurst(h), n_sub, False)


def norm_H_star(f: FunctionSpec, t_max: float, h, n_sub: int = N_SUB) -> NormValue:
    """||f||_H* for f(x, s); equals norm_H when f does not depend on s."""
    return _evaluate(f, float(t_max), hurst(h), n_sub, f.time_dependent)


def norm_H_constant_exact(t_max: float, h) -> float:
    """Closed form of ||1||_H: sqrt(T^2H / 2H) + sqrt(T^2H B(H+1, H))."""
    hv = hurst(h)
    beta = math.gamma(hv + 1) * math.gamma(hv) / math.gamma(2 * hv + 1)
    return math.sqrt(t_max ** (2 * hv) / (2 * hv)) + math.sqrt(t_max ** (2 * hv) * beta)
