"""Weighted local time of fBm and the identities built on it.

L^H(x, t) = 2H int_0^t delta(B_s - x) s^{2H-1} ds is approximated by the
window occupation (1 / 2b) sum_{t_i < t} 1{|B_{t_i} - x| < b} w_i with
w_i = t_{i+1}^{2H} - t_i^{2H}. The unweighted local time uses w_i = dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .engine import FbmPath, TimeGrid, derive_seed, generate_path
from .functions import Curve, FunctionSpec, as_step
from .kernel import hurst
from .montecarlo import McEstimate, mc_estimate, replicate
from .qcov import cell_weights

BANDWIDTH_FACTOR = 0.02
N_LEVELS = 200
LEVEL_SPAN = 4.0


@dataclass(frozen=True)
class LocalTimeEstimate:
    x: float
    t: float
    value: float
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def default_bandwidth(t_max: float, h: float) -> float:
    return BANDWIDTH_FACTOR * t_max**h


def default_level_grid(t_max: float, h: float, n_levels: int = N_LEVELS) -> np.ndarray:
    """Uniform levels on +-4 t^H, wide enough for nearly every path."""
    r = LEVEL_SPAN * t_max**h
    return np.linspace(-r, r, n_levels)


def _check_bw(bandwidth):
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")


def _cells(path: FbmPath, t: float, weighted: bool):
    k = path.grid.index(t)
    w = cell_weights(path, k) if weighted else np.full(k, path.grid.dt)
    return path.values[:k], w


def weighted_local_time(path: FbmPath, x: float, t: float, bandwidth: float) -> LocalTimeEstimate:
    _check_bw(bandwidth)
    b, w = _cells(path, t, True)
    hit = np.abs(b - x) < bandwidth
    value = math.fsum(w[hit]) / (2 * bandwidth)
    return LocalTimeEstimate(float(x), float(t), value, float(bandwidth))


def local_time_process(path: FbmPath, x: float, bandwidth: float, t: float | None = None, weighted: bool = True) -> np.ndarray:
    """Running values L(x, t_1), ..., L(x, t_k); non-decreasing by construction."""
    _check_bw(bandwidth)
    b, w = _cells(path, path.grid.t_max if t is None else t, weighted)
    return np.cumsum(np.where(np.abs(b - x) < bandwidth, w, 0.0)) / (2 * bandwidth)


def local_time_profile(path: FbmPath, levels, t: float, bandwidth: float, weighted: bool = True) -> np.ndarray:
    """L(x, t) at every level in ``levels`` in one pass over the sorted path."""
    _check_bw(bandwidth)
    b, w = _cells(path, t, weighted)
    order = np.argsort(b, kind="stable")
    bs = b[order]
    cum = np.concatenate([[0.0], np.cumsum(w[order])])
    x = np.asarray(levels, dtype=float)
    # strict window: x - bw < B < x + bw
    lo = np.searchsorted(bs, x - bandwidth, side="right")
    hi = np.searchsorted(bs, x + bandwidth, side="left")
    return np.maximum(cum[hi] - cum[np.minimum(lo, hi)], 0.0) / (2 * bandwidth)


def expected_local_time(x: float, t: float, h) -> float:
    """E L^H(x, t) = 2H int_0^t phi(x / s^H) s^{H-1} ds."""
    hv = hurst(h)
    if x == 0:
        return math.sqrt(2 / math.pi) * t**hv
    # substitute u = s^H: 2 int_0^{t^H} phi(x / u) du
    val, _ = integrate.quad(lambda u: norm.pdf(x / u), 0.0, t**hv, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2 * val


def integral_against_local_time(
    f: FunctionSpec,
    path: FbmPath,
    t: float,
    bandwidth: float,
    level_grid=None,
) -> float:
    """int f(x) L^H(dx, t) = sum_j f_j [L(a_j, t) - L(a_{j-1}, t)].

    Step-type f is used as is. Other f are replaced by the step function
    equal to f(x_j) on (x_{j-1}, x_j] over ``level_grid`` and constant
    beyond its ends; L vanishes at +-infinity.
    """
    if f.time_dependent:
        raise ValueError("use integral_against_local_time_td for f(x, s)")
    rep = as_step(f)
    if rep is None:
        x = default_level_grid(path.grid.t_max, path.h) if level_grid is None else np.asarray(level_grid, float)
        fx = np.asarray(f(x), float)
        a = np.concatenate([[-np.inf], x, [np.inf]])
        lv = np.concatenate([fx, [fx[-1]]])
    else:
        a, lv = rep
    finite = np.isfinite(a)
    lt = np.zeros(a.size)
    lt[finite] = local_time_profile(path, a[finite], t, bandwidth)
    return math.fsum(lv * np.diff(lt))


def integral_against_local_time_td(
    f: FunctionSpec,
    path: FbmPath,
    t: float,
    bandwidth: float,
    level_grid=None,
    time_bin: int = 1,
) -> float:
    """int int f(x, s) L^H(dx, ds) by freezing f at the start of each time bin.

    On a bin of ``time_bin`` cells f(., s_j) is taken as the step function
    f(x_l, s_j) on (x_{l-1}, x_l], and paired with the local time increment
    of that bin.
    """
    _check_bw(bandwidth)
    x = default_level_grid(path.grid.t_max, path.h) if level_grid is None else np.asarray(level_grid, float)
    b, w = _cells(path, t, True)
    total = []
    for j0 in range(0, b.size, time_bin):
        sl = slice(j0, min(j0 + time_bin, b.size))
        s_j = path.times[j0]
        fx = np.asarray(f(x, np.full(x.shape, s_j)), float)
        hit = np.abs(b[sl, None] - x[None, :]) < bandwidth
        dl = (w[sl, None] * hit).sum(axis=0) / (2 * bandwidth)
        # L is zero at -inf and +inf
        total.append(fx[0] * dl[0] + math.fsum(fx[1:] * np.diff(dl)) - fx[-1] * dl[-1])
    return math.fsum(total)


def occupation_check(
    path: FbmPath,
    phi: FunctionSpec,
    t: float,
    bandwidth: float | None = None,
    level_grid=None,
) -> tuple[float, float]:
    """(int_0^t phi(B_s, s) ds, int int phi(x, s) L(x, ds) dx) with the unweighted L.

    The space integral sums phi(x_l, t_i) dt / (2b) over levels x_l in the
    window of B_{t_i}, times the level spacing. The default bandwidth is
    twice the spacing.
    """
    x = default_level_grid(path.grid.t_max, path.h) if level_grid is None else np.asarray(level_grid, float)
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("level_grid must be strictly increasing")
    # cell widths around each level
    mids = 0.5 * (x[1:] + x[:-1])
    dx = np.diff(np.concatenate([[x[0] - (mids[0] - x[0])], mids, [x[-1] + (x[-1] - mids[-1])]]))
    bw = 2 * float(np.median(np.diff(x))) if bandwidth is None else bandwidth
    _check_bw(bw)
    k = path.grid.index(t)
    b = path.values[:k]
    s = path.times[:k]
    dt = path.grid.dt

    def ph(xx, ss):
        return np.asarray(phi(xx, ss) if phi.time_dependent else phi(xx), float) * np.ones_like(xx)

    direct = math.fsum(ph(b, s) * dt)
    lo = np.searchsorted(x, b - bw, side="right")
    hi = np.searchsorted(x, b + bw, side="left")
    width = int(np.max(hi - lo)) if k else 0
    parts = []
    for o in range(width):
        l = lo + o
        ok = l < hi
        li = l[ok]
        parts.append(ph(x[li], s[ok]) * dx[li])
    space = math.fsum(np.concatenate(parts)) * dt / (2 * bw) if parts else 0.0
    return direct, space


def curve_local_time(
    path: FbmPath,
    a: Curve,
    t: float,
    bandwidth: float,
    level_grid=None,
    time_bin: int = 1,
) -> np.ndarray:
    """Running local time on the curve a(s) at the grid times t_1, ..., t_k.

    Built from f_a(x, s) = 1_{(-inf, a(s))}(x): on each time bin the curve
    is frozen at its start and snapped down to the nearest level, so the
    bin contributes the local time increment at that level minus the one
    at the lowest level.
    """
    _check_bw(bandwidth)
    # an odd level count puts 0 on the default grid, so a = 0 is not snapped
    x = default_level_grid(path.grid.t_max, path.h, N_LEVELS + 1) if level_grid is None else np.asarray(level_grid, float)
    b, w = _cells(path, t, True)
    k = b.size
    starts = np.arange(0, k, time_bin)
    a_s = np.asarray(a(path.times[starts]), float) * np.ones(starts.size)
    li = np.searchsorted(x, a_s, side="right") - 1
    bin_of = np.repeat(np.arange(starts.size), time_bin)[:k]
    level = np.where(li[bin_of] >= 0, x[np.clip(li[bin_of], 0, None)], -np.inf)
    top = np.abs(b - level) < bandwidth
    bottom = np.abs(b - x[0]) < bandwidth
    incr = (top.astype(float) - bottom.astype(float)) * w / (2 * bandwidth)
    return np.cumsum(incr)


@dataclass(frozen=True)
class TanakaCheck:
    x: float
    lhs: McEstimate
    rhs: McEstimate
    diff: McEstimate

    def agree(self, k: float = 3.0) -> bool:
        return self.diff.within(0.0, k)


def _tanaka_chunk(start, stop, h, x, t, n_steps, seed_base, bandwidth):
    grid = TimeGrid(t, n_steps)
    out = np.empty((stop - start, 2))
    for r, i in enumerate(range(start, stop)):
        p = generate_path(grid, h, derive_seed(seed_base, i))
        out[r, 0] = abs(p.values[-1] - x) - abs(x)
        out[r, 1] = weighted_local_time(p, x, t, bandwidth).value
    return out


def tanaka_expectation_check(
    h,
    x: float,
    t: float,
    n_paths: int,
    n_steps: int = 65536,
    seed: int = 0,
    bandwidth: float | None = None,
    workers: int = 1,
) -> TanakaCheck:
    """Monte Carlo means of |B_t - x| - |x| and L^H(x, t) on shared paths."""
    hv = hurst(h)
    if not hv < 0.5:
        raise ValueError("the Tanaka check targets H < 1/2")
    bw = default_bandwidth(t, hv) if bandwidth is None else bandwidth
    vals = replicate(_tanaka_chunk, n_paths, workers, (hv, x, t, n_steps, seed, bw))
    return TanakaCheck(
        x=x,
        lhs=mc_estimate(vals[:, 0], seed),
        rhs=mc_estimate(vals[:, 1], seed),
        diff=mc_estimate(vals[:, 0] - vals[:, 1], seed),
    )
