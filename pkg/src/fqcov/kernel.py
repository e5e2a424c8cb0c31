"""Covariance algebra of fractional Brownian motion.

Everything here is deterministic: the fBm covariance, covariances of
increments, the explicit M-operator image of an interval indicator, and
Gaussian expectations of functions of the pair (B_s, B_r) evaluated by
tensor Gauss-Hermite quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma


class RoughnessError(ValueError):
    """Raised when an operation defined only for H < 1/2 receives H >= 1/2."""


class PoleError(ValueError):
    """Raised when a singular formula is evaluated exactly at a pole."""


@dataclass(frozen=True)
class HurstIndex:
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.0 < h < 1.0) or math.isnan(h):
            raise ValueError(f"Hurst index must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    @property
    def is_rough(self) -> bool:
        return self.h < 0.5

    def require_rough(self) -> "HurstIndex":
        if not self.is_rough:
            raise RoughnessError(f"operation requires H < 1/2, got H={self.h}")
        return self

    def __float__(self) -> float:
        return self.h


def hurst(h, rough: bool = False) -> float:
    """Validate ``h`` (float or HurstIndex) and return it as a float."""
    idx = h if isinstance(h, HurstIndex) else HurstIndex(h)
    if rough:
        idx.require_rough()
    return idx.h


@dataclass(frozen=True)
class PairCovariance:
    """Second moments of (B_s, B_t): mu = E[B_s B_t], rho2 = s^2H t^2H - mu^2."""

    s: float
    t: float
    mu: float
    rho2: float


def covariance(s, t, h):
    """E[B^H_s B^H_t] = (t^2H + s^2H - |t-s|^2H) / 2.

    Accepts scalars or broadcastable arrays. Negative times raise ValueError.
    """
    hv = hurst(h)
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any(s_arr < 0) or np.any(t_arr < 0):
        raise ValueError("times must be non-negative")
    two_h = 2.0 * hv
    out = 0.5 * (t_arr**two_h + s_arr**two_h - np.abs(t_arr - s_arr) ** two_h)
    return float(out) if out.ndim == 0 else out


def pair_covariance(s: float, t: float, h) -> PairCovariance:
    hv = hurst(h)
    mu = covariance(s, t, hv)
    # (s^H t^H - mu)(s^H t^H + mu) keeps rho2 >= 0 up to rounding
    st = (s * t) ** hv
    rho2 = max((st - mu) * (st + mu), 0.0)
    return PairCovariance(s=float(s), t=float(t), mu=mu, rho2=rho2)


def increment_cross_cov(s_prime, t_prime, s, t, h):
    """E[(B_t - B_s)(B_t' - B_s')].

    Equals (|t-s'|^2H + |s-t'|^2H - |t-t'|^2H - |s-s'|^2H) / 2. Degenerate
    intervals give 0.
    """
    hv = hurst(h)
    sp, tp, s_, t_ = (np.asarray(v, dtype=float) for v in (s_prime, t_prime, s, t))
    if np.any(sp < 0) or np.any(s_ < 0):
        raise ValueError("times must be non-negative")
    if np.any(tp < sp) or np.any(t_ < s_):
        raise ValueError("intervals must satisfy s <= t")
    two_h = 2.0 * hv
    out = 0.5 * (
        np.abs(t_ - sp) ** two_h
        + np.abs(s_ - tp) ** two_h
        - np.abs(t_ - tp) ** two_h
        - np.abs(s_ - sp) ** two_h
    )
    out = np.where((tp == sp) | (t_ == s_), 0.0, out)
    return float(out) if out.ndim == 0 else out


def m_indicator_constant(h) -> float:
    """Normalising constant of the explicit M-image of an interval indicator."""
    hv = hurst(h)
    if hv == 0.5:
        raise ValueError("the explicit indicator formula is singular at H = 1/2")
    num = math.sqrt(gamma(2 * hv + 1) * math.sin(math.pi * hv))
    den = 2.0 * gamma(hv + 0.5) * math.cos(0.5 * math.pi * (hv + 0.5))
    return float(num / den)


def m_indicator(a: float, b: float, x, h):
    """(M 1_[a,b])(x) for H != 1/2; raises PoleError at x = a or x = b."""
    if not a < b:
        raise ValueError("need a < b")
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr == a) | (x_arr == b)):
        raise PoleError(f"M 1_[a,b] has poles at x=a={a} and x=b={b}")
    hv = hurst(h)
    p = 1.5 - hv
    db = b - x_arr
    da = a - x_arr
    out = m_indicator_constant(hv) * (db / np.abs(db) ** p - da / np.abs(da) ** p)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=16)
def hermite_normal(n: int = 64):
    """Nodes/weights for E[g(Z)], Z ~ N(0, 1)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


def bivariate_expectation(g, s: float, r: float, h, n: int = 64) -> float:
    """E[g(B_s, B_r)] by tensor Gauss-Hermite after a Cholesky change of variables."""
    hv = hurst(h)
    if s <= 0 or r <= 0:
        raise ValueError("need s, r > 0")
    pc = pair_covariance(s, r, hv)
    sd_s = s**hv
    z, w = hermite_normal(n)
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    x = sd_s * z1
    y = (pc.mu / sd_s) * z1 + math.sqrt(pc.rho2) / sd_s * z2
    return float(np.einsum("i,j,ij->", w, w, g(x, y)))


def lemma33_ratio(f, df, s: float, r: float, h, n: int = 64) -> float:
    """|E f'(B_s) f'(B_r)| divided by s^H r^-H (s-r)^-2H (E f(B_s)^2 E f(B_r)^2)^1/2.

    The result is an empirical lower bound for the unspecified constant C_H.
    """
    hv = hurst(h, rough=True)
    if not s > r > 0:
        raise ValueError("need s > r > 0")
    z, w = hermite_normal(n)
    lhs = abs(bivariate_expectation(lambda x, y: df(x) * df(y), s, r, hv, n))
    es = float(w @ f(s**hv * z) ** 2)
    er = float(w @ f(r**hv * z) ** 2)
    scale = s**hv / (r**hv * (s - r) ** (2 * hv)) * math.sqrt(es * er)
    return lhs / scale


def lemma34_ratio(f, d2f, s: float, r: float, h, n: int = 64) -> float:
    """|E f''(B_s) f(B_r)| divided by (s-r)^-2H (E f(B_s)^2 E f(B_r)^2)^1/2."""
    hv = hurst(h, rough=True)
    if not s > r > 0:
        raise ValueError("need s > r > 0")
    z, w = hermite_normal(n)
    lhs = abs(bivariate_expectation(lambda x, y: d2f(x) * f(y), s, r, hv, n))
    es = float(w @ f(s**hv * z) ** 2)
    er = float(w @ f(r**hv * z) ** 2)
    scale = math.sqrt(es * er) / (s - r) ** (2 * hv)
    return lhs / scale
