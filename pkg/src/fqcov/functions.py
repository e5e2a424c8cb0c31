"""Closed catalog of test functions f(x) and f(x, s).

A ``FunctionSpec`` is a small serialisable description (kind + params).
Every kind knows how to evaluate itself, its x-derivative where one
exists, its non-smooth points, and, where available, the exact Gaussian
second moment E|f(sigma Z, s)|^2 used by the norm quadrature.

Step functions use half-open cells (a_{j-1}, a_j], i.e. they are left
continuous.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma
from scipy.stats import norm

from .kernel import hermite_normal

SMOOTH_IDS = ("sin", "cos", "tanh", "gauss_bump", "sech2", "gauss_bump_d")
TIME_KINDS = ("time", "x_times_s", "time_power", "below_curve")
KINDS = (
    "constant", "step", "indicator", "sign", "polynomial", "power_abs",
    "signed_power", "ramp", "abs_shift", "linear_combination", "mollified",
) + SMOOTH_IDS + TIME_KINDS


@dataclass(frozen=True)
class Curve:
    """Continuous level curve s -> a(s): constant, linear or sinusoid."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "sinusoid"):
            raise ValueError(f"unknown curve kind {self.kind!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full_like(s, float(p["c"]))
        if self.kind == "linear":
            return p.get("c0", 0.0) + p.get("c1", 0.0) * s
        return p.get("offset", 0.0) + p["amp"] * np.sin(2 * np.pi * p["freq"] * s + p.get("phase", 0.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        return cls(d["kind"], dict(d.get("params", {})))


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    kind: str
    params: dict = field(default_factory=dict)
    time_dependent: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        if self.kind in TIME_KINDS and not self.time_dependent:
            object.__setattr__(self, "time_dependent", True)
        if self.kind == "step":
            a = np.asarray(self.params["breakpoints"], dtype=float)
            lv = np.asarray(self.params["levels"], dtype=float)
            if a.ndim != 1 or lv.size != a.size - 1 or np.any(np.diff(a) <= 0):
                raise ValueError("step needs increasing breakpoints and len(levels) = len(breakpoints) - 1")
        if self.kind == "indicator" and not self.params["a"] < self.params["b"]:
            raise ValueError("indicator needs a < b")
        if self.kind == "mollified" and int(self.params["n"]) < 1:
            raise ValueError("mollifier index n must be >= 1")

    # -- evaluation -------------------------------------------------------

    def __call__(self, x, s=None):
        x = np.asarray(x, dtype=float)
        if self.time_dependent and s is None:
            raise ValueError(f"{self.kind} is time dependent; pass s")
        p = self.params
        k = self.kind
        if k == "constant":
            return np.full_like(x, float(p["c"]))
        if k == "step":
            return _step_eval(x, p["breakpoints"], p["levels"])
        if k == "indicator":
            return ((x > p["a"]) & (x <= p["b"])).astype(float)
        if k == "sign":
            return np.sign(x - p.get("a", 0.0))
        if k == "polynomial":
            return np.polynomial.polynomial.polyval(x, p["coefs"])
        if k == "power_abs":
            with np.errstate(divide="ignore"):
                return np.abs(x) ** p["p"]
        if k == "signed_power":
            return p.get("scale", 1.0) * np.sign(x) * np.abs(x) ** p["p"]
        if k == "ramp":
            return np.clip(x, p["a"], p["b"]) - p["a"]
        if k == "abs_shift":
            return np.abs(x - p.get("a", 0.0))
        if k == "sin":
            return np.sin(x)
        if k == "cos":
            return np.cos(x)
        if k == "tanh":
            return np.tanh(x)
        if k == "gauss_bump":
            return np.exp(-(x**2))
        if k == "gauss_bump_d":
            return -2 * x * np.exp(-(x**2))
        if k == "sech2":
            return 1.0 / np.cosh(x) ** 2
        if k == "linear_combination":
            return sum(c * g(x, s) for c, g in self.terms)
        if k == "mollified":
            return _mollify_eval(self.base, int(p["n"]), int(p.get("order", 0)), x, s)
        s = np.asarray(s, dtype=float)
        if k == "time":
            return np.broadcast_to(s, np.broadcast_shapes(x.shape, s.shape)).astype(float)
        if k == "x_times_s":
            return x * s
        if k == "time_power":
            with np.errstate(divide="ignore"):
                return np.broadcast_to(s ** p["q"], np.broadcast_shapes(x.shape, s.shape)).astype(float)
        if k == "below_curve":
            return (x < self.curve(s)).astype(float)
        raise AssertionError(k)

    @property
    def terms(self):
        return [(float(c), _coerce(g)) for c, g in self.params["terms"]]

    @property
    def base(self) -> "FunctionSpec":
        return _coerce(self.params["base"])

    @property
    def curve(self) -> Curve:
        c = self.params["curve"]
        return c if isinstance(c, Curve) else Curve.from_dict(c)

    # -- calculus ---------------------------------------------------------

    def derivative(self) -> "FunctionSpec | None":
        """The x-derivative as another catalog entry, or None if not classical."""
        p = self.params
        k = self.kind
        if k in ("constant", "time", "time_power"):
            return constant(0.0)
        if k == "polynomial":
            d = np.polynomial.polynomial.polyder(np.asarray(p["coefs"], dtype=float))
            return polynomial(d.tolist() if d.size else [0.0])
        if k == "power_abs" and p["p"] > 1:
            return FunctionSpec("signed_power", {"p": p["p"] - 1, "scale": p["p"]})
        if k == "ramp":
            return indicator(p["a"], p["b"])
        if k == "abs_shift":
            return FunctionSpec("sign", {"a": p.get("a", 0.0)})
        if k == "sin":
            return FunctionSpec("cos")
        if k == "cos":
            return linear_combination([(-1.0, FunctionSpec("sin"))])
        if k == "tanh":
            return FunctionSpec("sech2")
        if k == "gauss_bump":
            return FunctionSpec("gauss_bump_d")
        if k == "linear_combination":
            ds = [(c, g.derivative()) for c, g in self.terms]
            if any(d is None for _, d in ds):
                return None
            return linear_combination(ds)
        if k == "mollified" and int(p.get("order", 0)) == 0:
            return FunctionSpec("mollified", {**p, "order": 1})
        if k == "x_times_s":
            return FunctionSpec("time")
        return None

    def breakpoints(self, s=None) -> np.ndarray:
        """Points where f (or its derivative) is not smooth, for quadrature."""
        p = self.params
        k = self.kind
        if k == "step":
            return np.asarray(p["breakpoints"], dtype=float)
        if k == "indicator" or k == "ramp":
            return np.array([p["a"], p["b"]], dtype=float)
        if k in ("power_abs", "signed_power"):
            return np.array([0.0])
        if k in ("sign", "abs_shift"):
            return np.array([p.get("a", 0.0)])
        if k == "linear_combination":
            pts = [g.breakpoints(s) for _, g in self.terms]
            return np.unique(np.concatenate(pts)) if pts else np.array([])
        if k == "mollified":
            b = self.base.breakpoints(s)
            n = int(p["n"])
            return np.unique(np.concatenate([b, b + 2.0 / n]))
        if k == "below_curve":
            return np.atleast_1d(self.curve(s)).astype(float)
        return np.array([])

    def gaussian_second_moment(self, sigma: float, s: float | None = None) -> float | None:
        """E|f(sigma Z, s)|^2 in closed form, or None when no closed form is coded."""
        p = self.params
        k = self.kind
        if k == "constant":
            return float(p["c"]) ** 2
        if k in ("step", "indicator"):
            a, lv = as_step(self)
            cdf = norm.cdf(a / sigma)
            return float(np.sum(lv**2 * np.diff(cdf)))
        if k == "sign":
            return 1.0
        if k == "power_abs":
            q = 2.0 * p["p"]
            if q <= -1:
                return math.inf
            return sigma**q * 2 ** (q / 2) * gamma((q + 1) / 2) / math.sqrt(math.pi)
        if k == "polynomial":
            z, w = hermite_normal(64)
            return float(w @ self(sigma * z) ** 2)
        if k == "time":
            return float(s) ** 2
        if k == "x_times_s":
            return float(s) ** 2 * sigma**2
        if k == "time_power":
            return math.inf if s == 0 and p["q"] < 0 else float(s) ** (2 * p["q"])
        if k == "below_curve":
            return float(norm.cdf(float(self.curve(s)) / sigma))
        return None

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _plain(self.params), "time_dependent": self.time_dependent}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "FunctionSpec":
        if isinstance(d, str):
            return cls(d, {})
        return cls(d["kind"], dict(d.get("params", {})), bool(d.get("time_dependent", False)))

    @classmethod
    def from_json(cls, text: str) -> "FunctionSpec":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return isinstance(other, FunctionSpec) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def __repr__(self):
        return f"FunctionSpec({self.to_json()})"


# -- constructors -----------------------------------------------------------


def constant(c: float) -> FunctionSpec:
    return FunctionSpec("constant", {"c": float(c)})


def step(breakpoints, levels) -> FunctionSpec:
    return FunctionSpec("step", {"breakpoints": [float(a) for a in breakpoints], "levels": [float(v) for v in levels]})


def indicator(a: float, b: float) -> FunctionSpec:
    """1_{(a, b]}."""
    return FunctionSpec("indicator", {"a": float(a), "b": float(b)})


def polynomial(coefs) -> FunctionSpec:
    """sum_k coefs[k] x^k."""
    return FunctionSpec("polynomial", {"coefs": [float(c) for c in coefs]})


def identity() -> FunctionSpec:
    return polynomial([0.0, 1.0])


def ramp(a: float, b: float) -> FunctionSpec:
    """(x - a)^+ - (x - b)^+."""
    return FunctionSpec("ramp", {"a": float(a), "b": float(b)})


def below_curve(curve: Curve) -> FunctionSpec:
    """f(x, s) = 1_{(-inf, a(s))}(x)."""
    return FunctionSpec("below_curve", {"curve": curve.to_dict()}, True)


def linear_combination(terms) -> FunctionSpec:
    """sum_k c_k g_k for (c_k, g_k) in ``terms``."""
    params = {"terms": [[float(c), g.to_dict()] for c, g in terms]}
    td = any(g.time_dependent for _, g in terms)
    return FunctionSpec("linear_combination", params, td)


def mollify(f: FunctionSpec, n: int) -> FunctionSpec:
    """f_n(x) = int_0^2 f(x - y/n) zeta(y) dy, evaluated by 64-point quadrature."""
    if f.time_dependent:
        raise ValueError("mollify acts on functions of x only")
    return FunctionSpec("mollified", {"base": f.to_dict(), "n": int(n)})


def _coerce(g) -> FunctionSpec:
    return g if isinstance(g, FunctionSpec) else FunctionSpec.from_dict(g)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (FunctionSpec, Curve)):
        return obj.to_dict()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _step_eval(x, breakpoints, levels):
    a = np.asarray(breakpoints, dtype=float)
    lv = np.asarray(levels, dtype=float)
    # cell j is (a[j], a[j+1]]: searchsorted(side='left') - 1 maps x=a[j+1] into cell j
    idx = np.searchsorted(a, x, side="left") - 1
    inside = (idx >= 0) & (idx < lv.size)
    return np.where(inside, lv[np.clip(idx, 0, lv.size - 1)], 0.0)


def as_step(f: FunctionSpec):
    """(breakpoints a_0 < ... < a_M, levels f_1..f_M) for step-type kinds, f = f_j on (a_{j-1}, a_j]."""
    if f.kind == "constant":
        return np.array([-np.inf, np.inf]), np.array([float(f.params["c"])])
    if f.kind == "indicator":
        return np.array([f.params["a"], f.params["b"]]), np.array([1.0])
    if f.kind == "step":
        return np.asarray(f.params["breakpoints"], dtype=float), np.asarray(f.params["levels"], dtype=float)
    return None


# -- mollifier ----------------------------------------------------------------


def _bump(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = (y > 0) & (y < 2)
    out[m] = np.exp(1.0 / ((y[m] - 1) ** 2 - 1))
    return out


@lru_cache(maxsize=1)
def bump_normalizer() -> float:
    """c such that c * exp(1/((y-1)^2 - 1)) integrates to one on (0, 2)."""
    val, _ = integrate.quad(lambda y: float(_bump(np.array([y]))[0]), 0.0, 2.0, epsabs=1e-14, epsrel=1e-14)
    return 1.0 / val


def zeta(y):
    return bump_normalizer() * _bump(y)


def zeta_prime(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    m = (y > 0) & (y < 2)
    u = (y[m] - 1) ** 2 - 1
    out[m] = bump_normalizer() * np.exp(1.0 / u) * (-2.0 * (y[m] - 1) / u**2)
    return out


@lru_cache(maxsize=1)
def _legendre(n_nodes: int = 64):
    return np.polynomial.legendre.leggauss(n_nodes)


def mollifier_rule(n_nodes: int = 64):
    """Gauss-Legendre nodes on (0, 2) with weights folded with zeta and zeta'."""
    x, w = _legendre(n_nodes)
    y = x + 1.0
    return y, w * zeta(y), w * zeta_prime(y)


def _mollify_eval(base: FunctionSpec, n: int, order: int, x, s=None):
    # The y-range (0, 2) is cut where x - y/n crosses a breakpoint of the
    # base function so that every 64-point panel sees a smooth integrand.
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    bp = base.breakpoints()
    cuts = n * (flat[:, None] - bp[None, :]) if bp.size else np.empty((flat.size, 0))
    edges = np.concatenate([np.zeros((flat.size, 1)), np.clip(cuts, 0.0, 2.0), np.full((flat.size, 1), 2.0)], axis=1)
    edges.sort(axis=1)
    lo, hi = edges[:, :-1], edges[:, 1:]
    gx, gw = _legendre()
    half = 0.5 * (hi - lo)
    y = lo[..., None] + half[..., None] * (gx + 1.0)
    w = half[..., None] * gw
    kern = zeta(y) if order == 0 else zeta_prime(y)
    vals = base(flat[:, None, None] - y / n)
    out = np.sum(vals * kern * w, axis=(1, 2))
    if order == 1:
        # d/dx int f(x - y/n) zeta(y) dy = n int f(x - y/n) zeta'(y) dy
        out = n * out
    return out.reshape(x.shape)


def check_derivative(f: FunctionSpec, points, s=None, h: float = 1e-5) -> float:
    """Largest relative mismatch between f.derivative() and central differences."""
    d = f.derivative()
    if d is None:
        raise ValueError(f"{f.kind} has no registered derivative")
    x = np.asarray(points, dtype=float)
    fd = (f(x + h, s) - f(x - h, s)) / (2 * h)
    an = d(x, s)
    scale = np.maximum(1.0, np.abs(an))
    return float(np.max(np.abs(fd - an) / scale))
