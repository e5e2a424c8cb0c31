"""Randomised verification of the two-sided covariance bounds for rough fBm.

Each check draws parameter tuples, evaluates the lower bound, the middle
quantity and the upper bound directly, and counts how often the middle
escapes the bounds by more than a relative rounding slack.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernel import lemma33_ratio, lemma34_ratio

SLACK = 1e-12
T_MAX = 4.0
H_ROUGH = (0.02, 0.48)
H_FULL = (0.02, 0.98)


@dataclass
class InequalityResult:
    name: str
    samples: int
    violations: int
    worst_margin: float
    worst_tuple: dict


@dataclass
class ViolationReport:
    seed: int
    results: list[InequalityResult] = field(default_factory=list)
    constant_ratios: dict = field(default_factory=dict)

    @property
    def total_violations(self) -> int:
        return sum(r.violations for r in self.results)

    def by_name(self, name: str) -> InequalityResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "results": [asdict(r) for r in self.results],
            "constant_ratios": self.constant_ratios,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ViolationReport":
        return cls(
            seed=d["seed"],
            results=[InequalityResult(**r) for r in d["results"]],
            constant_ratios=d.get("constant_ratios", {}),
        )


def _times(rng, size, k):
    # uniform on (0, T_MAX]
    return T_MAX * (1.0 - rng.random((size, k)))


def _pow_gap(x, alpha):
    """(1-x)^a - (1-x^a), evaluated without cancellation near x = 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.expm1(alpha * np.log1p(-x))
    lead = np.where(x >= 1.0, -1.0, lead)
    return lead + x**alpha


def check_bounds(name, lower, middle, upper, params: dict) -> InequalityResult:
    """Count violations of lower <= middle <= upper with relative slack.

    ``lower`` may be None for one-sided bounds. ``params`` maps names to
    arrays aligned with ``middle`` and is used to report the worst tuple.
    """
    middle = np.asarray(middle, dtype=float)
    upper = np.asarray(upper, dtype=float)
    scale_u = np.maximum(np.abs(middle), np.abs(upper))
    margin = upper - middle
    rel = np.divide(margin, scale_u, out=np.zeros_like(margin), where=scale_u > 0)
    bad = margin < -SLACK * scale_u
    if lower is not None:
        lower = np.asarray(lower, dtype=float)
        scale_l = np.maximum(np.abs(middle), np.abs(lower))
        margin_l = middle - lower
        rel_l = np.divide(margin_l, scale_l, out=np.zeros_like(margin_l), where=scale_l > 0)
        bad |= margin_l < -SLACK * scale_l
        rel = np.minimum(rel, rel_l)
    i = int(np.argmin(rel))
    return InequalityResult(
        name=name,
        samples=int(middle.size),
        violations=int(bad.sum()),
        worst_margin=float(rel[i]),
        worst_tuple={k: float(np.asarray(v)[i]) for k, v in params.items()},
    )


def check_lemma31(rng, n) -> InequalityResult:
    ts = np.sort(_times(rng, n, 2), axis=1)
    s, t = ts[:, 0], ts[:, 1]
    h = rng.uniform(*H_FULL, n)
    mu = 0.5 * (t ** (2 * h) + s ** (2 * h) - (t - s) ** (2 * h))
    st = (s * t) ** h
    # s^H t^H - mu written as a difference of non-negative terms
    gap = 0.5 * ((t - s) ** (2 * h) - (t**h - s**h) ** 2)
    middle = gap * (st + mu)
    base = s ** (2 * h) * (t - s) ** (2 * h)
    lower = 0.5 * (2 - 2**h) * base
    upper = 2 * base
    return check_bounds("lemma3.1", lower, middle, upper, {"s": s, "t": t, "H": h})


def check_lemma32(rng, n) -> list[InequalityResult]:
    ts = np.sort(_times(rng, n, 2), axis=1)
    s, t = ts[:, 0], ts[:, 1]
    h = rng.uniform(*H_ROUGH, n)
    d = (t - s) ** (2 * h)
    mid_a = 0.5 * (t ** (2 * h) - s ** (2 * h)) + 0.5 * d
    a = check_bounds("lemma3.2(3.3)", 0.5 * d, mid_a, d, {"s": s, "t": t, "H": h})
    x = s / t
    mid_b = 0.5 * t ** (2 * h) * _pow_gap(x, 2 * h)
    ratio = x ** (2 * h)
    b = check_bounds(
        "lemma3.2(3.4)",
        0.5 * (2 - 2**h) * ratio * d,
        mid_b,
        0.5 * ratio * d,
        {"s": s, "t": t, "H": h},
    )
    # the bound the elementary inequality actually yields with exponent 2H
    b_alt = check_bounds(
        "lemma3.2(3.4)[2^2H]",
        0.5 * (2 - 4**h) * ratio * d,
        mid_b,
        0.5 * ratio * d,
        {"s": s, "t": t, "H": h},
    )
    return [a, b, b_alt]


def check_elementary(rng, n) -> list[InequalityResult]:
    x = rng.random(n)
    a = rng.random(n)
    one = check_bounds(
        "elementary(1+x)^a",
        None,
        (1 + x) ** a,
        1 + (2**a - 1) * x**a,
        {"x": x, "alpha": a},
    )
    x = rng.random(n)
    a = rng.random(n)
    prod = x**a * (1 - x) ** a
    two = check_bounds(
        "elementary(1-x)^a-(1-x^a)",
        (2 - 2**a) * prod,
        _pow_gap(x, a),
        prod,
        {"x": x, "alpha": a},
    )
    return [one, two]


def check_lemma35(rng, n) -> list[InequalityResult]:
    q = np.sort(_times(rng, n, 4), axis=1)
    h = rng.uniform(*H_ROUGH, n)
    sp, tp, s, t = q.T
    mid = np.abs(increment_cross_cov_vec(sp, tp, s, t, h))
    bound = (t - s) ** (2 * h) * (tp - sp) ** (2 * h) / (s - tp) ** (2 * h)
    ordered = check_bounds(
        "lemma3.5(ordered,C=1)", None, mid, bound,
        {"s'": sp, "t'": tp, "s": s, "t": t, "H": h},
    )
    q = np.sort(_times(rng, n, 4), axis=1)
    h = rng.uniform(*H_ROUGH, n)
    sp, s, tp, t = q.T
    mid = np.abs(increment_cross_cov_vec(sp, tp, s, t, h))
    bound = 3 * (t - s) ** (2 * h) * (tp - sp) ** (2 * h) / (tp - s) ** (2 * h)
    inter = check_bounds(
        "lemma3.5(interleaved,C=3)", None, mid, bound,
        {"s'": sp, "t'": tp, "s": s, "t": t, "H": h},
    )
    return [ordered, inter]


def increment_cross_cov_vec(sp, tp, s, t, h):
    """Vectorised over H as well as times."""
    two_h = 2 * h
    return 0.5 * (
        np.abs(t - sp) ** two_h
        + np.abs(s - tp) ** two_h
        - np.abs(t - tp) ** two_h
        - np.abs(s - sp) ** two_h
    )


def check_lemma36(rng, n) -> list[InequalityResult]:
    q = np.sort(_times(rng, n, 3), axis=1)
    r, s, t = q.T
    h = rng.uniform(*H_ROUGH, n)
    two_h = 2 * h
    p = {"r": r, "s": s, "t": t, "H": h}

    def mu(u, v):
        return 0.5 * (u**two_h + v**two_h - np.abs(u - v) ** two_h)

    a = np.abs(t**two_h - mu(t, s))
    b = np.abs(mu(t, s) - mu(t, r))
    c = np.abs(mu(r, t) - mu(r, s))
    return [
        check_bounds("lemma3.6(a)", None, a, (t - s) ** two_h, p),
        check_bounds("lemma3.6(b)", None, b, (s - r) ** two_h, p),
        check_bounds("lemma3.6(c)", None, c, (t - s) ** two_h, p),
    ]


# smooth test functions for the C_H ratio estimates: (f, f', f'')
RATIO_FUNCTIONS = {
    "gauss_bump": (
        lambda x: np.exp(-(x**2)),
        lambda x: -2 * x * np.exp(-(x**2)),
        lambda x: (4 * x**2 - 2) * np.exp(-(x**2)),
    ),
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
    "tanh": (
        np.tanh,
        lambda x: 1 / np.cosh(x) ** 2,
        lambda x: -2 * np.tanh(x) / np.cosh(x) ** 2,
    ),
}


def estimate_constant_ratios(samples: int, seed: int) -> dict:
    """Largest observed ratios LHS / (RHS without C_H) for the two density lemmas.

    C_H is left unspecified, so these are reported, never asserted
    against a fixed value.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for name, (f, df, d2f) in RATIO_FUNCTIONS.items():
        rs = np.sort(_times(rng, samples, 2), axis=1)
        hs = rng.uniform(*H_ROUGH, samples)
        r33 = [lemma33_ratio(f, df, s, r, h, n=48) for (r, s), h in zip(rs, hs) if s > r]
        r34 = [lemma34_ratio(f, d2f, s, r, h, n=48) for (r, s), h in zip(rs, hs) if s > r]
        out[name] = {
            "lemma3.3_max_ratio": float(max(r33)),
            "lemma3.4_max_ratio": float(max(r34)),
            "samples": len(r33),
        }
    return out


def verify_inequality_suite(samples: int, seed: int, ratio_samples: int = 0) -> ViolationReport:
    if samples <= 0:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    results = [check_lemma31(rng, samples)]
    results += check_lemma32(rng, samples)
    results += check_elementary(rng, samples)
    results += check_lemma35(rng, samples)
    results += check_lemma36(rng, samples)
    ratios = estimate_constant_ratios(ratio_samples, seed + 1) if ratio_samples else {}
    return ViolationReport(seed=seed, results=results, constant_ratios=ratios)
