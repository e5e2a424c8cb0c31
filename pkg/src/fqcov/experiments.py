"""Experiment runners: Monte Carlo fan-out, CSV and JSON persistence.

Every Monte Carlo experiment reduces each path to a fixed vector of
statistics. Paths are seeded by (seed, replication index) only, and the
per-path vectors are stitched back in replication order, so the CSV is
byte-identical for any worker count.

CSV columns per experiment:

    qcov_sweep         form, H, n, eps, t, mc_mean, mc_se, n_paths, seed_base
    localtime_profile  x, t, mc_mean, mc_se, bandwidth, oracle
    inequality_suite   name, samples, violations, worst_margin
    ito_check          quantity, H, n, t, mc_mean, mc_se, n_paths, seed_base
    bouleau_yor        quantity, H, n, t, mc_mean, mc_se, n_paths, seed_base
    occupation         path, direct, space, rel_diff
    norm_eval          name, norm, t_max, H, value, abs_error_estimate
    curve_localtime    t, value, mc_se
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, config_echo
from .engine import TimeGrid, derive_seed, generate_path
from .functions import as_step, linear_combination, mollify
from .inequalities import verify_inequality_suite
from .local_time import (
    curve_local_time,
    expected_local_time,
    integral_against_local_time,
    integral_against_local_time_td,
    local_time_profile,
    occupation_check,
    weighted_local_time,
)
from .montecarlo import mc_estimate, replicate
from .norms import norm_H, norm_H_star
from .qcov import closed_form, estimate_eps, estimate_eps_td, estimate_riemann, expected_closed_form


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class ResultSet:
    experiment: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    csv_path: Path | None = None
    json_path: Path | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# -- grids and per-path statistics --------------------------------------------


def _grid(cfg: ExperimentConfig) -> TimeGrid:
    look = 0
    if cfg.experiment in ("qcov_sweep", "ito_check"):
        look = max(cfg.eps_multiples)
    elif cfg.experiment == "bouleau_yor":
        look = 1
    return TimeGrid(cfg.t_max, cfg.n_steps, look)


def _levels(cfg):
    if cfg.levels is not None:
        return np.asarray(cfg.levels, float)
    return np.linspace(-1.0, 1.0, 9) * cfg.t_max**cfg.h


def _qcov_labels(cfg):
    f = cfg.resolved_function
    dt = cfg.t_max / cfg.n_steps
    labels = [("eps_limit", m * dt) for m in cfg.eps_multiples]
    if not f.time_dependent:
        labels.append(("riemann_sum", dt))
    if f.derivative() is not None:
        labels.append(("closed_form", dt))
    return labels


def _stats_qcov(cfg, p):
    f = cfg.resolved_function
    t = cfg.t_max
    est = estimate_eps_td if f.time_dependent else estimate_eps
    out = []
    for form, eps in _qcov_labels(cfg):
        if form == "eps_limit":
            out.append(est(f, p, eps, t).value)
        elif form == "riemann_sum":
            out.append(estimate_riemann(f, p, t=t).value)
        else:
            out.append(closed_form(f, p, t).value)
    return out


def _stats_profile(cfg, p):
    x = _levels(cfg)
    bw = cfg.resolved_bandwidth
    return np.concatenate([local_time_profile(p, x, cfg.t_max, k * bw) for k in cfg.bandwidth_factors])


def _ito_labels(cfg):
    f = cfg.resolved_function.derivative()
    labels = ["F(B_t)-F(0)", "half_qcov_eps", "half_qcov_riemann"]
    if as_step(f) is not None:
        labels.append("half_minus_int_f_dL")
    return labels


def _stats_ito(cfg, p):
    F = cfg.resolved_function
    f = F.derivative()
    t = cfg.t_max
    eps = min(cfg.eps_multiples) * p.grid.dt
    bt = p.at(t)
    out = [
        float(F(np.array([bt]))[0] - F(np.array([0.0]))[0]),
        0.5 * estimate_eps(f, p, eps, t).value,
        0.5 * estimate_riemann(f, p, t=t).value,
    ]
    if as_step(f) is not None:
        out.append(-0.5 * integral_against_local_time(f, p, t, cfg.resolved_bandwidth))
    return out


def _stats_by(cfg, p):
    f = cfg.resolved_function
    t = cfg.t_max
    bw = cfg.resolved_bandwidth
    if f.time_dependent:
        q = estimate_eps_td(f, p, p.grid.dt, t).value
        lt = -integral_against_local_time_td(f, p, t, bw, cfg.levels)
    else:
        q = estimate_riemann(f, p, t=t).value
        lt = -integral_against_local_time(f, p, t, bw)
    return [q, lt]


def _stats_occupation(cfg, p):
    lv = None if cfg.levels is None else np.asarray(cfg.levels, float)
    return list(occupation_check(p, cfg.resolved_function, cfg.t_max, cfg.bandwidth, lv))


def _stats_curve(cfg, p):
    c = cfg.resolved_curve
    lv = None if cfg.levels is None else np.asarray(cfg.levels, float)
    proc = curve_local_time(p, c, cfg.t_max, cfg.resolved_bandwidth, lv)
    extra = [weighted_local_time(p, float(c.params["c"]), cfg.t_max, cfg.resolved_bandwidth).value] if c.kind == "constant" else [math.nan]
    return np.concatenate([proc, extra])


_STATS = {
    "qcov_sweep": _stats_qcov,
    "localtime_profile": _stats_profile,
    "ito_check": _stats_ito,
    "bouleau_yor": _stats_by,
    "occupation": _stats_occupation,
    "curve_localtime": _stats_curve,
}


def _mc_chunk(start: int, stop: int, cfg: ExperimentConfig) -> np.ndarray:
    grid = _grid(cfg)
    fn = _STATS[cfg.experiment]
    rows = []
    for i in range(start, stop):
        p = generate_path(grid, cfg.h, derive_seed(cfg.seed, i))
        rows.append(np.asarray(fn(cfg, p), dtype=float))
    return np.vstack(rows)


def simulate_statistics(cfg: ExperimentConfig) -> np.ndarray:
    """(n_paths, n_stats) matrix of per-path statistics for ``cfg``."""
    return replicate(_mc_chunk, cfg.n_paths, cfg.workers, (cfg,))


# -- experiments ----------------------------------------------------------------


def _within(est, target, rel=0.0, k=3.0):
    tol = max(k * est.std_error, rel * abs(target))
    return abs(est.value - target) <= tol, tol


def _qcov_oracle(cfg):
    f = cfg.resolved_function
    t, h = cfg.t_max, cfg.h
    if f.kind == "x_times_s":
        return 2 * h / (2 * h + 1) * t ** (2 * h + 1)
    if not f.time_dependent and f.derivative() is not None:
        return expected_closed_form(f, h, t)
    return None


def _run_qcov(cfg):
    stats = simulate_statistics(cfg)
    cols = ["form", "H", "n", "eps", "t", "mc_mean", "mc_se", "n_paths", "seed_base"]
    rows, checks = [], []
    oracle = _qcov_oracle(cfg)
    labels = _qcov_labels(cfg)
    final_eps = min(cfg.eps_multiples) * cfg.t_max / cfg.n_steps
    for j, (form, eps) in enumerate(labels):
        est = mc_estimate(stats[:, j], cfg.seed)
        rows.append([form, cfg.h, cfg.n_steps, eps, cfg.t_max, est.value, est.std_error, cfg.n_paths, cfg.seed])
        if oracle is not None and (form != "eps_limit" or eps == final_eps):
            ok, tol = _within(est, oracle, rel=0.05)
            checks.append(Check(f"{form}(eps={eps:.6g}) vs oracle", ok, f"mean={est.value:.6g} oracle={oracle:.6g} tol={tol:.3g}"))
    return cols, rows, {"oracle": oracle}, checks


def _run_profile(cfg):
    stats = simulate_statistics(cfg)
    x = _levels(cfg)
    cols = ["x", "t", "mc_mean", "mc_se", "bandwidth", "oracle"]
    rows, checks = [], []
    bw = cfg.resolved_bandwidth
    for b, k in enumerate(cfg.bandwidth_factors):
        for i, xi in enumerate(x):
            est = mc_estimate(stats[:, b * x.size + i], cfg.seed)
            oracle = expected_local_time(float(xi), cfg.t_max, cfg.h)
            rows.append([float(xi), cfg.t_max, est.value, est.std_error, k * bw, oracle])
            if k == 1.0:
                ok, tol = _within(est, oracle, rel=0.05)
                checks.append(Check(f"L(x={xi:.4g}) vs oracle", ok, f"mean={est.value:.6g} oracle={oracle:.6g} tol={tol:.3g}"))
    return cols, rows, {}, checks


def _run_inequalities(cfg):
    rep = verify_inequality_suite(cfg.samples, cfg.seed, cfg.ratio_samples)
    cols = ["name", "samples", "violations", "worst_margin"]
    rows = [[r.name, r.samples, r.violations, r.worst_margin] for r in rep.results]
    checks = [Check(r.name, r.violations == 0, f"{r.violations} of {r.samples} violate") for r in rep.results]
    return cols, rows, {"constant_ratios": rep.constant_ratios, "total_violations": rep.total_violations}, checks


def _paired_rows(cfg, stats, labels, pairs):
    cols = ["quantity", "H", "n", "t", "mc_mean", "mc_se", "n_paths", "seed_base"]
    rows, checks = [], []

    def row(name, col):
        est = mc_estimate(col, cfg.seed)
        rows.append([name, cfg.h, cfg.n_steps, cfg.t_max, est.value, est.std_error, cfg.n_paths, cfg.seed])
        return est

    for j, name in enumerate(labels):
        row(name, stats[:, j])
    for a, b in pairs:
        est = row(f"{labels[a]} - {labels[b]}", stats[:, a] - stats[:, b])
        ok, tol = _within(est, 0.0)
        checks.append(Check(f"{labels[a]} = {labels[b]}", ok, f"diff={est.value:.6g} 3SE={tol:.3g}"))
    return cols, rows, checks


def _run_ito(cfg):
    if cfg.resolved_function.derivative() is None:
        raise ConfigError({"function": "ito_check needs a function with a registered derivative"})
    stats = simulate_statistics(cfg)
    labels = _ito_labels(cfg)
    pairs = [(0, j) for j in range(1, len(labels))]
    cols, rows, checks = _paired_rows(cfg, stats, labels, pairs)
    return cols, rows, {}, checks


def _run_by(cfg):
    f = cfg.resolved_function
    if not f.time_dependent and as_step(f) is None:
        raise ConfigError({"function": "bouleau_yor needs a step-type function or a time-dependent one"})
    stats = simulate_statistics(cfg)
    labels = ["qcov_eps" if f.time_dependent else "qcov_riemann", "minus_int_f_dL"]
    cols, rows, checks = _paired_rows(cfg, stats, labels, [(0, 1)])
    return cols, rows, {}, checks


def _run_occupation(cfg):
    stats = simulate_statistics(cfg)
    direct, space = stats[:, 0], stats[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(direct != 0, space / direct - 1.0, np.where(space == 0, 0.0, np.inf))
    cols = ["path", "direct", "space", "rel_diff"]
    rows = [[i, float(d), float(s), float(r)] for i, (d, s, r) in enumerate(zip(direct, space, rel))]
    worst = float(np.max(np.abs(rel)))
    checks = [Check("occupation relative difference <= 5%", worst <= 0.05, f"worst={worst:.4g}")]
    return cols, rows, {"max_abs_rel_diff": worst}, checks


def _run_norm(cfg):
    f = cfg.resolved_function
    fn = norm_H_star if f.time_dependent else norm_H
    label = "H*" if f.time_dependent else "H"
    cols = ["name", "norm", "t_max", "H", "value", "abs_error_estimate"]
    v = fn(f, cfg.t_max, cfg.h)
    rows = [[f.to_json(), label, cfg.t_max, cfg.h, v.value, v.abs_error_estimate]]
    checks = [Check("quadrature refinement agrees to 1e-6", v.finite and v.abs_error_estimate <= 1e-6 * max(v.value, 1e-300), f"value={v.value:.10g} err={v.abs_error_estimate:.3g}")]
    trend = []
    for n in cfg.mollify_n:
        if f.time_dependent:
            raise ConfigError({"mollify_n": "mollification needs a function of x only"})
        d = norm_H(linear_combination([(1.0, mollify(f, n)), (-1.0, f)]), cfg.t_max, cfg.h)
        rows.append([f"mollify(n={n})-f", label, cfg.t_max, cfg.h, d.value, d.abs_error_estimate])
        trend.append(d.value)
    if len(trend) > 1:
        dec = all(b < a for a, b in zip(trend, trend[1:]))
        checks.append(Check("||f_n - f|| decreasing in n", dec, ", ".join(f"{x:.4g}" for x in trend)))
    return cols, rows, {}, checks


def _run_curve(cfg):
    stats = simulate_statistics(cfg)
    proc, fixed = stats[:, :-1], stats[:, -1]
    k = proc.shape[1]
    dt = cfg.t_max / cfg.n_steps
    cols = ["t", "value", "mc_se"]
    mean = np.array([math.fsum(c) for c in proc.T]) / proc.shape[0]
    se = proc.std(axis=0, ddof=1) / math.sqrt(proc.shape[0])
    rows = [[(i + 1) * dt, float(m), float(s)] for i, m, s in zip(range(k), mean, se)]
    incr = np.diff(np.concatenate([np.zeros((proc.shape[0], 1)), proc], axis=1), axis=1)
    moving = incr != 0
    neg = float(np.sum(incr < 0) / max(np.sum(moving), 1))
    summary = {"negative_increment_fraction": neg}
    checks = [Check("negative increments below 1%", neg < 0.01, f"fraction={neg:.4g}")]
    if np.all(np.isfinite(fixed)):
        final = mc_estimate(proc[:, -1], cfg.seed)
        ref = mc_estimate(fixed, cfg.seed)
        rel = abs(final.value / ref.value - 1.0) if ref.value else math.inf
        summary.update({"final_mean": final.value, "fixed_level_mean": ref.value})
        checks.append(Check("curve vs fixed level within 5%", rel <= 0.05, f"curve={final.value:.6g} fixed={ref.value:.6g}"))
    return cols, rows, summary, checks


_RUNNERS = {
    "qcov_sweep": _run_qcov,
    "localtime_profile": _run_profile,
    "inequality_suite": _run_inequalities,
    "ito_check": _run_ito,
    "bouleau_yor": _run_by,
    "occupation": _run_occupation,
    "norm_eval": _run_norm,
    "curve_localtime": _run_curve,
}


def run(cfg: ExperimentConfig, write: bool = True) -> ResultSet:
    """Execute ``cfg.experiment``; writes CSV and JSON summary unless ``write`` is False."""
    cfg.validate()
    t0 = time.perf_counter()
    cols, rows, extra, checks = _RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - t0
    result = ResultSet(cfg.experiment, cols, rows, checks=checks)
    result.summary = {
        "config": config_echo(cfg),
        "results": [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()} for r in result.records()],
        "extra": extra,
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks],
        "wall_time_s": wall,
        "version": __version__,
    }
    if write:
        result.csv_path = cfg.csv_path
        result.json_path = cfg.json_path
        result.csv_path.parent.mkdir(parents=True, exist_ok=True)
        result.csv_path.write_text(to_csv(cols, rows))
        result.json_path.write_text(json.dumps(result.summary, indent=2, default=_json_default))
    return result


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)
