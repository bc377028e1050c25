"""Figure-level experiments: sweep a variable, evaluate the requested methods
and write one CSV per method plus a JSON manifest."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.stats import binom, kstest

from . import __version__
from .config import ExperimentSpec
from .error_rates import bep, sep_approx, sep_exact
from .link_metrics import (BlockConfig, block_error_rate, power_efficiency,
                           total_power)
from .montecarlo import SimulationPlan, binomial_se, run
from .power_allocation import (epa, max_sep, min_max_numeric, min_sum_numeric,
                               sum_sep)
from .snr_statistics import average_snr, fit_snr_model, snr_cdf, snr_quantile
from .system import SystemConfig

__all__ = ["Table", "compute_experiment", "write_tables", "run_experiment"]


class Table:
    """Header plus rows of one CSV file."""

    def __init__(self, name: str, header: list[str]):
        self.name = name
        self.header = list(header)
        self.rows: list[list] = []

    def add(self, row):
        if len(row) != len(self.header):
            raise ValueError("row length does not match header")
        self.rows.append(list(row))

    def column(self, name) -> np.ndarray:
        i = self.header.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _system_at(base: SystemConfig, variable: str, value) -> SystemConfig:
    if variable == "snr_db":
        return base.with_transmit_snr_db(value)
    if variable == "N":
        return replace(base, N=int(value))
    return replace(base, M=int(value))


def _users(spec: ExperimentSpec):
    if spec.users is not None:
        return [int(k) for k in spec.users]
    return [k for k in range(spec.system.K) if spec.system.u[k] > 0]


def _mc(spec, system, precoder, collect, grid):
    plan = SimulationPlan(system, spec.trials, spec.seed, precoder, collect, grid)
    return run(plan)


def _mc_sweep(spec, precoder, collect):
    """One report per sweep point; a single common-random-number run for SNR sweeps."""
    sw = spec.sweep
    if sw.variable == "snr_db":
        rep = _mc(spec, spec.system, precoder, collect, sw.values)
        return [(rep, g) for g in range(len(sw.values))]
    return [(_mc(spec, _system_at(spec.system, sw.variable, v), precoder, collect, None), 0)
            for v in sw.values]


def _sep_tables(spec, with_bep=False):
    sw, users = spec.sweep, _users(spec)
    out = []
    for method, fn in (("analytic_exact", lambda p, M: sep_exact(p, M).value),
                       ("analytic_approx", lambda p, M: sep_approx(p, M).value)):
        if method not in spec.methods:
            continue
        header = [sw.variable] + [f"sep_user{k}" for k in users] + ["sep_mean"]
        if with_bep:
            header += [f"bep_user{k}" for k in users]
        t = Table(f"{spec.figure}_{method}", header)
        for v in sw.values:
            cfg = _system_at(spec.system, sw.variable, v)
            params = [fit_snr_model(cfg, k, model=spec.model) for k in users]
            seps = [fn(p, cfg.M) for p in params]
            row = [v] + seps + [float(np.mean(seps))]
            if with_bep:
                row += [bep(p, cfg.M) for p in params]
            t.add(row)
        out.append(t)
    for method, precoder in (("monte_carlo", "ci"), ("zf_baseline", "zf")):
        if method not in spec.methods:
            continue
        collect = ("sep", "bep") if with_bep else ("sep",)
        header = [sw.variable]
        for k in users:
            header += [f"sep_user{k}", f"sep_user{k}_se"]
        header += ["sep_mean", "sep_mean_se"]
        if with_bep:
            for k in users:
                header += [f"bep_user{k}", f"bep_user{k}_se"]
        t = Table(f"{spec.figure}_{method}", header)
        for v, (rep, g) in zip(sw.values, _mc_sweep(spec, precoder, collect)):
            row = [v]
            for k in users:
                row += [rep.sep[g, k], rep.sep_se[g, k]]
            n = spec.trials * len(users)
            mean = rep.symbol_errors[g, users].sum() / n
            row += [mean, float(binomial_se(mean, n))]
            if with_bep:
                for k in users:
                    row += [rep.bep[g, k], rep.bep_se[g, k]]
            t.add(row)
        out.append(t)
    return out


def _cdf_tables(spec):
    sw, users = spec.sweep, _users(spec)
    if sw.variable != "snr_db":
        raise ValueError("the cdf figure sweeps snr_db")
    grids = {}
    analytic = Table("cdf_analytic_exact", ["snr_db", "user", "gamma", "cdf"])
    for v in sw.values:
        cfg = spec.system.with_transmit_snr_db(v)
        for k in users:
            p = fit_snr_model(cfg, k, model=spec.model)
            lo, hi = snr_quantile(p, 1e-3), snr_quantile(p, 0.999)
            g = np.geomspace(lo, hi, spec.cdf_points)
            grids[(v, k)] = (p, g)
            for gi, Fi in zip(g, snr_cdf(p, g)):
                analytic.add([v, k, gi, Fi])
    out = []
    if {"analytic_exact", "analytic_approx"} & set(spec.methods):
        out.append(analytic)
    if "monte_carlo" in spec.methods:
        rep = _mc(spec, spec.system, "ci", ("snr_samples",), sw.values)
        t = Table("cdf_monte_carlo", ["snr_db", "user", "gamma", "cdf", "cdf_se", "ks"])
        for gi_, v in enumerate(sw.values):
            for k in users:
                p, g = grids[(v, k)]
                s = np.sort(rep.snr_samples[gi_, :, k])
                ks = kstest(s, lambda x: snr_cdf(p, x)).statistic
                F = np.searchsorted(s, g, side="right") / s.size
                for gv, Fv in zip(g, F):
                    t.add([v, k, gv, Fv, float(binomial_se(Fv, s.size)), ks])
        out.append(t)
    return out


def _avg_snr_tables(spec):
    sw, users = spec.sweep, _users(spec)
    out = []
    if {"analytic_exact", "analytic_approx"} & set(spec.methods):
        t = Table("avg_snr_analytic_exact", [sw.variable] + [f"avg_snr_user{k}" for k in users])
        for v in sw.values:
            cfg = _system_at(spec.system, sw.variable, v)
            t.add([v] + [average_snr(fit_snr_model(cfg, k, model=spec.model)) for k in users])
        out.append(t)
    if "monte_carlo" in spec.methods:
        header = [sw.variable]
        for k in users:
            header += [f"avg_snr_user{k}", f"avg_snr_user{k}_se"]
        t = Table("avg_snr_monte_carlo", header)
        for v, (rep, g) in zip(sw.values, _mc_sweep(spec, "ci", ("sep",))):
            row = [v]
            for k in users:
                row += [rep.snr_mean[g, k], math.sqrt(rep.snr_var[g, k] / rep.trials)]
            t.add(row)
        out.append(t)
    return out


def _power_alloc_tables(spec):
    sw = spec.sweep
    if sw.variable != "snr_db":
        raise ValueError("the power_alloc figure sweeps snr_db")
    K = spec.system.K
    header = ["snr_db"]
    for s in spec.schemes:
        header += [f"{s}_max_sep", f"{s}_sum_sep"] + [f"{s}_share{k}" for k in range(K)]
    t = Table("power_alloc_analytic_approx", header)
    for v in sw.values:
        cfg = spec.system.with_transmit_snr_db(v)
        users = [fit_snr_model(cfg, k, model=spec.model) for k in range(K)]
        row = [v]
        for s in spec.schemes:
            if s == "epa":
                a = epa(K).shares
            elif s == "min_sum":
                a = min_sum_numeric(users, cfg.M).shares
            elif s == "min_max":
                a = min_max_numeric(users, cfg.M, seed=spec.seed).shares
            else:
                raise ValueError(f"unknown scheme {s!r}")
            row += [max_sep(a, users, cfg.M), sum_sep(a, users, cfg.M)] + list(a)
        t.add(row)
    return [t]


def _throughput_row(p_err, se, M, spec, K):
    """Throughput summed over users and its delta-method standard error."""
    cfg = (BlockConfig.from_symbols(M, spec.F, spec.Q) if spec.level == "bit"
           else BlockConfig(spec.F, spec.Q))
    per_user = math.log2(M) * spec.F
    p_err = np.clip(np.asarray(p_err, dtype=float), 0.0, 1.0)
    pb = block_error_rate(p_err, cfg)
    tau = float(np.sum((1.0 - np.atleast_1d(pb)) * per_user)) * K / p_err.size
    if se is None:
        return tau, None
    slope = cfg.block_bits * binom.pmf(cfg.correctable, cfg.block_bits - 1, p_err)
    tau_se = per_user * K / p_err.size * math.sqrt(float(np.sum((slope * np.asarray(se)) ** 2)))
    return tau, tau_se


def _throughput_tables(spec, figure="throughput"):
    sw, users = spec.sweep, _users(spec)
    K = spec.system.K
    out = []
    err_fn = (lambda p, M: bep(p, M)) if spec.level == "bit" else (lambda p, M: sep_exact(p, M).value)
    pe_cols = figure == "efficiency"
    if "analytic_exact" in spec.methods:
        header = [sw.variable]
        for M in spec.M_values:
            header += [f"tau_M{M}"] + ([f"pe_M{M}"] if pe_cols else [])
        if pe_cols:
            header += ["p_total"]
        t = Table(f"{figure}_analytic_exact", header)
        for v in sw.values:
            row = [v]
            base = _system_at(spec.system, sw.variable, v)
            ptot = total_power(base.transmit_power, spec.power_model, base.N)
            for M in spec.M_values:
                cfg = replace(base, M=int(M))
                errs = [err_fn(fit_snr_model(cfg, k, model=spec.model), M) for k in users]
                tau, _ = _throughput_row(errs, None, M, spec, K)
                row += [tau] + ([power_efficiency(tau, ptot)] if pe_cols else [])
            if pe_cols:
                row += [ptot]
            t.add(row)
        out.append(t)
    for method, precoder in (("monte_carlo", "ci"), ("zf_baseline", "zf")):
        if method not in spec.methods:
            continue
        header = [sw.variable]
        for M in spec.M_values:
            header += [f"tau_M{M}", f"tau_M{M}_se"]
            if pe_cols:
                header += [f"pe_M{M}", f"pe_M{M}_se"]
        t = Table(f"{figure}_{method}", header)
        reports = {}
        for M in spec.M_values:
            sub = replace(spec, system=replace(spec.system, M=int(M)))
            reports[M] = _mc_sweep(sub, precoder, ("sep", "bep"))
        for i, v in enumerate(sw.values):
            row = [v]
            base = _system_at(spec.system, sw.variable, v)
            ptot = total_power(base.transmit_power, spec.power_model, base.N)
            for M in spec.M_values:
                rep, g = reports[M][i]
                if spec.level == "bit":
                    p, se = rep.bep[g, users], rep.bep_se[g, users]
                else:
                    p, se = rep.sep[g, users], rep.sep_se[g, users]
                tau, tau_se = _throughput_row(p, se, M, spec, K)
                row += [tau, tau_se]
                if pe_cols:
                    row += [tau / ptot, tau_se / ptot]
            t.add(row)
        out.append(t)
    return out


def compute_experiment(spec: ExperimentSpec) -> list[Table]:
    fig = spec.figure
    if fig == "sep":
        return _sep_tables(spec)
    if fig == "custom":
        return _sep_tables(spec, with_bep=True)
    if fig == "cdf":
        return _cdf_tables(spec)
    if fig == "avg_snr":
        return _avg_snr_tables(spec)
    if fig == "power_alloc":
        return _power_alloc_tables(spec)
    if fig == "throughput":
        return _throughput_tables(spec)
    if fig == "efficiency":
        if spec.sweep.variable != "N":
            raise ValueError("the efficiency figure sweeps N")
        return _throughput_tables(spec, "efficiency")
    raise ValueError(f"unknown figure {fig!r}")


def write_tables(tables, out_dir, spec: ExperimentSpec) -> list[Path]:
    """Write CSVs and ``manifest.json``; on failure remove what was written."""
    out = Path(out_dir)
    created_dir = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for t in tables:
            path = out / f"{t.name}.csv"
            written.append(path)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(t.header)
                for r in t.rows:
                    w.writerow([_fmt(v) for v in r])
        manifest = {
            "figure": spec.figure,
            "config_hash": spec.config_hash,
            "seed": spec.seed,
            "trials": spec.trials,
            "methods": list(spec.methods),
            "sweep": {"variable": spec.sweep.variable, "values": list(spec.sweep.values)},
            "model": spec.model,
            "version": __version__,
            "files": [p.name for p in written],
        }
        path = out / "manifest.json"
        written.append(path)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except BaseException:
        for p in written:
            if p.exists():
                p.unlink()
        if created_dir and not any(out.iterdir()):
            out.rmdir()
        raise
    return written


def run_experiment(spec: ExperimentSpec, out_dir) -> list[Path]:
    return write_tables(compute_experiment(spec), out_dir, spec)
