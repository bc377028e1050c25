"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import kstest

from ci_linkperf.cli import main
from ci_linkperf.config import load_experiment
from ci_linkperf.error_rates import sep_approx, sep_exact
from ci_linkperf.experiments import compute_experiment
from ci_linkperf.montecarlo import SimulationPlan, empirical_snr_samples, run
from ci_linkperf.power_allocation import (epa, max_sep, min_max_numeric, min_sum_closed_form,
                                          min_sum_numeric, sum_sep)
from ci_linkperf.precoding import effective_zeta
from ci_linkperf.quadrature import gauss_laguerre
from ci_linkperf.snr_statistics import GenGammaParams, fit_snr_model, laplace_snr, snr_cdf
from ci_linkperf.system import SystemConfig, u_preset

from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).parent.parent / "configs"
SEP_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
SEP_CASES = [(4, 4, 2), (4, 4, 4), (4, 4, 8), (6, 4, 2), (6, 4, 4), (6, 4, 8)]
SEP_TRIALS = 100_000
SEP_SEED = 2024


def record(num, ok, title, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


def _basis_config(N, K, M):
    return SystemConfig(N, K, M=M, u=u_preset("basis", K, 0))


@pytest.fixture(scope="module")
def sep_runs():
    """CI and ZF Monte Carlo for user 0 (u = e_1) on the SEP grid."""
    start = time.perf_counter()
    out = {}
    for N, K, M in SEP_CASES:
        cfg = _basis_config(N, K, M)
        ci = run(SimulationPlan(cfg, SEP_TRIALS, SEP_SEED, snr_grid=SEP_GRID))
        zf = run(SimulationPlan(cfg, SEP_TRIALS, SEP_SEED, precoder="zf", snr_grid=SEP_GRID))
        exact = [sep_exact(fit_snr_model(cfg.with_transmit_snr_db(e), 0), M).value
                 for e in SEP_GRID]
        out[(N, K, M)] = (cfg, ci, zf, np.array(exact))
    return out, time.perf_counter() - start


def test_c01_quadrature_exactness():
    start = time.perf_counter()
    worst = 0.0
    for n in (4, 16, 64):
        rule = gauss_laguerre(n)
        with np.errstate(divide="ignore"):
            logw, logx = np.log(rule.weights), np.log(rule.nodes)
        for j in range(2 * n):
            lv = logw + j * logx
            m = lv.max()
            total = m + math.log(np.exp(lv - m).sum())
            worst = max(worst, abs(math.expm1(total - math.lgamma(j + 1))))
    dt = time.perf_counter() - start
    record(1, worst <= 1e-10 and dt < 1.0, "Gauss-Laguerre moments",
           f"max rel err {worst:.2e} over j <= 2n-1, n in (4, 16, 64); {dt:.2f} s")


def test_c02_mgf_normalisation():
    err = max(abs(laplace_snr(GenGammaParams(float(N), scale), 0.0) - 1.0)
              for N in (2, 4, 8) for scale in (1e-3, 1.0, 1e3))
    record(2, err <= 1e-12, "L(0) = 1", f"max |L(0) - 1| = {err:.1e} for N in (2, 4, 8)")


def test_c03_exact_case_distribution():
    start = time.perf_counter()
    N = K = 4
    cfg = SystemConfig(N, K, u=u_preset("basis", K, 1)).with_transmit_snr_db(10.0)
    snr = empirical_snr_samples(SimulationPlan(cfg, 100_000, seed=3))[0, :, 1]
    p = fit_snr_model(cfg, 1)
    ks = kstest(snr, lambda g: snr_cdf(p, g)).statistic
    mean = p.scale * N * (N + 1)
    z = (snr.mean() - mean) / (snr.std(ddof=1) / math.sqrt(snr.size))
    dt = time.perf_counter() - start
    ok = ks <= 0.01 and abs(z) <= 3 and p.nu == N and dt < 30
    record(3, ok, "exact-case SNR law (u = e_k, D = I)",
           f"KS = {ks:.4f}, mean z = {z:+.2f}, nu = {p.nu}; {dt:.1f} s")


def test_c04_uniform_case_distribution():
    start = time.perf_counter()
    cfg = SystemConfig(4, 4, u=u_preset("uniform", 4))
    grid = (0.0, 10.0, 20.0)
    samples = empirical_snr_samples(SimulationPlan(cfg, 100_000, seed=4, snr_grid=grid))
    worst = 0.0
    for g, eta in enumerate(grid):
        p = fit_snr_model(cfg.with_transmit_snr_db(eta), 0)
        for k in range(cfg.K):
            ks = kstest(samples[g, :, k], lambda x: snr_cdf(p, x)).statistic
            worst = max(worst, ks)
    dt = time.perf_counter() - start
    record(4, worst <= 0.05 and dt < 60, "uniform-u SNR law vs Monte Carlo",
           f"max KS = {worst:.4f} over eta in {grid} dB, all users; {dt:.1f} s")


def test_c05_sep_cross_validation(sep_runs):
    runs, dt = sep_runs
    worst, points = 0.0, 0
    for key, (cfg, ci, zf, exact) in runs.items():
        for g in range(len(SEP_GRID)):
            if exact[g] < 1e-3:
                continue
            points += 1
            se = math.sqrt(exact[g] * (1 - exact[g]) / SEP_TRIALS)
            worst = max(worst, abs(ci.sep[g, 0] - exact[g]) / se)
    record(5, worst <= 3 and dt < 600, "exact SEP vs CI Monte Carlo (u = e_1, user 0)",
           f"max |z| = {worst:.2f} over {points} points with SEP >= 1e-3, "
           f"{SEP_TRIALS} trials; {dt:.1f} s with ZF")


def test_c06_approximation_tightness():
    start = time.perf_counter()
    worst, where = 0.0, None
    for N, K, M in SEP_CASES:
        cfg = _basis_config(N, K, M)
        for eta in SEP_GRID:
            p = fit_snr_model(cfg.with_transmit_snr_db(eta), 0)
            e = sep_exact(p, M).value
            if e < 1e-4:
                continue
            rel = abs(sep_approx(p, M).value - e) / e
            if rel > worst:
                worst, where = rel, (N, K, M, eta)
    dt = time.perf_counter() - start
    record(6, worst <= 0.03 and dt < 10, "three-term approximation within 3 %",
           f"max rel err {worst:.1%} at (N, K, M, eta) = {where}; {dt:.2f} s")


def _crossing_db(grid, sep, target):
    """First dB value where the log-SEP curve falls to ``target``."""
    logs = np.log(np.maximum(sep, 1e-300))
    for i in range(len(grid) - 1):
        if sep[i] >= target >= sep[i + 1] and sep[i + 1] > 0:
            f = (logs[i] - math.log(target)) / (logs[i] - logs[i + 1])
            return grid[i] + f * (grid[i + 1] - grid[i])
    return math.nan


def test_c07_ci_beats_zf(sep_runs):
    runs, _ = sep_runs
    worst = -math.inf
    for cfg, ci, zf, _ in runs.values():
        se = np.sqrt(ci.sep_se[:, 0] ** 2 + zf.sep_se[:, 0] ** 2)
        worst = max(worst, float(np.max((ci.sep[:, 0] - zf.sep[:, 0]) / np.maximum(se, 1e-300))))
    gains = {}
    ext = tuple(np.arange(15.0, 50.1, 2.5))
    for key, (cfg, ci, zf, _) in runs.items():
        target = ci.sep[SEP_GRID.index(15.0), 0]
        if target < 1e-3:
            continue
        zf_ext = run(SimulationPlan(cfg, SEP_TRIALS, SEP_SEED, precoder="zf", snr_grid=ext))
        gains[key] = _crossing_db(ext, zf_ext.sep[:, 0], target) - 15.0
    ok = worst <= 3 and gains and all(g > 0 for g in gains.values())
    detail = ", ".join(f"{k}: {g:.1f} dB" for k, g in gains.items())
    record(7, ok, "CI <= ZF + 3 sigma; horizontal gain at 15 dB",
           f"max (CI - ZF)/sigma = {worst:+.1f}; gain {detail}")


def test_c08_min_sum_solver():
    start = time.perf_counter()
    varpi = np.array([1.0, math.sqrt(2.0), 2.0])
    cfg = SystemConfig(3, 3, M=4, distances=list(varpi ** (-1 / 2.7))).with_transmit_snr_db(30.0)
    zeta = effective_zeta(cfg)
    users = [fit_snr_model(cfg, k, model="gamma_n") for k in range(3)]
    shares = min_sum_numeric(users, 4).shares
    gap = float(np.max(np.abs(shares - min_sum_closed_form(zeta).shares)))

    flat = SystemConfig(3, 3, M=4).with_transmit_snr_db(30.0)
    flat_users = [fit_snr_model(flat, k) for k in range(3)]
    flat_gap = float(np.max(np.abs(min_sum_numeric(flat_users, 4).shares - 1 / 3)))

    rng = np.random.default_rng(8)
    beats = True
    for _ in range(10):
        K = int(rng.integers(2, 5))
        c = SystemConfig(K, K, M=int(rng.choice([2, 4, 8])),
                         distances=list(rng.uniform(1.0, 3.0, K)))
        c = c.with_transmit_snr_db(float(rng.uniform(0, 30)))
        us = [fit_snr_model(c, k) for k in range(K)]
        r = min_sum_numeric(us, c.M)
        beats &= r.objective_value <= sum_sep(epa(K).shares, us, c.M) + 1e-15
    dt = time.perf_counter() - start
    ok = gap <= 0.02 and flat_gap <= 1e-6 and beats and dt < 5
    record(8, ok, "Min-Sum solver",
           f"L_inf vs closed form {gap:.3f} (zeta 1:2:4, 30 dB, shares "
           f"{np.round(shares, 3).tolist()}); uniform gap {flat_gap:.1e}; "
           f"<= EPA on 10 instances: {beats}; {dt:.2f} s")


def test_c09_min_max_ordering():
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    bad = []
    for i in range(20):
        K = (2, 3, 8)[i % 3]
        cfg = SystemConfig(K, K, M=int(rng.choice([2, 4, 8])),
                           distances=list(rng.uniform(1.0, 3.0, K)))
        cfg = cfg.with_transmit_snr_db(float(rng.choice([10.0, 20.0, 30.0])))
        users = [fit_snr_model(cfg, k) for k in range(K)]
        mm = min_max_numeric(users, cfg.M, seed=i).objective_value
        e = max_sep(epa(K).shares, users, cfg.M)
        s = max_sep(min_sum_numeric(users, cfg.M).shares, users, cfg.M)
        if mm > e or mm > s:
            bad.append(i)
    dt = time.perf_counter() - start
    record(9, not bad and dt < 120, "Min-Max has the lowest max-SEP",
           f"violations on {len(bad)} of 20 instances (K in 2, 3, 8); {dt:.1f} s")


def test_c10_throughput_saturation():
    start = time.perf_counter()
    spec = load_experiment(CONFIGS / "fig6_throughput.toml", methods=("analytic_exact",))
    (table,) = compute_experiment(spec)
    eta = table.column("snr_db")
    top = {M: table.column(f"tau_M{M}")[eta == 40.0][0] for M in (2, 4, 8, 16)}
    sat = all(abs(top[M] - 100 * 4 * math.log2(M)) <= 1e-3 * 100 * 4 * math.log2(M)
              for M in top)
    diff = table.column("tau_M2") - table.column("tau_M16")
    cross = bool(np.any(diff > 0) and np.any(diff < 0))
    dt = time.perf_counter() - start
    record(10, sat and cross and dt < 60, "throughput saturation and crossover",
           f"40 dB: {[round(float(v), 3) for v in top.values()]}; BPSK/16-PSK crossover {cross}; "
           f"{dt:.2f} s")


def test_c11_power_audit():
    start = time.perf_counter()
    cfg = SystemConfig(4, 4, transmit_power=3.0)
    ci = run(SimulationPlan(cfg, 100_000, seed=11))
    zf = run(SimulationPlan(cfg, 100_000, seed=11, precoder="zf"))
    ci_rel = ci.mean_tx_power / 3.0 - 1
    zf_dev = max(abs(v / 3.0 - 1) for v in zf.tx_power_range)
    dt = time.perf_counter() - start
    record(11, abs(ci_rel) <= 0.02 and zf_dev <= 1e-12 and dt < 30, "transmit power audit",
           f"CI mean/P_p - 1 = {ci_rel:+.4f}, ZF max per-trial deviation {zf_dev:.1e}; {dt:.1f} s")


def test_c12_pe_crossover():
    start = time.perf_counter()
    (table,) = compute_experiment(load_experiment(CONFIGS / "fig7_efficiency.toml"))
    N = table.column("N")
    diff = table.column("pe_M4") - table.column("pe_M32")
    idx = np.flatnonzero(np.diff(np.sign(diff)) != 0)
    ok = idx.size > 0 and N[idx[0]] >= 4 and N[idx[0] + 1] <= 64
    dt = time.perf_counter() - start
    where = f"between N = {N[idx[0]]:.0f} and {N[idx[0] + 1]:.0f}" if idx.size else "none"
    record(12, ok and dt < 60, "power-efficiency crossover M = 4 vs 32",
           f"sign change {where}; {dt:.2f} s")


def test_c13_determinism(tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("CI_LINKPERF_THREADS", threads)
        out = tmp_path / threads
        code = main(["run", "--config", str(CONFIGS / "fig4_sep_n4.toml"), "--out", str(out),
                     "--trials", "40000"])
        assert code == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    same = outs[0] == outs[1] and len(outs[0]) == 4
    record(13, same, "byte-identical CSV across thread counts",
           f"{len(outs[0])} CSV files compared, CI_LINKPERF_THREADS 1 vs 4")
