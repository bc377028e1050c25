"""Link-level Monte Carlo simulation of the CI and ZF downlinks.

Trials are processed in fixed-size chunks. Chunk ``c`` draws from its own
generator ``SeedSequence(seed, spawn_key=(c,))`` and partial sums are reduced
in chunk order, so results do not depend on the number of worker threads.
All points of the SNR grid reuse the same channels, symbols and unit noise
samples (common random numbers); only the noise variance changes.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .precoding import beta_p, ci_transmit_batch, singular_mask, zf_transmit_batch
from .snr_statistics import GenGammaParams
from .system import Constellation, SystemConfig, db_to_linear, gray_encode, psk_detect

__all__ = [
    "CHUNK_SIZE",
    "MAX_REDRAW_FRACTION",
    "DataQualityError",
    "SimulationPlan",
    "SimulationReport",
    "run",
    "empirical_snr_samples",
    "transmit_power_audit",
    "worker_count",
    "min_snr_sep_oracle",
    "binomial_se",
]

CHUNK_SIZE = 1 << 14
MAX_REDRAW_FRACTION = 1e-3
COLLECTABLE = frozenset({"sep", "bep", "snr_samples", "tx_power"})


class DataQualityError(RuntimeError):
    pass


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("CI_LINKPERF_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def binomial_se(p, n):
    p = np.asarray(p, dtype=float)
    return np.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """What to simulate.

    ``snr_grid`` holds transmit SNRs in dB, each mapped to a common noise
    power ``config.transmit_power / eta``; ``None`` keeps the configured noise
    powers. ``transmit_power`` overrides the radiated power (0 allowed) while
    leaving the noise powers tied to the configured value.
    """

    config: SystemConfig
    trials: int
    seed: int = 0
    precoder: str = "ci"
    collect: tuple = ("sep",)
    snr_grid: tuple | None = None
    transmit_power: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "collect", tuple(self.collect))
        if self.snr_grid is not None:
            object.__setattr__(self, "snr_grid", tuple(float(v) for v in self.snr_grid))
            if not self.snr_grid:
                raise ValueError("snr_grid must be non-empty")
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if self.precoder not in ("ci", "zf"):
            raise ValueError(f"precoder must be 'ci' or 'zf', got {self.precoder!r}")
        bad = set(self.collect) - COLLECTABLE
        if bad:
            raise ValueError(f"unknown collect items {sorted(bad)}")
        if self.transmit_power is not None and not self.transmit_power >= 0:
            raise ValueError("transmit_power override must be >= 0")

    @property
    def noise_table(self) -> np.ndarray:
        """Noise powers per grid point and user, shape (G, K)."""
        cfg = self.config
        if self.snr_grid is None:
            return cfg.noise_powers[None, :].copy()
        eta = db_to_linear(np.asarray(self.snr_grid))
        return np.repeat((cfg.transmit_power / eta)[:, None], cfg.K, axis=1)

    @property
    def radiated_power(self) -> float:
        return self.config.transmit_power if self.transmit_power is None else float(self.transmit_power)


@dataclass(frozen=True, eq=False)
class SimulationReport:
    snr_grid_db: tuple | None
    trials: int
    seed: int
    precoder: str
    symbol_errors: np.ndarray
    bit_errors: np.ndarray | None
    bits_per_symbol: int
    snr_mean: np.ndarray | None
    snr_var: np.ndarray | None
    snr_samples: np.ndarray | None
    mean_tx_power: float
    tx_power_se: float
    tx_power_range: tuple
    redraws: int
    wall_time: float
    workers: int

    @property
    def sep(self) -> np.ndarray:
        """Per-grid-point, per-user symbol error rate, shape (G, K)."""
        return self.symbol_errors / self.trials

    @property
    def sep_se(self) -> np.ndarray:
        return binomial_se(self.sep, self.trials)

    @property
    def sep_all(self) -> np.ndarray:
        """User-averaged symbol error rate, shape (G,)."""
        return self.symbol_errors.sum(axis=1) / (self.trials * self.symbol_errors.shape[1])

    @property
    def sep_all_se(self) -> np.ndarray:
        return binomial_se(self.sep_all, self.trials * self.symbol_errors.shape[1])

    @property
    def bep(self) -> np.ndarray:
        if self.bit_errors is None:
            raise ValueError("bit errors were not collected")
        return self.bit_errors / (self.trials * self.bits_per_symbol)

    @property
    def bep_se(self) -> np.ndarray:
        return binomial_se(self.bep, self.trials * self.bits_per_symbol)


@dataclass
class _Partial:
    sym: np.ndarray
    bits: np.ndarray
    snr_sum: np.ndarray
    snr_sq: np.ndarray
    snr_samples: np.ndarray | None
    pw_sum: float
    pw_sq: float
    pw_min: float
    pw_max: float
    redraws: int
    dump: list = field(default_factory=list)


def _chunk_bounds(trials):
    n_chunks = math.ceil(trials / CHUNK_SIZE)
    return [(c, c * CHUNK_SIZE, min(trials, (c + 1) * CHUNK_SIZE)) for c in range(n_chunks)]


def _draw_channels(cfg, rng, T):
    sq = np.sqrt(cfg.varpi)[None, :, None]
    shape = (T, cfg.K, cfg.N)
    H = sq * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)
    G = H @ np.conj(np.swapaxes(H, 1, 2))
    bad = singular_mask(G)
    redraws = 0
    while bad.any():
        idx = np.flatnonzero(bad)
        redraws += idx.size
        m = idx.size
        sub = sq * (rng.standard_normal((m,) + shape[1:]) + 1j * rng.standard_normal((m,) + shape[1:])) * math.sqrt(0.5)
        H[idx] = sub
        G[idx] = sub @ np.conj(np.swapaxes(sub, 1, 2))
        bad = np.zeros(T, dtype=bool)
        bad[idx] = singular_mask(G[idx])
    return H, G, redraws


def _run_chunk(plan: SimulationPlan, chunk: int, T: int, want_dump: bool) -> _Partial:
    cfg = plan.config
    rng = np.random.default_rng(np.random.SeedSequence(plan.seed, spawn_key=(chunk,)))
    const = Constellation(cfg.M)
    H, G, redraws = _draw_channels(cfg, rng, T)
    tx_idx = rng.integers(0, cfg.M, size=(T, cfg.K))
    noise = (rng.standard_normal((T, cfg.K)) + 1j * rng.standard_normal((T, cfg.K))) * math.sqrt(0.5)
    x = const.points[tx_idx]
    Ginv = np.linalg.inv(G)
    P = plan.radiated_power
    if plan.precoder == "ci":
        t, _ = ci_transmit_batch(H, Ginv, G, x, cfg.u, math.sqrt(P) * beta_p(cfg))
    else:
        t = zf_transmit_batch(H, Ginv, x, P) if P > 0 else np.zeros((T, cfg.N), complex)
    r = np.einsum("tkn,tn->tk", H, t)
    pw = np.sum(np.abs(t) ** 2, axis=1)
    sig = np.abs(r) ** 2
    table = plan.noise_table
    Gn, K = table.shape
    sym = np.zeros((Gn, K), dtype=np.int64)
    bits = np.zeros((Gn, K), dtype=np.int64)
    snr_sum = np.zeros((Gn, K))
    snr_sq = np.zeros((Gn, K))
    keep = "snr_samples" in plan.collect
    samples = np.empty((Gn, T, K)) if keep else None
    gray_tx = gray_encode(tx_idx)
    dump = []
    for g in range(Gn):
        s2 = table[g]
        y = r + np.sqrt(s2)[None, :] * noise
        rx_idx = psk_detect(const, y)
        err = rx_idx != tx_idx
        sym[g] = err.sum(axis=0)
        if "bep" in plan.collect:
            bits[g] = np.bitwise_count(gray_tx ^ gray_encode(rx_idx)).sum(axis=0)
        snr = sig / s2[None, :]
        snr_sum[g] = snr.sum(axis=0)
        snr_sq[g] = (snr * snr).sum(axis=0)
        if keep:
            samples[g] = snr
        if want_dump:
            dump.append((g, snr, tx_idx, rx_idx))
    return _Partial(sym, bits, snr_sum, snr_sq, samples, float(pw.sum()),
                    float((pw * pw).sum()), float(pw.min()), float(pw.max()), redraws, dump)


def run(plan: SimulationPlan, workers: int | None = None,
        dump_path: str | os.PathLike | None = None) -> SimulationReport:
    """Simulate ``plan.trials`` independent channel and symbol draws.

    Raises :class:`DataQualityError` if more than 0.1 % of the channel draws
    had to be redrawn as singular.
    """
    start = time.perf_counter()
    n_workers = worker_count(workers)
    bounds = _chunk_bounds(plan.trials)
    want_dump = dump_path is not None
    job = lambda b: _run_chunk(plan, b[0], b[2] - b[1], want_dump)
    if n_workers == 1 or len(bounds) == 1:
        parts = [job(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(job, bounds))
    cfg = plan.config
    sym = sum(p.sym for p in parts)
    bits = sum(p.bits for p in parts)
    snr_sum = sum(p.snr_sum for p in parts)
    snr_sq = sum(p.snr_sq for p in parts)
    pw_sum = math.fsum(p.pw_sum for p in parts)
    pw_sq = math.fsum(p.pw_sq for p in parts)
    redraws = sum(p.redraws for p in parts)
    if redraws > MAX_REDRAW_FRACTION * plan.trials:
        raise DataQualityError(f"{redraws} singular channel redraws exceed "
                               f"{MAX_REDRAW_FRACTION:.1%} of {plan.trials} trials")
    n = plan.trials
    mean_pw = pw_sum / n
    var_pw = max(pw_sq / n - mean_pw * mean_pw, 0.0)
    snr_mean = snr_sum / n
    snr_var = np.maximum(snr_sq / n - snr_mean ** 2, 0.0)
    samples = (np.concatenate([p.snr_samples for p in parts], axis=1)
               if "snr_samples" in plan.collect else None)
    if want_dump:
        _write_dump(dump_path, plan, bounds, parts)
    return SimulationReport(
        plan.snr_grid, n, plan.seed, plan.precoder, sym,
        bits if "bep" in plan.collect else None, Constellation(cfg.M).bits_per_symbol,
        snr_mean, snr_var, samples, mean_pw, math.sqrt(var_pw / n),
        (min(p.pw_min for p in parts), max(p.pw_max for p in parts)), redraws,
        time.perf_counter() - start, n_workers,
    )


def _write_dump(path, plan, bounds, parts):
    grid = plan.snr_grid if plan.snr_grid is not None else (float("nan"),)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "eta_db", "user", "snr", "symbol_tx", "symbol_rx"])
        for (_, lo, _), part in zip(bounds, parts):
            for g, snr, tx, rx in part.dump:
                T, K = snr.shape
                for t in range(T):
                    for k in range(K):
                        w.writerow([lo + t, repr(grid[g]), k, repr(float(snr[t, k])),
                                    int(tx[t, k]), int(rx[t, k])])


def empirical_snr_samples(plan: SimulationPlan, workers: int | None = None) -> np.ndarray:
    """Received SNR samples ``|h_k W x|^2 / sigma_k^2``, shape (G, trials, K)."""
    collect = tuple(sorted(set(plan.collect) | {"snr_samples"}))
    p = SimulationPlan(plan.config, plan.trials, plan.seed, plan.precoder, collect,
                       plan.snr_grid, plan.transmit_power)
    return run(p, workers).snr_samples


def transmit_power_audit(plan: SimulationPlan, workers: int | None = None) -> float:
    """Mean of ``||W x||^2`` over the trials."""
    return run(plan, workers).mean_tx_power


def min_snr_sep_oracle(ensemble: Sequence[GenGammaParams], M: int, trials: int,
                       seed: int = 0) -> tuple[float, float]:
    """SEP of M-PSK at the minimum of independently drawn user SNRs.

    Each trial draws ``snr_k = scale_k G_k^2`` independently per user, takes
    the minimum and detects one symbol over AWGN at that SNR. Returns the
    error rate and its binomial standard error.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    const = Constellation(M)
    snr = np.full(trials, np.inf)
    for p in ensemble:
        snr = np.minimum(snr, p.scale * rng.gamma(p.nu, 1.0, trials) ** 2)
    idx = rng.integers(0, M, trials)
    noise = (rng.standard_normal(trials) + 1j * rng.standard_normal(trials)) * math.sqrt(0.5)
    y = np.sqrt(snr) * const.points[idx] + noise
    rate = float(np.mean(psk_detect(const, y) != idx))
    return rate, float(binomial_se(rate, trials))
