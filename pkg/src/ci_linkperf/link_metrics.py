"""Block error rate, throughput and power efficiency."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

__all__ = [
    "BlockConfig",
    "PowerModel",
    "FIG7_POWER_MODEL",
    "block_error_rate",
    "throughput",
    "throughput_from_error_rate",
    "total_power",
    "power_efficiency",
    "dbm_to_watts",
]


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class BlockConfig:
    """``block_bits`` items per block, of which ``correctable`` errors are tolerated.

    When built with :meth:`from_symbols` the block holds ``F`` symbols of
    ``c = log2 M`` bits, ``block_bits = c * F``.
    """

    block_bits: int
    correctable: int = 0
    bits_per_symbol: int = 1
    block_length: int | None = None

    def __post_init__(self):
        if self.block_bits < 1 or self.correctable < 0:
            raise ValueError("need block_bits >= 1 and correctable >= 0")
        if self.correctable > self.block_bits:
            raise ValueError("correctable errors cannot exceed the block size")
        if self.block_length is not None and self.block_bits != self.bits_per_symbol * self.block_length:
            raise ValueError("block_bits must equal bits_per_symbol * block_length")

    @classmethod
    def from_symbols(cls, M: int, F: int, Q: int) -> "BlockConfig":
        c = int(M).bit_length() - 1
        return cls(c * F, Q, c, F)


@dataclass(frozen=True)
class PowerModel:
    """Transmitter power model; powers in watts, losses as fractions."""

    eta_pa: float = 1.0
    P_D: float = 0.0
    P_m: float = 0.0
    P_f: float = 0.0
    P_sy: float = 0.0
    P_DS: float = 0.0
    loss_dc: float = 0.0
    loss_ms: float = 0.0
    loss_cool: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta_pa <= 1:
            raise ValueError("amplifier efficiency must lie in (0, 1]")
        if min(self.P_D, self.P_m, self.P_f, self.P_sy, self.P_DS) < 0:
            raise ValueError("component powers must be >= 0")
        for loss in (self.loss_dc, self.loss_ms, self.loss_cool):
            if not 0 <= loss < 1:
                raise ValueError(f"losses must lie in [0, 1), got {loss}")


FIG7_POWER_MODEL = PowerModel(eta_pa=0.8, P_D=7.8e-3, P_m=15.2e-3, P_f=10e-3, P_sy=25e-3,
                              P_DS=2.0, loss_dc=0.075, loss_ms=0.09, loss_cool=0.0)


def block_error_rate(p, cfg: BlockConfig):
    """``P(more than Q of the block's items are in error)`` for i.i.d. errors."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("error probability must lie in [0, 1]")
    out = binom.sf(cfg.correctable, cfg.block_bits, p)
    return float(out) if out.ndim == 0 else out


def throughput(P_B, M: int, block_size: int, K: int):
    """``(1 - P_B) log2(M) block_size K`` bits per channel use."""
    P_B = np.asarray(P_B, dtype=float)
    out = (1.0 - P_B) * math.log2(M) * block_size * K
    return float(out) if out.ndim == 0 else out


def throughput_from_error_rate(p, M: int, F: int, Q: int, K: int, level: str = "bit"):
    """Throughput with ``p`` either a bit error rate (``level="bit"``, block of
    ``log2(M) F`` bits) or a symbol error rate (``level="symbol"``, block of
    ``F`` symbols)."""
    if level == "bit":
        cfg = BlockConfig.from_symbols(M, F, Q)
    elif level == "symbol":
        cfg = BlockConfig(F, Q)
    else:
        raise ValueError(f"unknown level {level!r}")
    return throughput(block_error_rate(p, cfg), M, F, K)


def total_power(P_p: float, model: PowerModel, N: int) -> float:
    """Consumed power: amplifier, RF chains, synthesiser and signal processor,
    inflated by the supply and cooling losses."""
    if not P_p >= 0:
        raise ValueError("transmit power must be >= 0")
    rf = N * (model.P_D + model.P_m + model.P_f) + model.P_sy
    denom = (1.0 - model.loss_dc) * (1.0 - model.loss_ms) * (1.0 - model.loss_cool)
    return (P_p / model.eta_pa + rf + model.P_DS) / denom


def power_efficiency(tau, P_tot):
    P_tot = np.asarray(P_tot, dtype=float)
    if np.any(~(P_tot > 0)):
        raise ValueError("total power must be > 0")
    out = np.asarray(tau, dtype=float) / P_tot
    return float(out) if out.ndim == 0 else out
