"""Downlink MU-MIMO system model: configuration, path loss, Rayleigh channels
and M-PSK mapping/detection."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "PathLossMatrix",
    "ChannelRealization",
    "Constellation",
    "config_problems",
    "path_loss",
    "sample_channel",
    "sample_channels",
    "psk_modulate",
    "psk_detect",
    "gray_encode",
    "u_preset",
    "db_to_linear",
    "linear_to_db",
]

DEFAULT_PATH_LOSS_EXPONENT = 2.7


class ConfigError(ValueError):
    """Raised when a :class:`SystemConfig` violates one of its invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def u_preset(kind: str, K: int, k: int = 0) -> np.ndarray:
    """CI weight vector presets: ``"uniform"`` (1/K each) or ``"basis"`` (e_k)."""
    if kind == "uniform":
        return np.full(K, 1.0 / K)
    if kind == "basis":
        if not 0 <= k < K:
            raise ValueError(f"basis index {k} outside [0, {K})")
        u = np.zeros(K)
        u[k] = 1.0
        return u
    raise ValueError(f"unknown u preset {kind!r}")


def _is_power_of_two(M) -> bool:
    return isinstance(M, (int, np.integer)) and M >= 2 and (M & (M - 1)) == 0


def config_problems(N, K, M, distances, noise_powers, transmit_power, u,
                    path_loss_exponent=DEFAULT_PATH_LOSS_EXPONENT) -> list[str]:
    """List every violated invariant of a system configuration (empty if valid)."""
    problems = []
    for name, val in (("N", N), ("K", K)):
        if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < 1:
            problems.append(f"{name} must be a positive integer (got {val!r})")
    if not _is_power_of_two(M):
        problems.append(f"M must be a power of two >= 2 (got {M!r})")
    if not problems and N < K:
        problems.append(f"rank requirement N >= K violated (N={N}, K={K}): "
                        "H H^H is singular")
    if not (np.isfinite(path_loss_exponent) and path_loss_exponent >= 0):
        problems.append(f"path-loss exponent must be >= 0 (got {path_loss_exponent})")
    if not (np.isfinite(transmit_power) and transmit_power > 0):
        problems.append(f"transmit power P_p must be > 0 (got {transmit_power})")
    K_ok = isinstance(K, (int, np.integer)) and K >= 1
    for name, vec in (("distances", distances), ("noise_powers", noise_powers), ("u", u)):
        arr = np.asarray(vec, dtype=float)
        if K_ok and arr.shape != (K,):
            problems.append(f"{name} must have length K={K} (got shape {arr.shape})")
    d = np.asarray(distances, dtype=float)
    if np.any(~(d > 0)):
        problems.append("distances must be > 0")
    s2 = np.asarray(noise_powers, dtype=float)
    if np.any(~(s2 > 0)):
        problems.append("noise powers must be > 0")
    uu = np.asarray(u, dtype=float)
    if np.any(uu < 0) or not np.all(np.isfinite(uu)):
        problems.append("u entries must be finite and >= 0")
    elif abs(uu.sum() - 1.0) > 1e-12:
        problems.append(f"sum(u) = 1 violated (sum = {uu.sum():.12g})")
    return problems


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Physical configuration of the downlink.

    Powers are linear. ``u`` is the CI weight vector (non-negative, unit sum).
    """

    N: int
    K: int
    M: int = 4
    distances: np.ndarray = None
    noise_powers: np.ndarray = None
    transmit_power: float = 1.0
    u: np.ndarray = None
    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT

    def __post_init__(self):
        K = self.K
        if self.distances is None:
            object.__setattr__(self, "distances", np.ones(K))
        if self.noise_powers is None:
            object.__setattr__(self, "noise_powers", np.ones(K))
        if self.u is None:
            object.__setattr__(self, "u", np.full(K, 1.0 / K) if K else np.zeros(0))
        for name in ("distances", "noise_powers", "u"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "transmit_power", float(self.transmit_power))
        object.__setattr__(self, "path_loss_exponent", float(self.path_loss_exponent))
        problems = config_problems(self.N, self.K, self.M, self.distances,
                                   self.noise_powers, self.transmit_power, self.u,
                                   self.path_loss_exponent)
        if problems:
            raise ConfigError(problems)

    @property
    def varpi(self) -> np.ndarray:
        return path_loss(self.distances, self.path_loss_exponent).varpi

    @property
    def transmit_snr(self) -> np.ndarray:
        """Per-user P_p / sigma_k^2 (linear)."""
        return self.transmit_power / self.noise_powers

    def with_transmit_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with a common noise power set so that P_p / sigma^2 = snr_db."""
        sigma2 = self.transmit_power / float(db_to_linear(snr_db))
        return replace(self, noise_powers=np.full(self.K, sigma2))

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PathLossMatrix:
    varpi: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.varpi)


def path_loss(distances, m_exponent: float = DEFAULT_PATH_LOSS_EXPONENT) -> PathLossMatrix:
    """Large-scale gains ``d_k ** -m``."""
    d = np.asarray(distances, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distances must be strictly positive")
    return PathLossMatrix(d ** (-float(m_exponent)))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    H: np.ndarray
    Htilde: np.ndarray
    D: PathLossMatrix


def _unit_cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def sample_channel(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """One draw of ``H = D^{1/2} Htilde`` with i.i.d. CN(0, 1) small-scale fading."""
    D = path_loss(config.distances, config.path_loss_exponent)
    Ht = _unit_cn(rng, (config.K, config.N))
    return ChannelRealization(np.sqrt(D.varpi)[:, None] * Ht, Ht, D)


def sample_channels(config: SystemConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` independent channel matrices stacked as ``(count, K, N)``."""
    Ht = _unit_cn(rng, (count, config.K, config.N))
    return np.sqrt(config.varpi)[None, :, None] * Ht


@dataclass(frozen=True)
class Constellation:
    M: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not _is_power_of_two(self.M):
            raise ValueError(f"M must be a power of two >= 2 (got {self.M!r})")
        pts = np.exp(2j * np.pi * np.arange(self.M) / self.M)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def bits_per_symbol(self) -> int:
        return int(self.M).bit_length() - 1


def _order(constellation) -> int:
    M = constellation.M if isinstance(constellation, Constellation) else constellation
    if not _is_power_of_two(M):
        raise ValueError(f"M must be a power of two >= 2 (got {M!r})")
    return int(M)


def psk_modulate(constellation, index):
    """Map symbol indices to ``exp(j 2 pi index / M)``."""
    M = _order(constellation)
    idx = np.asarray(index)
    if not np.issubdtype(idx.dtype, np.integer) or np.any((idx < 0) | (idx >= M)):
        raise ValueError(f"symbol index must be an integer in [0, {M})")
    out = np.exp(2j * np.pi * idx / M)
    return complex(out) if out.ndim == 0 else out


def psk_detect(constellation, received):
    """Nearest-phase M-PSK decision.

    Ties go to the lower index; a zero sample decodes to index 0.
    """
    M = _order(constellation)
    r = np.asarray(received, dtype=complex)
    t = np.mod(np.angle(r), 2.0 * np.pi) * (M / (2.0 * np.pi))
    idx = np.ceil(t - 0.5).astype(np.int64) % M
    # the boundary between M-1 and 0 is a tie toward 0
    idx = np.where(t == M - 0.5, 0, idx)
    return int(idx) if idx.ndim == 0 else idx


def gray_encode(index):
    idx = np.asarray(index)
    return idx ^ (idx >> 1)
