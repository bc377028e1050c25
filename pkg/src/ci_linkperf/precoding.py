"""Closed-form constructive-interference precoder and the ZF baseline.

The CI transmit vector for symbol vector ``x`` is

    W x = sqrt(P_p) * beta_p * H^H (H H^H)^{-1} diag(V^{-1} u) x,
    V   = diag(x^H) (H H^H)^{-1} diag(x),

where the ``x x^H / K`` factor of the full precoding matrix has been folded
in (``x^H x = K`` for unit-modulus PSK). User ``k`` therefore receives
``sqrt(P_p) beta_p (V^{-1} u)_k x_k`` without noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import SystemConfig

__all__ = [
    "SingularChannelError",
    "CiPrecodeResult",
    "ZfPrecodeResult",
    "SnrFactors",
    "COND_LIMIT",
    "beta_p",
    "beta_p_matrix_form",
    "ci_precoding_matrix",
    "ci_precode",
    "ci_snr_factors",
    "received_snr_ci",
    "zf_precode",
    "effective_zeta",
    "ci_transmit_batch",
    "zf_transmit_batch",
    "singular_mask",
]

COND_LIMIT = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class CiPrecodeResult:
    transmit_vector: np.ndarray
    beta_p: float
    per_user_amplitude: np.ndarray
    instantaneous_power: float


@dataclass(frozen=True, eq=False)
class ZfPrecodeResult:
    transmit_vector: np.ndarray
    scaling: float
    instantaneous_power: float


@dataclass(frozen=True)
class SnrFactors:
    """``snr = alpha * |g|**2`` for one user; ``g`` is complex in general."""

    snr: float
    alpha: float
    g: complex


def beta_p(config: SystemConfig) -> float:
    """Long-term power normalisation ``1 / sqrt(N * sum_k varpi_k u_k^2)``.

    Valid for any unit-modulus symbol vector; see :func:`beta_p_matrix_form`.
    """
    u = config.u
    q = config.N * float(np.sum(config.varpi * u * u))
    if not q > 0:
        raise ValueError("u must have at least one non-zero entry")
    return 1.0 / np.sqrt(q)


def beta_p_matrix_form(config: SystemConfig, x) -> float:
    """``1 / sqrt(u^H diag(x^H)^{-1} N Sigma diag(x)^{-1} u)`` evaluated with
    explicit matrices."""
    x = np.asarray(x, dtype=complex)
    u = config.u.astype(complex)
    left = np.linalg.inv(np.diag(np.conj(x)))
    right = np.linalg.inv(np.diag(x))
    q = u.conj() @ left @ (config.N * np.diag(config.varpi)) @ right @ u
    if not q.real > 0:
        raise ValueError("u must have at least one non-zero entry")
    return float(1.0 / np.sqrt(q.real))


def _gram_inverse(H):
    G = H @ H.conj().T
    if np.linalg.cond(G) > COND_LIMIT:
        raise SingularChannelError("H H^H is singular to working precision")
    return G, np.linalg.inv(G)


def ci_precoding_matrix(H, x, config: SystemConfig) -> np.ndarray:
    """The full ``N x K`` CI matrix ``(beta/K) H^H (HH^H)^{-1} diag(V^{-1}u) x x^H``.

    Only used to cross-check :func:`ci_precode`; the simulator never builds it.
    """
    H = np.asarray(H, dtype=complex)
    x = np.asarray(x, dtype=complex)
    _, Ginv = _gram_inverse(H)
    V = np.diag(x.conj()) @ Ginv @ np.diag(x)
    amp = np.linalg.solve(V, config.u.astype(complex))
    beta = np.sqrt(config.transmit_power) * beta_p(config)
    return (beta / config.K) * H.conj().T @ Ginv @ np.diag(amp) @ np.outer(x, x.conj())


def ci_precode(H, x, config: SystemConfig) -> CiPrecodeResult:
    H = np.asarray(H, dtype=complex)
    x = np.asarray(x, dtype=complex)
    _, Ginv = _gram_inverse(H)
    V = np.diag(x.conj()) @ Ginv @ np.diag(x)
    amp = np.linalg.solve(V, config.u.astype(complex))
    bp = beta_p(config)
    t = np.sqrt(config.transmit_power) * bp * (H.conj().T @ (Ginv @ (amp * x)))
    return CiPrecodeResult(t, bp, amp, float(np.vdot(t, t).real))


def effective_zeta(config: SystemConfig) -> np.ndarray:
    """Per-user SNR scale per unit transmit power, ``beta_p^2 varpi_k^2 u_k^2 / sigma_k^2``.

    Multiplying by ``P_p`` gives ``alpha_k`` in ``snr_k = alpha_k |g|^2`` with
    ``g = (V^{-1}u)_k / (varpi_k u_k)``.
    """
    bp = beta_p(config)
    return bp * bp * config.varpi ** 2 * config.u ** 2 / config.noise_powers


def ci_snr_factors(H, x, config: SystemConfig, k: int) -> SnrFactors:
    """Received SNR of user ``k`` and its ``alpha_k |g|^2`` factorisation.

    If ``u_k = 0`` the factorisation is undefined: ``alpha`` is returned as 0
    and ``g`` as NaN while ``snr`` is still the direct value.
    """
    res = ci_precode(H, x, config)
    h = np.asarray(H, dtype=complex)[k]
    snr = abs(h @ res.transmit_vector) ** 2 / config.noise_powers[k]
    uk = config.u[k]
    if uk == 0:
        return SnrFactors(float(snr), 0.0, complex(np.nan, np.nan))
    alpha = config.transmit_power * effective_zeta(config)[k]
    g = res.per_user_amplitude[k] / (config.varpi[k] * uk)
    return SnrFactors(float(snr), float(alpha), complex(g))


def received_snr_ci(H, x, config: SystemConfig, k: int) -> float:
    """``|h_k W x|^2 / sigma_k^2`` for the CI precoder."""
    return ci_snr_factors(H, x, config, k).snr


def zf_precode(H, x, P_p: float) -> ZfPrecodeResult:
    """Zero-forcing with per-symbol normalisation to exactly ``P_p``."""
    H = np.asarray(H, dtype=complex)
    x = np.asarray(x, dtype=complex)
    _, Ginv = _gram_inverse(H)
    raw = H.conj().T @ (Ginv @ x)
    scale = np.sqrt(P_p) / np.linalg.norm(raw)
    t = scale * raw
    return ZfPrecodeResult(t, float(scale), float(np.vdot(t, t).real))


# --- batched kernels used by the Monte Carlo engine -------------------------

def singular_mask(G) -> np.ndarray:
    """Boolean mask of Gram matrices whose condition number exceeds the limit."""
    return np.linalg.cond(G) > COND_LIMIT


def ci_transmit_batch(H, Ginv, G, x, u, scale):
    """CI transmit vectors for a stack of channels ``H`` (T, K, N).

    Uses ``V^{-1} = diag(x)^{-1} (H H^H) diag(x^H)^{-1}`` so no second inverse
    is needed. Returns ``(t, amplitudes)`` with ``t`` of shape (T, N).
    """
    Vinv = (1.0 / x)[:, :, None] * G * (1.0 / np.conj(x))[:, None, :]
    amp = Vinv @ u.astype(complex)
    c = amp * x
    t = scale * np.einsum("tkn,tk->tn", np.conj(H), np.einsum("tjk,tk->tj", Ginv, c))
    return t, amp


def zf_transmit_batch(H, Ginv, x, P_p):
    raw = np.einsum("tkn,tk->tn", np.conj(H), np.einsum("tjk,tk->tj", Ginv, x))
    norm = np.linalg.norm(raw, axis=1)
    return raw * (np.sqrt(P_p) / norm)[:, None]
