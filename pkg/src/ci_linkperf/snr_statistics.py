"""Statistics of the CI received SNR.

The working law is ``snr = a * G**2`` with ``G ~ Gamma(nu, 1)``, i.e. a
generalised Gamma variable with ``p = 1/2``, ``d = nu/2`` and scale ``a``.
For ``u = e_k`` this is exact with ``nu = N``; for other weight vectors it is
an approximation (see :func:`gamma_moment_match`).

Laplace transforms ``L(s) = E[exp(-s * snr)]`` are evaluated with
Gauss-Laguerre sums. The default ``"scaled"`` method rescales the Laguerre
variable by ``r = 1 / (1 + sqrt(s a))`` before applying the rule, so the
integrand stays resolved when ``s a`` is large (high SNR); with ``r = 1`` it
is the plain node sum ``sum_i H_i exp(-s a g_i^2) g_i^(nu-1) / Gamma(nu)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, gammaincc, gammaln

from .precoding import effective_zeta
from .quadrature import DEFAULT_LAGUERRE_ORDER, QuadratureRule, gauss_laguerre
from .system import SystemConfig

__all__ = [
    "DegenerateUserError",
    "GammaModel",
    "GenGammaParams",
    "MinSnrEnsemble",
    "g_moments",
    "gamma_moment_match",
    "fit_snr_model",
    "user_models",
    "snr_cdf",
    "snr_pdf",
    "snr_quantile",
    "laplace_snr",
    "gamma_square_transform",
    "average_snr",
    "outage",
    "laplace_min_snr",
    "min_snr_tail_integral",
    "min_tail_arrays",
    "min_laplace_arrays",
]


class DegenerateUserError(ValueError):
    """The SNR model of a user with ``u_k = 0`` is undefined."""


@dataclass(frozen=True)
class GammaModel:
    nu: float
    theta: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0 and self.theta > 0):
            raise ValueError(f"Gamma shape and scale must be > 0, got {self.nu}, {self.theta}")


@dataclass(frozen=True)
class GenGammaParams:
    """SNR law ``snr = scale * G**2``, ``G ~ Gamma(nu, 1)``.

    ``zeta`` is the per-unit-power scale of the user, ``alpha = share * P_p *
    zeta`` and ``scale = alpha * theta**2``.
    """

    nu: float
    scale: float
    zeta: float = float("nan")
    alpha: float = float("nan")
    share: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0 and self.scale > 0):
            raise ValueError(f"nu and scale must be > 0, got {self.nu}, {self.scale}")

    p = 0.5

    @property
    def d(self) -> float:
        return self.nu / 2.0

    @property
    def a(self) -> float:
        return self.scale

    def with_scale(self, factor: float) -> "GenGammaParams":
        """Copy with the SNR scale (and alpha, share) multiplied by ``factor``."""
        return replace(self, scale=self.scale * factor, alpha=self.alpha * factor,
                       share=self.share * factor)


@dataclass(frozen=True)
class MinSnrEnsemble:
    users: tuple

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("ensemble needs at least one user")

    def __len__(self):
        return len(self.users)


def _rising(x, n):
    return math.prod(x + i for i in range(n))


def g_moments(config: SystemConfig, k: int) -> tuple[float, float]:
    """Exact ``E|g|^2`` and ``E|g|^4`` for ``g = (V^{-1}u)_k / (varpi_k u_k)``.

    Given ``R = ||h_k||^2``, ``(V^{-1}u)_k`` is circular Gaussian with mean
    ``u_k R`` and variance ``R * sum_{j != k} u_j^2 varpi_j``; averaging the
    Rician moments over ``R ~ varpi_k Gamma(N, 1)`` gives closed forms.
    """
    u, w, N = config.u, config.varpi, config.N
    if u[k] == 0:
        raise DegenerateUserError(f"u_{k} = 0: SNR model undefined")
    S = float(np.sum(np.delete(u * u * w, k)))
    s = S / (w[k] * u[k] ** 2)
    m2 = _rising(N, 2) + N * s
    m4 = _rising(N, 4) + 4.0 * _rising(N, 3) * s + 2.0 * _rising(N, 2) * s * s
    return m2, m4


def gamma_moment_match(config: SystemConfig, k: int) -> GammaModel:
    """Gamma(nu, theta) law for ``|g|`` matching ``E|g|^2`` and ``E|g|^4``.

    Reduces to ``nu = N, theta = 1`` when ``u = e_k``.
    """
    m2, m4 = g_moments(config, k)
    rho = m4 / (m2 * m2)
    # (nu+2)(nu+3) = rho nu (nu+1)
    A, B, C = rho - 1.0, rho - 5.0, -6.0
    nu = (-B + math.sqrt(B * B - 4.0 * A * C)) / (2.0 * A)
    theta = math.sqrt(m2 / (nu * (nu + 1.0)))
    if abs(nu - config.N) < 1e-9 * config.N:
        nu, theta = float(config.N), 1.0
    return GammaModel(nu, theta)


def fit_snr_model(config: SystemConfig, k: int, share: float = 1.0,
                  model: str = "moment") -> GenGammaParams:
    """SNR law of user ``k`` receiving power share ``share``.

    ``model="moment"`` (default) uses :func:`gamma_moment_match`, which is
    ``Gamma(N, 1)`` whenever ``u = e_k``; ``model="gamma_n"`` forces
    ``g ~ Gamma(N, 1)`` for every ``u``.
    """
    if not 0 < share <= 1:
        raise ValueError(f"power share must lie in (0, 1], got {share}")
    if config.u[k] == 0:
        raise DegenerateUserError(f"u_{k} = 0: SNR model undefined")
    zeta = float(effective_zeta(config)[k])
    if model == "gamma_n":
        gm = GammaModel(float(config.N))
    elif model == "moment":
        gm = gamma_moment_match(config, k)
    else:
        raise ValueError(f"unknown SNR model {model!r}")
    alpha = share * config.transmit_power * zeta
    return GenGammaParams(gm.nu, alpha * gm.theta ** 2, zeta, alpha, share)


def user_models(config: SystemConfig, model: str = "moment") -> list[GenGammaParams]:
    """Unit-share SNR laws of every user (``share = 1``)."""
    return [fit_snr_model(config, k, 1.0, model) for k in range(config.K)]


def _check_gamma_arg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("SNR argument must be >= 0")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def snr_cdf(params: GenGammaParams, gamma):
    """``P(nu, sqrt(gamma / a))`` (regularised lower incomplete gamma)."""
    g = _check_gamma_arg(gamma)
    return _out(gammainc(params.nu, np.sqrt(g / params.scale)))


def snr_pdf(params: GenGammaParams, gamma):
    g = _check_gamma_arg(gamma)
    p, d, a = params.p, params.d, params.scale
    with np.errstate(divide="ignore"):
        logf = (np.log(p) - d * np.log(a) + (d - 1.0) * np.log(g)
                - (g / a) ** p - gammaln(d / p))
    return _out(np.exp(logf))


def snr_quantile(params: GenGammaParams, prob: float, tol: float = 1e-13) -> float:
    """Inverse CDF by bisection."""
    if not 0 <= prob < 1:
        raise ValueError("probability must lie in [0, 1)")
    lo, hi = 0.0, params.scale
    while snr_cdf(params, hi) < prob:
        hi *= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if snr_cdf(params, mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _gamma_expectation_rule(nu: float, rule: QuadratureRule | None):
    """Nodes and probability weights for ``E[f(T)]``, ``T ~ Gamma(nu, 1)``."""
    if rule is None:
        rule = gauss_laguerre(DEFAULT_LAGUERRE_ORDER)
    if rule.kind != "laguerre":
        raise ValueError("a Laguerre rule is required")
    if abs(rule.alpha - (nu - 1.0)) < 1e-14:
        return rule.nodes, rule.weights
    if rule.alpha == 0.0 and float(nu).is_integer():
        x = rule.nodes
        return x, rule.weights * np.exp((nu - 1.0) * np.log(x) - gammaln(nu))
    gen = gauss_laguerre(rule.order, nu - 1.0)
    return gen.nodes, gen.weights


def gamma_square_transform(nu: float, c, power: int = 0,
                           rule: QuadratureRule | None = None, scaled: bool = True):
    """``E[G^(2 power) exp(-c G^2)]`` for ``G ~ Gamma(nu, 1)``, vectorised in ``c``."""
    c = np.asarray(c, dtype=float)
    t, w = _gamma_expectation_rule(nu, rule)
    cc = c[..., None]
    if scaled:
        r = 1.0 / (1.0 + np.sqrt(cc))
    else:
        r = np.ones_like(cc)
    expo = (1.0 - r) * t - cc * r * r * t * t
    vals = np.sum(w * t ** (2 * power) * np.exp(expo), axis=-1)
    return _out(vals * r[..., 0] ** (nu + 2 * power))


def laplace_snr(params: GenGammaParams, s, rule: QuadratureRule | None = None,
                method: str = "scaled"):
    """``E[exp(-s snr)]`` for ``s >= 0``.

    ``method``: ``"scaled"`` (default), ``"direct"`` (plain node sum over the
    Gamma kernel) or ``"gengamma"`` (node sum over the generalised-Gamma
    density after substituting ``t = s * snr``; requires ``s > 0``).
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise ValueError("Laplace argument must be >= 0")
    if method in ("scaled", "direct"):
        return gamma_square_transform(params.nu, s * params.scale, 0, rule,
                                      scaled=(method == "scaled"))
    if method == "gengamma":
        if np.any(s == 0):
            raise ValueError("the generalised-Gamma node sum needs s > 0")
        rule = rule or gauss_laguerre(DEFAULT_LAGUERRE_ORDER)
        ss = s[..., None]
        vals = np.sum(rule.weights * snr_pdf(params, rule.nodes / ss) / ss, axis=-1)
        return _out(vals)
    raise ValueError(f"unknown method {method!r}")


def average_snr(params: GenGammaParams) -> float:
    """``a Gamma((1+d)/p) / Gamma(d/p) = a nu (nu + 1)``."""
    nu = params.nu
    return float(params.scale * gamma_fn(nu + 2.0) / gamma_fn(nu))


def outage(params: GenGammaParams, gamma_th):
    """``P(snr < gamma_th)``."""
    return snr_cdf(params, gamma_th)


def _scaled_upper_gamma(nu: float, x):
    """``exp(x) * Q(nu, x)`` without overflow."""
    x = np.asarray(x, dtype=float)
    if float(nu).is_integer():
        n = int(nu)
        term = np.ones_like(x)
        total = np.ones_like(x)
        for j in range(1, n):
            term = term * x / j
            total = total + term
        return total
    out = np.empty_like(x)
    small = x < 500.0
    out[small] = gammaincc(nu, x[small]) * np.exp(x[small])
    xl = x[~small]
    # asymptotic series of Gamma(nu, x) e^x / Gamma(nu)
    acc = np.ones_like(xl)
    term = np.ones_like(xl)
    for j in range(1, 12):
        term = term * (nu - j) / xl
        acc = acc + term
    out[~small] = np.exp((nu - 1.0) * np.log(xl) - gammaln(nu)) * acc
    return out


def _users(ensemble) -> tuple:
    if isinstance(ensemble, MinSnrEnsemble):
        return ensemble.users
    return MinSnrEnsemble(tuple(ensemble)).users


def min_snr_tail_integral(ensemble, s, rule: QuadratureRule | None = None,
                          method: str = "scaled"):
    """``s * int_0^inf exp(-s g) prod_k (1 - F_k(g)) dg`` = ``1 - L_min(s)``."""
    users = _users(ensemble)
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("min-SNR transform needs s > 0")
    rule = rule or gauss_laguerre(DEFAULT_LAGUERRE_ORDER)
    if rule.kind != "laguerre" or rule.alpha != 0.0:
        raise ValueError("a classical (alpha = 0) Laguerre rule is required")
    tau, w = rule.nodes, rule.weights
    ss = s[..., None]
    if method == "product":
        surv = np.ones(np.broadcast_shapes(ss.shape, tau.shape))
        for p in users:
            surv = surv * (1.0 - gammainc(p.nu, np.sqrt(tau / (ss * p.scale))))
        return _out(np.sum(w * surv, axis=-1))
    if method != "scaled":
        raise ValueError(f"unknown method {method!r}")
    nus = np.array([p.nu for p in users])
    scales = np.array([p.scale for p in users])
    return _out(min_tail_arrays(nus, scales, s, rule))


def _scaled_upper_gamma_many(nus, x):
    """``exp(x) Q(nu_k, x)`` for user-indexed ``x`` of shape (K, ...)."""
    if np.all(nus == np.round(nus)):
        # Horner on sum_{j < nu_k} x^j / j!, padded with zero coefficients
        top = int(nus.max())
        shape = (-1,) + (1,) * (x.ndim - 1)
        acc = np.zeros_like(x)
        for j in range(top - 1, -1, -1):
            coef = np.where(j < nus, math.exp(-gammaln(j + 1.0)), 0.0).reshape(shape)
            acc = acc * x + coef
        return acc
    return np.stack([_scaled_upper_gamma(nu, xk) for nu, xk in zip(nus, x)])


def _min_parts(nus, scales, s, rule):
    """Tail ``T = 1 - L_min`` and direct ``D = L_min`` quadratures.

    Substituting ``g = A (r tau)^2`` with ``A = max(scales)`` and
    ``r = 1 / (sum_k rho_k + sqrt(s A))``, ``rho_k = sqrt(A / scale_k)``, puts
    the exponential decay of the survival product into the Laguerre weight.
    ``T`` is accurate when small, ``D`` when ``L_min`` is small.
    """
    rule = rule or gauss_laguerre(DEFAULT_LAGUERRE_ORDER)
    nus = np.asarray(nus, dtype=float)
    scales = np.asarray(scales, dtype=float)
    tau, w = rule.nodes, rule.weights
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    ss = np.asarray(s, dtype=float)[..., None]
    A = scales.max()
    rho = np.sqrt(A / scales)
    R = rho.sum()
    sA = ss * A
    r = 1.0 / (R + np.sqrt(sA))
    rt = r * tau
    x = rho.reshape((-1,) + (1,) * rt.ndim) * rt
    nb = nus.reshape(x.shape[:1] + (1,) * (x.ndim - 1))
    log_scaled = np.log(_scaled_upper_gamma_many(nus, x))
    lower = gammainc(nb, x)
    # log Q per user: log1p(-P) near the origin, scaled form in the tail
    with np.errstate(divide="ignore"):
        log_q = np.where(lower < 0.5, np.log1p(-np.minimum(lower, 0.5)), log_scaled - x)
    log_e = np.sum(log_scaled, axis=0)
    quad = -sA * r * r * tau * tau + np.log(tau) + logw
    pref = 2.0 * sA[..., 0] * r[..., 0] ** 2
    T = pref * np.sum(np.exp(quad + tau + log_e - R * rt), axis=-1)
    F_min = -np.expm1(np.sum(log_q, axis=0))
    D = pref * np.sum(np.exp(quad + tau) * F_min, axis=-1)
    return T, D


def min_laplace_arrays(nus, scales, s, rule: QuadratureRule | None = None):
    """``L_min(s)`` for shapes ``nus`` and scales ``scales`` (array form)."""
    T, D = _min_parts(nus, scales, s, rule)
    return np.where(T <= 0.5, 1.0 - T, D)


def min_tail_arrays(nus, scales, s, rule: QuadratureRule | None = None):
    """``1 - L_min(s)`` (array form)."""
    T, D = _min_parts(nus, scales, s, rule)
    return np.where(T <= 0.5, T, 1.0 - D)


def laplace_min_snr(ensemble, s, rule: QuadratureRule | None = None,
                    method: str = "scaled"):
    """Laplace transform of the minimum SNR under the independence product bound.

    ``1 - s int exp(-s g) prod_k [1 - F_k(g)] dg``; ``method="product"`` is the
    plain Laguerre node sum ``1 - sum_i H_i prod_k [1 - F_k(t_i / s)]``.
    """
    if method == "scaled":
        users = _users(ensemble)
        sv = np.asarray(s, dtype=float)
        if np.any(~(sv > 0)):
            raise ValueError("min-SNR transform needs s > 0")
        nus = np.array([p.nu for p in users])
        scales = np.array([p.scale for p in users])
        return _out(min_laplace_arrays(nus, scales, sv, rule))
    tail = min_snr_tail_integral(ensemble, s, rule, method)
    return _out(1.0 - np.asarray(tail))
