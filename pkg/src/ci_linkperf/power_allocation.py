"""Power-share optimisation over the simplex ``{a : sum(a) = 1, a >= 0}``.

User ``k`` with share ``a_k`` has SNR law ``a_k * scale_k * G_k**2``; the
``users`` argument of every solver is the list of unit-share laws
(:func:`ci_linkperf.snr_statistics.user_models`). Objectives use the
three-term SEP approximation: the sum over users (Min-Sum) or the SEP of the
minimum SNR (Min-Max).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .error_rates import sep_coefficients
from .quadrature import QuadratureRule, gauss_laguerre
from .snr_statistics import GenGammaParams, gamma_square_transform, min_laplace_arrays

__all__ = [
    "PowerAllocation",
    "SolverFailure",
    "users_from_zetas",
    "user_sep",
    "sum_sep",
    "max_sep",
    "max_sep_first_order",
    "sep_marginal",
    "epa",
    "min_sum_closed_form",
    "min_sum_numeric",
    "min_sum_first_order_relation",
    "min_max_numeric",
    "sep_balancing",
    "convexity_condition",
]

SIMPLEX_TOL = 1e-9
STALL_TOL = 1e-12
MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    shares: np.ndarray
    scheme: str
    objective_value: float = float("nan")
    lam: float | None = None
    iterations: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


class SolverFailure(RuntimeError):
    def __init__(self, message: str, best: PowerAllocation):
        super().__init__(message)
        self.best = best


def _simplex(a) -> np.ndarray:
    a = np.clip(np.asarray(a, dtype=float), 0.0, None)
    total = a.sum()
    if not total > 0:
        raise ValueError("allocation has no positive share")
    a = a / total
    a.setflags(write=False)
    return a


def users_from_zetas(zetas, P_p: float, nu: float) -> list[GenGammaParams]:
    """Unit-share laws ``scale_k = P_p * zeta_k`` with a common shape ``nu``."""
    z = np.asarray(zetas, dtype=float)
    if np.any(~(z > 0)):
        raise ValueError("zeta values must be > 0")
    return [GenGammaParams(float(nu), float(P_p * zk), float(zk), float(P_p * zk)) for zk in z]


def _arrays(users):
    users = list(users)
    if not users:
        raise ValueError("need at least one user")
    return (np.array([u.nu for u in users]), np.array([u.scale for u in users]))


def user_sep(share: float, user: GenGammaParams, M: int,
             rule: QuadratureRule | None = None) -> float:
    """Three-term SEP of one user at power share ``share``."""
    co = sep_coefficients(M)
    if share <= 0:
        return float(co.c.sum())
    return float(np.dot(co.c, gamma_square_transform(user.nu, co.z * share * user.scale, 0, rule)))


def sum_sep(shares, users, M: int, rule: QuadratureRule | None = None) -> float:
    return float(sum(user_sep(a, u, M, rule) for a, u in zip(shares, users)))


def max_sep(shares, users, M: int, rule: QuadratureRule | None = None) -> float:
    """Three-term SEP of the minimum SNR under the independence product bound."""
    co = sep_coefficients(M)
    shares = np.asarray(shares, dtype=float)
    if np.any(shares <= 0):
        return float(co.c.sum())
    nus, scales = _arrays(users)
    return float(np.dot(co.c, min_laplace_arrays(nus, shares * scales, co.z, rule)))


def max_sep_first_order(shares, users, M: int) -> float:
    """The max-SEP surrogate with a single Laguerre node (diagnostic only)."""
    return max_sep(shares, users, M, gauss_laguerre(1))


def sep_marginal(share: float, user: GenGammaParams, M: int,
                 rule: QuadratureRule | None = None) -> float:
    """``psi_k(a) = -d SEP_k / d a``, positive and strictly decreasing in ``a``."""
    co = sep_coefficients(M)
    c = co.z * max(share, 0.0) * user.scale
    m = gamma_square_transform(user.nu, c, 1, rule)
    return float(np.dot(co.c * co.z * user.scale, m))


def epa(K: int) -> PowerAllocation:
    if isinstance(K, bool) or int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    return PowerAllocation(_simplex(np.ones(int(K))), "epa")


def min_sum_closed_form(zetas) -> PowerAllocation:
    """High-SNR Min-Sum shares ``a_k = (1/zeta_k) / sum_j (1/zeta_j)``."""
    z = np.asarray(zetas, dtype=float)
    if z.ndim != 1 or z.size == 0 or np.any(~(z > 0)):
        raise ValueError("zeta values must be a non-empty vector of positive numbers")
    return PowerAllocation(_simplex(1.0 / z), "min_sum_closed")


def _invert_marginal(user, M, lam, rule):
    """Share ``a >= 0`` with ``psi(a) = lam``, or 0 when ``psi(0) <= lam``."""
    f = lambda a: sep_marginal(a, user, M, rule) - lam
    if f(0.0) <= 0:
        return 0.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("marginal does not decay")
    return brentq(f, 0.0, hi, xtol=1e-16, rtol=1e-15)


def min_sum_numeric(users: Sequence[GenGammaParams], M: int,
                    laguerre_rule: QuadratureRule | None = None,
                    tol: float = SIMPLEX_TOL, max_iter: int = MAX_ITER) -> PowerAllocation:
    """Minimise ``sum_k SEP_k(a_k)`` by Lagrangian bisection.

    For a multiplier ``lam`` each user solves ``psi_k(a_k) = lam`` (clamped to
    0 when unreachable); the outer root search on ``log lam`` drives
    ``sum(a) - 1`` to zero.
    """
    users = list(users)
    K = len(users)
    if K < 2:
        raise ValueError("Min-Sum needs at least two users")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    rule = laguerre_rule
    shares_at = lambda lam: np.array([_invert_marginal(u, M, lam, rule) for u in users])
    lam_hi = max(sep_marginal(0.0, u, M, rule) for u in users)
    lam_lo = min(sep_marginal(1.0, u, M, rule) for u in users)
    h = lambda t: shares_at(math.exp(t)).sum() - 1.0
    t, info = brentq(h, math.log(lam_lo), math.log(lam_hi), xtol=1e-15, rtol=1e-15,
                     maxiter=max_iter, full_output=True, disp=False)
    lam = math.exp(t)
    raw = shares_at(lam)
    residual = abs(raw.sum() - 1.0)
    shares = _simplex(raw)
    result = PowerAllocation(shares, "min_sum_numeric", sum_sep(shares, users, M, rule),
                             lam, info.iterations, bool(info.converged and residual <= tol),
                             {"simplex_residual": residual})
    if not result.converged:
        raise SolverFailure(f"Min-Sum bisection stopped with residual {residual:.3g}", result)
    return result


def min_sum_first_order_relation(zetas, P_p: float, g1: float, branch: int,
                                 M: int = 4, a1: float | None = None) -> PowerAllocation:
    """First-order refinement ``a_k = zeta_1 a_1 / zeta_k - ln(zeta_1/zeta_k) / (z_j P_p zeta_k g1^2)``.

    ``branch`` selects ``z_j`` (1, 2 or 3). ``a_1`` defaults to the
    closed-form share of user 1. Negative shares are clamped to zero before
    renormalisation and reported in ``diagnostics["clamped"]``.
    """
    z = np.asarray(zetas, dtype=float)
    if np.any(~(z > 0)):
        raise ValueError("zeta values must be > 0")
    if branch not in (1, 2, 3):
        raise ValueError("branch must be 1, 2 or 3")
    zj = sep_coefficients(M).z[branch - 1]
    if a1 is None:
        a1 = float(min_sum_closed_form(z).shares[0])
    raw = z[0] * a1 / z - np.log(z[0] / z) / (zj * P_p * z * g1 * g1)
    clamped = bool(np.any(raw < 0))
    return PowerAllocation(_simplex(raw), "min_sum_first_order",
                           diagnostics={"clamped": clamped, "raw": raw, "branch": branch})


def sep_balancing(users: Sequence[GenGammaParams], M: int,
                  laguerre_rule: QuadratureRule | None = None) -> PowerAllocation:
    """Shares that equalise the per-user three-term SEP.

    Falls back to EPA if balancing does not lower the max-SEP objective.
    """
    users = list(users)
    K = len(users)
    rule = laguerre_rule
    ceiling = float(sep_coefficients(M).c.sum())

    def share_for(u, target):
        f = lambda a: user_sep(a, u, M, rule) - target
        hi = 1.0
        while f(hi) > 0:
            hi *= 2.0
        return brentq(f, 0.0, hi, xtol=1e-16, rtol=1e-15)

    def excess(log_target):
        target = math.exp(log_target)
        return sum(share_for(u, target) for u in users) - 1.0

    lo = min(user_sep(1.0, u, M, rule) for u in users)
    t = brentq(excess, math.log(lo), math.log(ceiling) - 1e-12, xtol=1e-15, rtol=1e-15)
    target = math.exp(t)
    raw = [share_for(u, target) for u in users]
    shares = _simplex(raw)
    obj = max_sep(shares, users, M, rule)
    base = max_sep(np.full(K, 1.0 / K), users, M, rule)
    if obj > base:
        return PowerAllocation(_simplex(np.ones(K)), "sep_balancing", base,
                               diagnostics={"fallback": "epa", "target": target})
    return PowerAllocation(shares, "sep_balancing", obj, diagnostics={"target": target})


def _pairwise_descent(a, J, max_sweeps, stall):
    a = np.array(a, dtype=float)
    f = J(a)
    K = a.size
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        f_start = f
        for i in range(K):
            for j in range(i + 1, K):
                total = a[i] + a[j]
                if total <= 0:
                    continue

                def phi(x):
                    b = a.copy()
                    b[i], b[j] = x, total - x
                    return J(b)

                res = minimize_scalar(phi, bounds=(0.0, total), method="bounded",
                                      options={"xatol": 1e-10 * total})
                if res.fun < f:
                    a[i], a[j] = res.x, total - res.x
                    f = res.fun
        if f_start - f <= stall:
            return a, f, sweeps, True
    return a, f, sweeps, False


def _slsqp(a0, J):
    """Local SLSQP solve on the simplex; never returns a worse point than ``a0``."""
    K = a0.size
    res = minimize(J, a0, method="SLSQP", bounds=[(0.0, 1.0)] * K,
                   constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0}],
                   options={"ftol": 1e-14, "maxiter": 200})
    a = np.clip(res.x, 0.0, None)
    a = a / a.sum() if a.sum() > 0 else a0
    fa, f0 = J(a), J(a0)
    return (a, fa, res.nit) if fa < f0 else (np.array(a0, dtype=float), f0, res.nit)


def min_max_numeric(users: Sequence[GenGammaParams], M: int,
                    laguerre_rule: QuadratureRule | None = None,
                    tol: float = STALL_TOL, seed: int = 0, random_starts: int = 8,
                    max_sweeps: int = 200) -> PowerAllocation:
    """Minimise the max-SEP surrogate over the simplex.

    Each start (EPA, closed-form Min-Sum, numeric Min-Sum, SEP balancing and
    ``random_starts`` Dirichlet points) is refined by SLSQP; the best point is
    then polished by pairwise coordinate descent until a sweep gains less
    than ``tol``. Ties go to the earliest start.
    """
    users = list(users)
    K = len(users)
    if K < 2:
        raise ValueError("Min-Max needs at least two users")
    rule = laguerre_rule
    J = lambda a: max_sep(a, users, M, rule)
    starts = [
        ("epa", epa(K).shares),
        ("min_sum_closed", min_sum_closed_form([u.scale for u in users]).shares),
        ("min_sum_numeric", min_sum_numeric(users, M, rule).shares),
        ("sep_balancing", sep_balancing(users, M, rule).shares),
    ]
    rng = np.random.default_rng(seed)
    starts += [(f"random{i}", rng.dirichlet(np.ones(K))) for i in range(random_starts)]
    best = None
    iterations = 0
    for name, a0 in starts:
        a, f, nit = _slsqp(np.asarray(a0, dtype=float), J)
        iterations += nit
        if best is None or f < best[1]:
            best = (a, f, name)
    a, f, sweeps, ok = _pairwise_descent(best[0], J, max_sweeps, tol)
    shares = _simplex(a)
    return PowerAllocation(shares, "min_max_numeric", J(shares), None, iterations + sweeps,
                           ok, {"start": best[2], "polish_sweeps": sweeps})


def convexity_condition(params: GenGammaParams, share: float, branch_z: float,
                        gamma1: float | None = None) -> bool:
    """Sufficient convexity test ``2 nu > sqrt(gamma_1 / (z a_k scale_k)) - 1``.

    ``params`` is the unit-share law of the user, ``branch_z`` one of the
    ``z_j`` and ``gamma1`` the first Laguerre node (default: order 64).
    """
    if gamma1 is None:
        gamma1 = float(gauss_laguerre().nodes[0])
    if share <= 0:
        return False
    return bool(2.0 * params.nu > math.sqrt(gamma1 / (branch_z * share * params.scale)) - 1.0)
