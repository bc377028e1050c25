"""M-PSK symbol and bit error probabilities from the SNR Laplace transform.

Every routine reduces to evaluating ``L(s) = E[exp(-s snr)]`` at positive
arguments: the exact SEP is ``(1/pi) int_0^Theta L(sin^2(pi/M) / sin^2 phi)
dphi`` and the approximation replaces the angular integral by three
exponentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from .quadrature import DEFAULT_LEGENDRE_ORDER, QuadratureRule, gauss_legendre
from .snr_statistics import (GenGammaParams, MinSnrEnsemble, laplace_min_snr,
                             laplace_snr, min_snr_tail_integral, snr_pdf)

__all__ = [
    "SepCoefficients",
    "SepResult",
    "sep_coefficients",
    "sep_exact",
    "sep_approx",
    "sep_max",
    "sep_from_transform",
    "approx_from_transform",
    "bep",
    "bep_from_transform",
    "bep_closed_form_diagnostic",
]


@dataclass(frozen=True)
class SepCoefficients:
    M: int
    Theta: float
    z1: float
    z2: float
    z3: float
    c1: float
    c2: float
    c3: float

    @property
    def z(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3])

    @property
    def c(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])


@dataclass(frozen=True)
class SepResult:
    value: float
    method: str
    orders: tuple = ()

    def __float__(self):
        return float(self.value)


def _check_M(M) -> int:
    if isinstance(M, bool) or int(M) != M or M < 2 or (int(M) & (int(M) - 1)):
        raise ValueError(f"M must be a power of two >= 2 (got {M!r})")
    return int(M)


def sep_coefficients(M: int) -> SepCoefficients:
    M = _check_M(M)
    theta = math.pi * (M - 1) / M
    z1 = math.sin(math.pi / M) ** 2
    return SepCoefficients(
        M, theta, z1, 4.0 * z1 / 3.0, z1 / math.sin(theta) ** 2,
        theta / (2.0 * math.pi) - 1.0 / 6.0, 0.25, theta / (2.0 * math.pi) - 0.25,
    )


def _phi_rule(phi_rule, lo, hi):
    """Map ``phi_rule`` (any Legendre rule, or None) onto ``[lo, hi]``."""
    n = DEFAULT_LEGENDRE_ORDER if phi_rule is None else phi_rule.order
    if phi_rule is not None and phi_rule.kind != "legendre":
        raise ValueError("the angular integral needs a Legendre rule")
    return gauss_legendre(n, lo, hi)


def sep_from_transform(L: Callable, M: int, phi_rule: QuadratureRule | None = None) -> float:
    """``(1/pi) int_0^Theta L(z1 / sin^2 phi) dphi`` for any transform ``L``."""
    co = sep_coefficients(M)
    rule = _phi_rule(phi_rule, 0.0, co.Theta)
    s = co.z1 / np.sin(rule.nodes) ** 2
    return float(np.dot(rule.weights, L(s)) / math.pi)


def approx_from_transform(L: Callable, M: int) -> float:
    co = sep_coefficients(M)
    return float(np.dot(co.c, L(co.z)))


def _orders(*rules):
    return tuple(r.order for r in rules if r is not None)


def sep_exact(params: GenGammaParams, M: int, phi_rule: QuadratureRule | None = None,
              laguerre_rule: QuadratureRule | None = None) -> SepResult:
    """Average SEP by the single finite angular integral."""
    val = sep_from_transform(lambda s: laplace_snr(params, s, laguerre_rule), M, phi_rule)
    return SepResult(min(max(val, 0.0), 1.0), "exact_integral",
                     _orders(phi_rule, laguerre_rule))


def sep_approx(params: GenGammaParams, M: int,
               laguerre_rule: QuadratureRule | None = None) -> SepResult:
    """``c1 L(z1) + c2 L(z2) + c3 L(z3)``."""
    val = approx_from_transform(lambda s: laplace_snr(params, s, laguerre_rule), M)
    return SepResult(val, "three_term_approx", _orders(laguerre_rule))


def sep_max(ensemble, M: int, laguerre_rule: QuadratureRule | None = None,
            method: str = "approx", phi_rule: QuadratureRule | None = None) -> SepResult:
    """SEP of the weakest user from the min-SNR transform.

    ``method="approx"``: ``sum_j c_j L_min(z_j)``;
    ``method="expanded"``: ``(Theta/pi - 1/6) - sum_j c_j (1 - L_min(z_j))``,
    the same quantity written through the tail integral;
    ``method="exact"``: angular integral over ``L_min``.
    """
    if not isinstance(ensemble, MinSnrEnsemble):
        ensemble = MinSnrEnsemble(tuple(ensemble))
    L = lambda s: laplace_min_snr(ensemble, s, laguerre_rule)
    if method == "approx":
        return SepResult(approx_from_transform(L, M), "three_term_approx",
                         _orders(laguerre_rule))
    if method == "expanded":
        co = sep_coefficients(M)
        tail = np.asarray(min_snr_tail_integral(ensemble, co.z, laguerre_rule))
        val = co.Theta / math.pi - 1.0 / 6.0 - float(np.dot(co.c, tail))
        return SepResult(val, "three_term_approx", _orders(laguerre_rule))
    if method == "exact":
        return SepResult(sep_from_transform(L, M, phi_rule), "exact_integral",
                         _orders(phi_rule, laguerre_rule))
    raise ValueError(f"unknown method {method!r}")


def _bep_terms(M):
    M = _check_M(M)
    bits = M.bit_length() - 1
    coef = 2.0 / max(bits, 2)
    args = [math.sin((2 * i - 1) * math.pi / M) ** 2 for i in range(1, max(M // 4, 1) + 1)]
    return bits, coef, args


def bep_from_transform(L: Callable, M: int, phi_rule: QuadratureRule | None = None) -> float:
    """Gray-mapped BEP approximation for a symbol-SNR transform ``L``."""
    _, coef, args = _bep_terms(M)
    rule = _phi_rule(phi_rule, 0.0, math.pi / 2.0)
    inv = 1.0 / np.sin(rule.nodes) ** 2
    total = sum(float(np.dot(rule.weights, L(arg * inv))) for arg in args)
    return coef * total / math.pi


def bep(params: GenGammaParams, M: int, phi_rule: QuadratureRule | None = None,
        laguerre_rule: QuadratureRule | None = None) -> float:
    """``(2 / max(log2 M, 2)) sum_i (1/pi) int_0^{pi/2} L(sin^2((2i-1)pi/M) / sin^2 t) dt``.

    ``params`` describes the symbol SNR, so no ``log2 M`` factor appears in
    the transform argument.
    """
    return bep_from_transform(lambda s: laplace_snr(params, s, laguerre_rule), M, phi_rule)


@dataclass(frozen=True)
class BepDiagnostic:
    value: complex
    reference: float
    deviation: float


def bep_closed_form_diagnostic(params: GenGammaParams, M: int,
                               laguerre_rule: QuadratureRule | None = None) -> BepDiagnostic:
    """Literal closed Laguerre form of the BEP, reported against :func:`bep`.

    The expression takes the square root of a negative quantity and grows as
    ``exp(gamma_i)``, so it is evaluated in complex arithmetic and is only a
    diagnostic.
    """
    from .quadrature import gauss_laguerre

    rule = laguerre_rule or gauss_laguerre()
    bits, coef, args = _bep_terms(M)
    g = rule.nodes
    f = snr_pdf(params, g)
    total = 0j
    for arg in args:
        root = np.sqrt((-bits * arg * g).astype(complex))
        with np.errstate(over="ignore", invalid="ignore"):
            term = rule.weights * f * (math.pi / 2.0) * np.exp(g) * erfc(root)
        total += complex(np.nansum(term)) / math.pi
    value = coef * total
    ref = bep(params, M, laguerre_rule=laguerre_rule)
    return BepDiagnostic(value, ref, float(abs(value - ref)))
