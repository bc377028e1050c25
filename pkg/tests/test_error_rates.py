import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import erfc

from ci_linkperf.error_rates import (approx_from_transform, bep, bep_closed_form_diagnostic,
                                     sep_approx, sep_coefficients, sep_exact,
                                     sep_from_transform, sep_max)
from ci_linkperf.montecarlo import min_snr_sep_oracle
from ci_linkperf.quadrature import gauss_laguerre, gauss_legendre
from ci_linkperf.snr_statistics import GenGammaParams, MinSnrEnsemble, snr_pdf

MS = [2, 4, 8, 16, 32]


def _qfunc(x):
    return 0.5 * erfc(x / math.sqrt(2.0))


def test_coefficients_qpsk():
    co = sep_coefficients(4)
    assert co.Theta == pytest.approx(3 * math.pi / 4)
    assert co.z1 == pytest.approx(0.5)
    assert co.z2 == pytest.approx(2 / 3)
    assert co.z3 == pytest.approx(1.0)
    assert co.c1 == pytest.approx(3 / 8 - 1 / 6)
    assert co.c2 == 0.25
    assert co.c3 == pytest.approx(3 / 8 - 1 / 4)


@pytest.mark.parametrize("M", [0, 1, 3, 6, 2.5, True])
def test_bad_order(M):
    with pytest.raises(ValueError):
        sep_coefficients(M)


@pytest.mark.parametrize("snr", [0.1, 1.0, 10.0])
def test_awgn_bpsk_qpsk(snr):
    L = lambda s: np.exp(-s * snr)
    assert sep_from_transform(L, 2) == pytest.approx(0.5 * erfc(math.sqrt(snr)), rel=1e-12)
    q = _qfunc(math.sqrt(snr))
    assert sep_from_transform(L, 4) == pytest.approx(2 * q - q * q, rel=1e-9)


@pytest.mark.parametrize("mean", [0.5, 3.0, 100.0])
def test_rayleigh_bpsk(mean):
    L = lambda s: 1.0 / (1.0 + s * mean)
    ref = 0.5 * (1 - math.sqrt(mean / (1 + mean)))
    assert sep_from_transform(L, 2) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("M", MS)
def test_transform_limits(M):
    co = sep_coefficients(M)
    assert sep_from_transform(lambda s: np.ones_like(s), M) == pytest.approx((M - 1) / M)
    assert approx_from_transform(lambda s: np.ones_like(s), M) == pytest.approx(co.c.sum())
    assert approx_from_transform(lambda s: np.zeros_like(s), M) == 0.0


def _awgn_sep(M, g):
    co = sep_coefficients(M)
    f = lambda phi: math.exp(-g * co.z1 / math.sin(phi) ** 2)
    return integrate.quad(f, 0, co.Theta)[0] / math.pi


@pytest.mark.parametrize("M", [2, 8])
@pytest.mark.parametrize("nu,scale", [(4.0, 0.05), (3.3, 1.0)])
def test_exact_matches_density_integral(M, nu, scale):
    p = GenGammaParams(nu, scale)
    ref = integrate.quad(lambda g: snr_pdf(p, g) * _awgn_sep(M, g), 0, np.inf, limit=200)[0]
    assert sep_exact(p, M).value == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("M", [2, 4, 8])
@pytest.mark.parametrize("nu", [4.0, 6.0])
@pytest.mark.parametrize("scale_db", [-10.0, 0.0, 15.0, 25.0])
def test_orders_converged(M, nu, scale_db):
    p = GenGammaParams(nu, 10 ** (scale_db / 10))
    base = sep_exact(p, M).value
    fine = sep_exact(p, M, gauss_legendre(128), gauss_laguerre(128)).value
    assert abs(fine - base) <= 1e-8


def test_result_metadata():
    p = GenGammaParams(4.0, 1.0)
    r = sep_exact(p, 4, gauss_legendre(32), gauss_laguerre(48))
    assert r.method == "exact_integral" and r.orders == (32, 48)
    assert float(r) == r.value
    assert sep_approx(p, 4).method == "three_term_approx"


@given(st.sampled_from(MS), st.sampled_from([1.0, 2.0, 4.0, 7.5]),
       st.floats(1e-3, 1e3), st.floats(1.01, 10.0))
def test_exact_monotone_and_bounded(M, nu, scale, factor):
    lo = sep_exact(GenGammaParams(nu, scale * factor), M).value
    hi = sep_exact(GenGammaParams(nu, scale), M).value
    assert 0.0 <= lo <= hi <= (M - 1) / M
    assert lo < hi or hi < 1e-14


@pytest.mark.parametrize("M", [2, 4, 8])
@pytest.mark.parametrize("scale", [1e-3, 0.05, 1.0, 100.0])
def test_approx_gap_bounded(M, scale):
    p = GenGammaParams(4.0, scale)
    e, a = sep_exact(p, M).value, sep_approx(p, M).value
    assert abs(a - e) / e < 0.25


def test_sep_max_single_user():
    p = GenGammaParams(4.0, 0.3)
    assert sep_max([p], 4).value == pytest.approx(sep_approx(p, 4).value, rel=1e-12)
    assert sep_max([p], 4, method="exact").value == pytest.approx(sep_exact(p, 4).value, rel=1e-9)


@given(st.lists(st.tuples(st.sampled_from([2.0, 3.0, 4.0]), st.floats(1e-2, 1e3)),
                min_size=2, max_size=5), st.sampled_from([2, 4, 8]))
def test_sep_max_dominates_users(users, M):
    ens = [GenGammaParams(nu, a) for nu, a in users]
    worst = sep_max(ens, M, method="exact").value
    assert worst >= max(sep_exact(p, M).value for p in ens) * (1 - 1e-7)
    approx = sep_max(MinSnrEnsemble(tuple(ens)), M).value
    assert sep_max(ens, M, method="expanded").value == pytest.approx(approx, rel=1e-9, abs=1e-14)


def test_sep_max_oracle():
    ens = [GenGammaParams(4.0, 0.2), GenGammaParams(4.0, 0.5), GenGammaParams(3.0, 1.0)]
    rate, se = min_snr_sep_oracle(ens, 4, 400_000, seed=3)
    assert abs(sep_max(ens, 4, method="exact").value - rate) <= 3 * se


def test_sep_max_bad_method():
    with pytest.raises(ValueError):
        sep_max([GenGammaParams(2.0, 1.0)], 4, method="bogus")


@pytest.mark.parametrize("nu,scale", [(4.0, 0.1), (6.0, 3.0)])
def test_bep_bpsk_equals_sep(nu, scale):
    p = GenGammaParams(nu, scale)
    assert bep(p, 2) == pytest.approx(sep_exact(p, 2).value, rel=1e-12)


@pytest.mark.parametrize("snr", [0.3, 4.0])
def test_bep_awgn_gray(snr):
    L = lambda s: np.exp(-s * snr)
    from ci_linkperf.error_rates import bep_from_transform
    assert bep_from_transform(L, 4) == pytest.approx(_qfunc(math.sqrt(snr)), rel=1e-12)


@pytest.mark.parametrize("M", [4, 8, 16])
def test_bep_below_sep(M):
    p = GenGammaParams(4.0, 2.0)
    b, s = bep(p, M), sep_exact(p, M).value
    assert s / math.log2(M) <= b * (1 + 1e-9) and b <= s


def test_closed_form_diagnostic_reports_gap():
    d = bep_closed_form_diagnostic(GenGammaParams(4.0, 1.0), 4)
    assert isinstance(d.value, complex)
    assert d.reference == pytest.approx(bep(GenGammaParams(4.0, 1.0), 4))
    assert d.deviation >= 0
