"""Numeric Min-Sum shares against two high-SNR laws.

With SEP_k(a) ~ C (a scale_k)^(-nu/2) the stationarity condition gives
shares proportional to zeta_k^(-nu/(nu+2)); the inverse-zeta rule
a_k ~ 1/zeta_k is printed alongside. N = K = 3, zeta ratios 1:2:4, QPSK.
"""
import math

import numpy as np

from ci_linkperf.power_allocation import min_sum_closed_form, min_sum_numeric
from ci_linkperf.precoding import effective_zeta
from ci_linkperf.snr_statistics import fit_snr_model
from ci_linkperf.system import SystemConfig


def main():
    varpi = np.array([1.0, math.sqrt(2.0), 2.0])
    base = SystemConfig(3, 3, M=4, distances=list(varpi ** (-1 / 2.7)))
    zeta = effective_zeta(base)
    inverse = min_sum_closed_form(zeta).shares
    for model in ("gamma_n", "moment"):
        print(f"model = {model}")
        for eta in (10, 20, 30, 40, 50, 60):
            cfg = base.with_transmit_snr_db(eta)
            users = [fit_snr_model(cfg, k, model=model) for k in range(3)]
            nu = np.array([u.nu for u in users])
            power = zeta ** (-nu / (nu + 2))
            power = power / power.sum()
            a = min_sum_numeric(users, 4).shares
            print(f"  {eta:2d} dB numeric {np.round(a, 4)}  power-law {np.round(power, 4)}"
                  f"  inverse-zeta {np.round(inverse, 4)}"
                  f"  L_inf(inverse) {np.max(np.abs(a - inverse)):.3f}")


if __name__ == "__main__":
    main()
