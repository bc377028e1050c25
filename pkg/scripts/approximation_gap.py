"""Relative gap between the three-term SEP approximation and the exact integral.

Grid: (N, K) in {(4, 4), (6, 4)}, M in {2, 4, 8}, transmit SNR 0..30 dB,
user 0 with u = e_1.
"""
from ci_linkperf.error_rates import sep_approx, sep_exact
from ci_linkperf.snr_statistics import fit_snr_model
from ci_linkperf.system import SystemConfig, u_preset


def main():
    print(f"{'N':>2} {'K':>2} {'M':>2} {'eta_dB':>6} {'exact':>11} {'approx':>11} {'rel_err':>8}")
    for N, K in ((4, 4), (6, 4)):
        for M in (2, 4, 8):
            cfg = SystemConfig(N, K, M=M, u=u_preset("basis", K, 0))
            for eta in range(0, 31, 5):
                p = fit_snr_model(cfg.with_transmit_snr_db(eta), 0)
                e, a = sep_exact(p, M).value, sep_approx(p, M).value
                print(f"{N:2d} {K:2d} {M:2d} {eta:6d} {e:11.4e} {a:11.4e} {(a - e) / e:+8.2%}")


if __name__ == "__main__":
    main()
