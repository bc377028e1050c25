"""Analytical and Monte Carlo performance engine for constructive-interference
precoding in MU-MIMO downlinks with M-PSK signalling."""

__version__ = "0.1.0"

from .quadrature import QuadratureRule, gauss_laguerre, gauss_legendre
from .system import (ConfigError, Constellation, SystemConfig, path_loss, psk_detect,
                     psk_modulate, sample_channel, u_preset)
from .precoding import (SingularChannelError, beta_p, ci_precode, received_snr_ci,
                        zf_precode)
from .snr_statistics import (GenGammaParams, MinSnrEnsemble, average_snr, fit_snr_model,
                             laplace_min_snr, laplace_snr, outage, snr_cdf, snr_pdf)
from .error_rates import bep, sep_approx, sep_exact, sep_max
from .power_allocation import (PowerAllocation, epa, min_max_numeric, min_sum_closed_form,
                               min_sum_numeric)
from .link_metrics import (BlockConfig, PowerModel, block_error_rate, power_efficiency,
                           throughput, total_power)
from .montecarlo import SimulationPlan, SimulationReport, run

__all__ = [
    "QuadratureRule", "gauss_laguerre", "gauss_legendre",
    "ConfigError", "Constellation", "SystemConfig", "path_loss", "psk_detect",
    "psk_modulate", "sample_channel", "u_preset",
    "SingularChannelError", "beta_p", "ci_precode", "received_snr_ci", "zf_precode",
    "GenGammaParams", "MinSnrEnsemble", "average_snr", "fit_snr_model",
    "laplace_min_snr", "laplace_snr", "outage", "snr_cdf", "snr_pdf",
    "bep", "sep_approx", "sep_exact", "sep_max",
    "PowerAllocation", "epa", "min_max_numeric", "min_sum_closed_form", "min_sum_numeric",
    "BlockConfig", "PowerModel", "block_error_rate", "power_efficiency", "throughput",
    "total_power",
    "SimulationPlan", "SimulationReport", "run",
]
