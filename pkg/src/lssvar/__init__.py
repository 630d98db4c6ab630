"""Simulation, power variations and estimation for Levy semi-stationary processes."""

from .errors import *  # noqa: F401,F403
from .estimators import (EstimateReport, ParamDomainJ, PGrid, estimate_H, fit_alpha_beta,
                         ratio_stat, relative_intermittency, scale_limit, scale_stat)
from .harness import ExperimentConfig, MCReport, derive_seed, parse_config, run_estimate, run_verify
from .kernel_math import (HkParams, KernelSpec, check_assumption_A, eval_g, eval_g0,
                          eval_g_deriv, eval_hk, hk_abs_power_integral, phi_functional,
                          weights_gin)
from .levy_driver import (DriverPath, DriverSpec, JumpRecord, sample_stable,
                          simulate_compound_poisson, simulate_stable_increments,
                          split_by_threshold)
from .limit_oracles import (MarkedJump, abs_moment_stable, f_power_integral, mp_constant,
                            stable_limit_Z, vm_series)
from .lss_sim import (LssPath, SimConfig, burnin_truncation, compute_F_path, simulate_lss_cp,
                      simulate_lss_stable)
from .power_variation import (VariationSeries, increments_k, normalization_factor,
                              power_variation, regime_classify)
from .volatility import SigmaPath, SigmaSpec, sigma_left_limit, sigma_power_integral, simulate_sigma

__version__ = "0.1.0"
