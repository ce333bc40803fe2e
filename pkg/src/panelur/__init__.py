"""Panel unit-root testing under cross-sectional dependence via unobserved factors.

The package provides the optimal pooled tests and the classical pooled
autoregression tests, principal-components factor estimation, kernel
long-run variance estimation, a two-framework panel simulator, exact
oracle central sequences for verification, and a Monte Carlo harness.
"""

__version__ = "0.1.0"

from .asymptotics import (FISHER_INFORMATION, PowerCurve, emit_power_curve,
                          local_power_mp_bn, power_envelope)
from .dgp import (DgpConfig, InnovationSpec, SimulatedPanel, innovation_scale,
                  local_rho, lognormal_heterogeneity_params, simulate)
from .errors import DataError, DimensionError, NumericalError, ResourceError
from .factors import FactorFit, estimate_factors, select_num_factors
from .harness import Experiment, ResultRow, power_figure_data, replication_seed, run
from .lrv import LrvConfig, LrvSet, autocovariances, estimate_lrv_set, kernel_lrv
from .oracle import (OracleNuisance, delta_mp_exact, delta_mp_smw, delta_panic_exact,
                     delta_simplified, delta_star, innovation_covariance,
                     lan_convergence_report, psi_epsilon_inverse)
from .panel import DiffPanel, Panel, Series, apply_cumsum, cumsum_matrix, difference
from .statistics import (PrecisionMatrix, TestOutcome, UmpIntermediates, bn_statistics,
                         bn_tests, mp_tests, panic_idiosyncratic, precision_matrix,
                         t_ump, t_ump_emp, ump_statistics, ump_statistics_naive)

__all__ = [
    "FISHER_INFORMATION", "PowerCurve", "emit_power_curve", "local_power_mp_bn",
    "power_envelope",
    "DgpConfig", "InnovationSpec", "SimulatedPanel", "innovation_scale", "local_rho",
    "lognormal_heterogeneity_params", "simulate",
    "DataError", "DimensionError", "NumericalError", "ResourceError",
    "FactorFit", "estimate_factors", "select_num_factors",
    "Experiment", "ResultRow", "power_figure_data", "replication_seed", "run",
    "LrvConfig", "LrvSet", "autocovariances", "estimate_lrv_set", "kernel_lrv",
    "OracleNuisance", "delta_mp_exact", "delta_mp_smw", "delta_panic_exact",
    "delta_simplified", "delta_star", "innovation_covariance",
    "lan_convergence_report", "psi_epsilon_inverse",
    "DiffPanel", "Panel", "Series", "apply_cumsum", "cumsum_matrix", "difference",
    "PrecisionMatrix", "TestOutcome", "UmpIntermediates", "bn_statistics", "bn_tests",
    "mp_tests", "panic_idiosyncratic", "precision_matrix", "t_ump", "t_ump_emp",
    "ump_statistics", "ump_statistics_naive",
]
