"""Adaptive maximum-conditional-entropy Hamiltonian Monte Carlo.

Exact Gaussian flow theory for proposal tuning (optimal mass matrix and
integration time under the conditional-entropy criterion), a leapfrog
HMC kernel with an adaptive mass matrix and step-count schedule, chain
diagnostics, and a benchmark harness. The hot leapfrog kernels run on a
compiled core when available, with a pure-numpy fallback selected at
import time (see :func:`backend_name`).
"""

from ._backend import HAVE_COMPILED, backend_name
from .diagnostics import (
    ESSReport,
    autocorrelation,
    ess,
    ess_per_l,
    performance_ratio,
    summarize,
)
from .gaussian_theory import (
    ConditionalLaw1D,
    SpectralSystem,
    analytic_flow,
    conditional_covariance,
    conditional_law_1d,
    esjd_1d,
    log_det_conditional_cov,
    optimal_time_ce,
    optimal_time_esjd,
    random_commuting_pair,
)
from .hamiltonian import (
    LeapfrogConfig,
    MassMatrix,
    PhasePoint,
    kinetic_energy,
    leapfrog,
    sample_momentum,
    total_energy,
)
from .models import (
    EightSchoolsModel,
    GaussianTarget,
    LGCPModel,
    LogisticRegressionModel,
    RosenbrockTarget,
    TargetModel,
    eight_schools_transform,
    load_eight_schools,
)
from .sampler import (
    MCESConfig,
    RunningCovariance,
    Trace,
    frozen_start,
    hmc_step,
    load_trace,
    mces_run,
    run_standard_hmc,
    save_trace,
    update_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "backend_name",
    "ESSReport",
    "autocorrelation",
    "ess",
    "ess_per_l",
    "performance_ratio",
    "summarize",
    "ConditionalLaw1D",
    "SpectralSystem",
    "analytic_flow",
    "conditional_covariance",
    "conditional_law_1d",
    "esjd_1d",
    "log_det_conditional_cov",
    "optimal_time_ce",
    "optimal_time_esjd",
    "random_commuting_pair",
    "LeapfrogConfig",
    "MassMatrix",
    "PhasePoint",
    "kinetic_energy",
    "leapfrog",
    "sample_momentum",
    "total_energy",
    "EightSchoolsModel",
    "GaussianTarget",
    "LGCPModel",
    "LogisticRegressionModel",
    "RosenbrockTarget",
    "TargetModel",
    "eight_schools_transform",
    "load_eight_schools",
    "MCESConfig",
    "RunningCovariance",
    "Trace",
    "frozen_start",
    "hmc_step",
    "load_trace",
    "mces_run",
    "run_standard_hmc",
    "save_trace",
    "update_covariance",
    "__version__",
]
