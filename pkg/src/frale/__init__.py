"""
Fractional Lévy processes by the Molchan-Golosov and Mandelbrot-Van Ness transformations.

Kernels and their moments, compound Poisson drivers, path simulation, Monte Carlo analysis and Wiener integration.

.. autodata:: frale.__version__
   :no-value:

"""

from __future__ import annotations

try:
    from .version import version
except ImportError:  # pragma: no cover  # source tree that was never built
    version = "0.0.0"

#: version of the project as a string
__version__: str = version

from ._analyze import (  # noqa: E402
    CharFnPoint,
    CovarianceReport,
    CumulantReport,
    DyadicQVReport,
    IncrementReport,
    NonstationarityReport,
    Report,
    ReportRow,
    SeparationReport,
    ShiftConvergenceReport,
    Verdict,
    ZeroProbabilityReport,
    charfn,
    covariance_grid,
    cumulant_separation,
    cumulants,
    dyadic_qv,
    fbm_covariance,
    increment_second_moment,
    jackknife_stderr,
    k_statistics,
    nonstationarity_witness,
    sample_values,
    shift_convergence,
    zero_probability_test,
)
from ._config import worker_count  # noqa: E402
from ._driver import (  # noqa: E402
    BrownianIncrements,
    DriverPath,
    LevyAtom,
    LevyMeasureSpec,
    MomentFunctionals,
    TruncationResult,
    derive_seed,
    make_generator,
    psi,
    sample_brownian_increments,
    sample_compound_poisson,
    sample_two_sided,
    truncate_levy_measure,
)
from ._error import (  # noqa: E402
    AccuracyError,
    BudgetExceeded,
    DegenerateMeasureError,
    DomainError,
    FraleError,
    UnsupportedIntegrandError,
)
from ._io import (  # noqa: E402
    csv_to_svg,
    path_from_csv,
    path_to_csv,
    read_levy_spec,
    read_step_function,
    report_to_csv,
    write_locked,
)
from ._kernels import (  # noqa: E402
    KernelKind,
    KernelMomentResult,
    MomentBounds,
    g1_g2_bounds,
    kernel_moment,
    mg_kernel,
    mg_kernel_l2,
    mg_kernel_origin,
    mg_kernel_row,
    mg_kernel_sderivative,
    moment_diverges,
    mvn_fourth_moment_bound,
    mvn_kernel,
    shift_error_l2,
    shifted_mg_kernel,
)
from ._simulate import (  # noqa: E402
    PathMeta,
    ProcessKind,
    SamplePath,
    SchemeTag,
    dyadic_grid,
    ensemble_values,
    fbm_weights,
    make_grid,
    mvn_truncation_horizon,
    mvn_truncation_loss,
    simulate_ensemble,
    simulate_fbm_mg,
    simulate_flpmg_ibp,
    simulate_flpmg_jumpsum,
    simulate_flpmvn,
    simulate_mixed,
    simulate_shifted_mg,
)
from ._specfun import (  # noqa: E402
    HurstParameter,
    HypergeometricParams,
    beta,
    constant_CH,
    constant_CH_integral,
    constant_cH,
    gamma,
    hyp2f1,
)
from ._verify import SUITES, SuiteResult, VerifyConfig, run_suite  # noqa: E402
from ._wiener import (  # noqa: E402
    IntegrandFunction,
    StepFunction,
    apply_KH,
    kh_distance,
    l2h_norm,
    staircase_cauchy_increment,
    wiener_integral,
)

__all__ = [
    "SUITES",
    "AccuracyError",
    "BrownianIncrements",
    "BudgetExceeded",
    "CharFnPoint",
    "CovarianceReport",
    "CumulantReport",
    "DegenerateMeasureError",
    "DomainError",
    "DriverPath",
    "DyadicQVReport",
    "FraleError",
    "HurstParameter",
    "HypergeometricParams",
    "IncrementReport",
    "IntegrandFunction",
    "KernelKind",
    "KernelMomentResult",
    "LevyAtom",
    "LevyMeasureSpec",
    "MomentBounds",
    "MomentFunctionals",
    "NonstationarityReport",
    "PathMeta",
    "ProcessKind",
    "Report",
    "ReportRow",
    "SamplePath",
    "SchemeTag",
    "SeparationReport",
    "ShiftConvergenceReport",
    "StepFunction",
    "SuiteResult",
    "TruncationResult",
    "UnsupportedIntegrandError",
    "Verdict",
    "VerifyConfig",
    "ZeroProbabilityReport",
    "__version__",
    "apply_KH",
    "beta",
    "charfn",
    "constant_CH",
    "constant_CH_integral",
    "constant_cH",
    "covariance_grid",
    "csv_to_svg",
    "cumulant_separation",
    "cumulants",
    "derive_seed",
    "dyadic_grid",
    "dyadic_qv",
    "ensemble_values",
    "fbm_covariance",
    "fbm_weights",
    "g1_g2_bounds",
    "gamma",
    "hyp2f1",
    "increment_second_moment",
    "jackknife_stderr",
    "k_statistics",
    "kernel_moment",
    "kh_distance",
    "l2h_norm",
    "make_generator",
    "make_grid",
    "mg_kernel",
    "mg_kernel_l2",
    "mg_kernel_origin",
    "mg_kernel_row",
    "mg_kernel_sderivative",
    "moment_diverges",
    "mvn_fourth_moment_bound",
    "mvn_kernel",
    "mvn_truncation_horizon",
    "mvn_truncation_loss",
    "nonstationarity_witness",
    "path_from_csv",
    "path_to_csv",
    "psi",
    "read_levy_spec",
    "read_step_function",
    "report_to_csv",
    "run_suite",
    "sample_brownian_increments",
    "sample_compound_poisson",
    "sample_two_sided",
    "sample_values",
    "shift_convergence",
    "shift_error_l2",
    "shifted_mg_kernel",
    "simulate_ensemble",
    "simulate_fbm_mg",
    "simulate_flpmg_ibp",
    "simulate_flpmg_jumpsum",
    "simulate_flpmvn",
    "simulate_mixed",
    "simulate_shifted_mg",
    "staircase_cauchy_increment",
    "truncate_levy_measure",
    "wiener_integral",
    "worker_count",
    "write_locked",
    "zero_probability_test",
]
