"""Global sensitivity analysis of expensive black-box functions.

Fits tensor-product kernel surrogates (Kriging-style interpolation or
regularized least squares) on sequentially grown designs, extracts Sobol
main/total/interaction indices and derivative-based measures analytically
from the fitted weights via one-dimensional quadrature tables, and stops
growing the design once the indices are stable across cross-validation
refits. See the README for the CLI and the file formats.
"""

from .analytic import (
    build_integral_table,
    dgsm_report,
    full_report,
    interaction_component,
    sobol_report,
    subset_variance,
)
from .benchmarks import BENCHMARKS, get_benchmark
from .core import (
    AffineTensorSurrogate,
    ConsistencyError,
    DegenerateModelError,
    DesignData,
    DomainError,
    EvaluationError,
    FitError,
    InputSpace,
    IterationRecord,
    KernelSaError,
    SensitivityReport,
    StoppingTrace,
    denormalize,
    normalize,
)
from .design import (
    DesignProposal,
    density_batch,
    initial_lhs,
    lola_voronoi_batch,
    voronoi_volumes,
)
from .kernels import FAMILIES, KernelSpec
from .mc import mc_dgsm, saltelli_estimate
from .stopping import IndexCvResult, beeq, consecutive_below, index_cv, rrse
from .surrogate import fit, log_marginal_likelihood, predict, predict_gradient
from .workflow import RunConfig, analyze, external_simulator_eval, run

__version__ = "0.1.0"

__all__ = [
    "AffineTensorSurrogate",
    "BENCHMARKS",
    "ConsistencyError",
    "DegenerateModelError",
    "DesignData",
    "DesignProposal",
    "DomainError",
    "EvaluationError",
    "FAMILIES",
    "FitError",
    "IndexCvResult",
    "InputSpace",
    "IterationRecord",
    "KernelSaError",
    "KernelSpec",
    "RunConfig",
    "SensitivityReport",
    "StoppingTrace",
    "analyze",
    "beeq",
    "build_integral_table",
    "consecutive_below",
    "denormalize",
    "density_batch",
    "dgsm_report",
    "external_simulator_eval",
    "fit",
    "full_report",
    "get_benchmark",
    "index_cv",
    "initial_lhs",
    "interaction_component",
    "lola_voronoi_batch",
    "log_marginal_likelihood",
    "mc_dgsm",
    "normalize",
    "predict",
    "predict_gradient",
    "rrse",
    "run",
    "saltelli_estimate",
    "sobol_report",
    "subset_variance",
    "voronoi_volumes",
]
