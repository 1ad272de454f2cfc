"""Rank-adaptive dynamical low-rank integrators for matrix and Tucker tensor ODEs."""
from .linalg import (
    adj,
    frobenius_norm,
    matricize,
    mode_product,
    multi_mode_product,
    qr_orth,
    svd,
    tensorize,
)
from .matrix_dlr import (
    LowRankFactor,
    MatrixProblem,
    StepReport,
    TruncationPolicy,
    adaptive_matrix_step,
    fixed_rank_matrix_step,
    integrate,
    reconstruct,
    truncate,
)
from .rk import SubstepDiverged, SubstepMethod, rk_integrate
from .tucker_dlr import (
    TensorProblem,
    TuckerFactor,
    TuckerStepReport,
    adaptive_tucker_step,
    integrate_tucker,
    truncate_tucker,
)

__version__ = "0.1.0"

__all__ = [
    "adj", "frobenius_norm", "matricize", "mode_product", "multi_mode_product", "qr_orth", "svd",
    "tensorize", "LowRankFactor", "MatrixProblem", "StepReport", "TruncationPolicy",
    "adaptive_matrix_step", "fixed_rank_matrix_step", "integrate", "reconstruct", "truncate",
    "SubstepDiverged", "SubstepMethod", "rk_integrate", "TensorProblem", "TuckerFactor",
    "TuckerStepReport", "adaptive_tucker_step", "integrate_tucker", "truncate_tucker",
]
