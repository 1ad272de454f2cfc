"""Model problems with reference solutions."""
from .burgers import BurgersUQProblem, TensorLegendreBasis, characteristic_solution
from .sec51 import Sec51Problem, SylvesterOperator, operator_matrix, sec51_rhs
from .synthetic import (
    GradientFlow,
    RankRPath,
    TuckerPath,
    gradient_flow_problem,
    random_tucker,
    synthetic_rank_r_path,
    zero_matrix_problem,
    zero_tensor_problem,
)
from .hamiltonian import HarmonicChainProblem
from .transport import TransportProblem

__all__ = [
    "BurgersUQProblem", "TensorLegendreBasis", "characteristic_solution", "Sec51Problem",
    "SylvesterOperator", "operator_matrix", "sec51_rhs", "GradientFlow", "RankRPath", "TuckerPath",
    "gradient_flow_problem", "random_tucker", "synthetic_rank_r_path", "zero_matrix_problem",
    "zero_tensor_problem", "TransportProblem", "HarmonicChainProblem",
]
