"""
Binary latent tree models in tree-cumulant coordinates.

The package covers tree topologies and their edge-partition lattices,
subset-indexed moment transforms (probabilities, raw and central moments,
tree cumulants, correlations), the three parameter charts with the monomial
parametrization, and identifiability analysis of fibers.
"""

from .fiber import (
    DegenerateMarginError,
    FiberReport,
    FiniteSmooth,
    ManifoldWithCorners,
    OffModelError,
    Singular,
    analyze_fiber,
    classify_fiber,
    covariance_summary,
    enumerate_fiber,
    local_sign_switch,
    recover_parameters,
    recover_tripod,
)
from .moments import (
    CentralMoments,
    CorrelationCoords,
    NoncentralMoments,
    ProbabilityTable,
    TreeCumulants,
    kappa_to_mu,
    kappa_to_rho,
    lambda_to_mu,
    lambda_to_p,
    mu_to_kappa,
    mu_to_lambda,
    p_to_lambda,
    p_to_mu,
    rho_to_kappa,
)
from .params import (
    ConstraintError,
    OmegaParams,
    RhoParams,
    ThetaParams,
    check_constraints,
    model_forward,
    omega_to_rho,
    omega_to_theta,
    psi,
    psi_contracted,
    rho_to_omega,
    theta_to_omega,
)
from .poset import EdgePartitionPoset, build_poset
from .tree import NewickError, TreeError, TreeTopology, parse_newick, to_newick

__version__ = "0.1.0"

__all__ = [
    "CentralMoments",
    "ConstraintError",
    "CorrelationCoords",
    "DegenerateMarginError",
    "EdgePartitionPoset",
    "FiberReport",
    "FiniteSmooth",
    "ManifoldWithCorners",
    "NewickError",
    "NoncentralMoments",
    "OffModelError",
    "OmegaParams",
    "ProbabilityTable",
    "RhoParams",
    "Singular",
    "ThetaParams",
    "TreeCumulants",
    "TreeError",
    "TreeTopology",
    "analyze_fiber",
    "build_poset",
    "check_constraints",
    "classify_fiber",
    "covariance_summary",
    "enumerate_fiber",
    "kappa_to_mu",
    "kappa_to_rho",
    "lambda_to_mu",
    "lambda_to_p",
    "local_sign_switch",
    "model_forward",
    "mu_to_kappa",
    "mu_to_lambda",
    "omega_to_rho",
    "omega_to_theta",
    "p_to_lambda",
    "p_to_mu",
    "parse_newick",
    "psi",
    "psi_contracted",
    "recover_parameters",
    "recover_tripod",
    "rho_to_kappa",
    "rho_to_omega",
    "theta_to_omega",
    "to_newick",
]
