"""Secret-key rate regions for successive key agreement over a multiple-access
channel followed by a broadcast channel."""

__version__ = "0.1.0"

from .channels import Example1Params, SystemModel, build_example1, load_system, save_system, verify_special_case
from .infocore import (
    JointDistribution,
    Kernel,
    VariableLabel,
    attach,
    cond_mutual_info,
    entropy,
    is_markov,
    marginalize,
    mutual_info,
)
from .regions import (
    AuxiliaryScheme,
    RateRegion,
    RateTerms,
    constraint_slack,
    corollary_rates,
    inner_bound_polytope,
    rate_terms,
)
from .search import (
    SearchConfig,
    compute_capacity_region_special_case,
    compute_inner_region,
    convex_hull_downward_closed,
    enumerate_schemes,
)

__all__ = [
    "AuxiliaryScheme", "Example1Params", "JointDistribution", "Kernel", "RateRegion", "RateTerms",
    "SearchConfig", "SystemModel", "VariableLabel", "__version__", "attach", "build_example1",
    "compute_capacity_region_special_case", "compute_inner_region", "cond_mutual_info", "constraint_slack",
    "convex_hull_downward_closed", "corollary_rates", "entropy", "enumerate_schemes", "inner_bound_polytope",
    "is_markov", "load_system", "marginalize", "mutual_info", "rate_terms", "save_system", "verify_special_case",
]
