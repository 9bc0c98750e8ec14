"""Single change-point detection in sequences of pairwise Markov random fields."""

from .core import (
    SCHEMA_VERSION,
    Dataset,
    GroupLabels,
    ModelSpec,
    MRFError,
    SymmetricParams,
    compute_c0,
    make_ising_spec,
)
from .estimator import (
    FitResult,
    PenaltySchedule,
    SolverOptions,
    bic_score,
    fit_penalized,
    lambda_grid,
    lambda_max,
    penalty_at,
    select_lambda_bic,
)
from .evaluation import (
    changepoint_stats,
    edge_confusion,
    edge_sign_proportions,
    estimate_kappa_mc,
    network_stats,
    recovery_report,
    relative_error,
)
from .ingestion import RawVotes, conformity_filter, impute, read_votes_csv
from .kernels import BACKEND
from .pseudolikelihood import phi, phi_gradient, segment_objective
from .scan import (
    ScanResult,
    SearchDomain,
    Tuning,
    basic_scan,
    build_domain,
    fast_scan,
    nw_smooth,
    profile_objective,
)
from .simulate import (
    ScenarioSpec,
    build_scenario,
    exact_distribution,
    generate_series,
    gibbs_sample,
    random_network,
    similarity_pair,
)
from .stability import LambdaPolicy, StabilityResult, stability_select

__version__ = "0.1.0"
