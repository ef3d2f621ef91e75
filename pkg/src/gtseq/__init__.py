"""Prevalence estimation from pooled (group) tests.

Sizing rules for individual and pooled designs, a sequential stopping rule
with analytic stopping-time and estimator characteristics, two-stage
procedures (grand MLE and a linear combination of stage estimates), an
adaptive pilot-then-sequential procedure, and a reproducible Monte Carlo
engine. The ``tables`` submodule evaluates the standard worked examples;
``gtseq.cli`` exposes everything on the command line and ``gtseq.service``
over HTTP.
"""

from . import tables
from .adaptive import (AdaptiveConfig, AdaptiveResult, ChosenDesign, choose_k_m,
                       run_adaptive)
from .design import (DesignParams, GroupPlan, n_star_group, n_star_individual,
                     optimal_group_size, psi, psi_double_prime, psi_prime,
                     theta_k, zeta)
from .errors import (BracketError, ContractError, DomainError, GtseqError,
                     HorizonError)
from .estimation import (StageCounts, TwoStageRecord, delta_bias, delta_var,
                         fisher_info_two_stage, fisher_sd, log_likelihood,
                         mle_mixed, mle_pooled_same_k, mle_single,
                         proportional_interval, score)
from .montecarlo import (ComparisonReport, ReferenceRow, SimulationSpec,
                         SimulationSummary, bernoulli_group, compare,
                         replicate_stream, run)
from .sequential import (SequentialConfig, SequentialState, StoppingPmf, advance,
                         coverage, estimator_moments, initial_state, n_moments,
                         stopping_pmf, stopping_tail)
from .twostage import (N2Distribution, TwoStageConfig, linear_combo,
                       linear_combo_coverage, linear_combo_mean, linear_combo_se,
                       linear_combo_var, n2_distribution, resolve_k2,
                       stage2_size)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig", "AdaptiveResult", "BracketError", "ChosenDesign",
    "ComparisonReport", "ContractError", "DesignParams", "DomainError",
    "GroupPlan", "GtseqError", "HorizonError", "N2Distribution",
    "ReferenceRow", "SequentialConfig", "SequentialState", "SimulationSpec",
    "SimulationSummary", "StageCounts", "StoppingPmf", "TwoStageConfig",
    "TwoStageRecord", "advance", "bernoulli_group", "choose_k_m", "compare",
    "coverage", "delta_bias", "delta_var", "estimator_moments",
    "fisher_info_two_stage", "fisher_sd", "initial_state", "linear_combo",
    "linear_combo_coverage", "linear_combo_mean", "linear_combo_se",
    "linear_combo_var", "log_likelihood", "mle_mixed", "mle_pooled_same_k",
    "mle_single", "n2_distribution", "n_moments", "n_star_group",
    "n_star_individual", "optimal_group_size", "proportional_interval", "psi",
    "psi_double_prime", "psi_prime", "replicate_stream", "resolve_k2", "run",
    "run_adaptive", "score", "stage2_size", "stopping_pmf", "stopping_tail",
    "tables", "theta_k", "zeta",
    "__version__",
]
