"""Reference-table builders: canonical design points for each procedure and
functions that evaluate or simulate them.

The preset tuples below are the standard worked examples shipped with the
toolkit (initial counts for the sequential runs, pilot/pool combinations
for the two-stage and adaptive runs). They are inputs, not derived values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .adaptive import AdaptiveConfig
from .design import DesignParams, GroupPlan, n_star_group, optimal_group_size
from .estimation import fisher_info_two_stage
from .montecarlo import SimulationSpec, SimulationSummary, run
from .sequential import SequentialConfig, coverage, estimator_moments, n_moments, stopping_pmf
from .twostage import (TwoStageConfig, linear_combo_coverage, linear_combo_mean,
                       linear_combo_var, n2_distribution)

# Individual-testing sample sizes are tabulated on this prevalence grid.
INDIVIDUAL_P = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# Group-count requirement grid: for each prevalence, the pool sizes worth
# printing (a spread around the optimum plus k=1 for contrast).
GROUP_GRIDS = {
    0.01: (1, 50, 100, 158, 159, 160, 170, 200),
    0.05: (1, 10, 20, 30, 31, 32, 33, 40),
    0.1: (1, 10, 11, 12, 13, 14, 15, 16),
    0.2: (1, 6, 7, 8, 9, 10, 11, 12),
    0.3: (1, 2, 3, 4, 5, 6, 7, 8),
    0.4: (1, 2, 3, 4, 5, 6, 7),
    0.5: (1, 2, 3, 4, 5, 6, 7),
}

# Sequential runs: (prevalence, pool size, initial count m).
SEQUENTIAL_PRESETS = (
    (0.5, 2, 250),
    (0.4, 3, 320),
    (0.3, 4, 390),
    (0.2, 7, 450),
    (0.1, 15, 510),
    (0.05, 31, 550),
    (0.01, 159, 585),
)

# Two-stage runs with the grand MLE: (prevalence, stage-1 pool, stage-1 count);
# the stage-2 pool size is chosen from the stage-1 estimate.
TWOSTAGE_PRESETS = (
    (0.5, 2, 100),
    (0.5, 2, 200),
    (0.4, 2, 100),
    (0.4, 3, 200),
    (0.3, 2, 100),
    (0.3, 4, 300),
    (0.2, 2, 100),
    (0.2, 7, 400),
    (0.1, 2, 100),
    (0.1, 15, 500),
    (0.05, 2, 100),
    (0.05, 31, 500),
)

# Fisher-information rows: (prevalence, stage-1 count, stage-1 pool, stage-2 pool).
FISHER_PRESETS = (
    (0.5, 200, 2, 3),
    (0.4, 200, 3, 3),
    (0.3, 300, 4, 4),
    (0.2, 400, 7, 7),
    (0.1, 500, 15, 16),
    (0.05, 500, 31, 31),
)

# Linear-combination rows: (prevalence, stage-1 pool, stage-2 pool, stage-1 count).
LINEAR_PRESETS = (
    (0.5, 2, 3, 200),
    (0.4, 3, 3, 200),
    (0.3, 4, 4, 300),
    (0.2, 7, 7, 400),
    (0.1, 15, 16, 500),
    (0.05, 31, 31, 500),
)

# Adaptive runs share one pilot design across this prevalence grid.
ADAPTIVE_P = (0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01)
ADAPTIVE_PILOT = (100, 2)  # (m0, k0)


@dataclass(frozen=True)
class IndividualRow:
    p: float
    n_required: float
    n_ceil: int


@dataclass(frozen=True)
class GridBlock:
    p: float
    entries: tuple[GroupPlan, ...]
    best: GroupPlan


@dataclass(frozen=True)
class SequentialRow:
    p: float
    k: int
    m: int
    e_n: float
    sd_n: float
    e_phat: float
    sd_phat: float
    cp: float


@dataclass(frozen=True)
class SimulatedRow:
    p: float
    k: int
    m: int
    summary: SimulationSummary


@dataclass(frozen=True)
class FisherRow:
    p: float
    m: int
    k1: int
    k2: int
    expected_m2: float
    fi: float
    sd: float


@dataclass(frozen=True)
class LinearRow:
    p: float
    k1: int
    k2: int
    m: int
    e_n2: float
    sd_n2: float
    mean: float
    se: float
    cp: float


def table1(d: DesignParams = DesignParams()) -> tuple[IndividualRow, ...]:
    """Individual-testing sample sizes over the standard prevalence grid."""
    rows = []
    for p in INDIVIDUAL_P:
        plan = n_star_group(p, 1, d)
        rows.append(IndividualRow(p=p, n_required=plan.n_required, n_ceil=plan.n_ceil))
    return tuple(rows)


def table2(d: DesignParams = DesignParams()) -> tuple[GridBlock, ...]:
    """Group-count requirements over the pool-size grid, with the optimum."""
    blocks = []
    for p, ks in GROUP_GRIDS.items():
        entries = tuple(n_star_group(p, k, d) for k in ks)
        blocks.append(GridBlock(p=p, entries=entries, best=optimal_group_size(p, d)))
    return tuple(blocks)


def table3_analytic(d: DesignParams = DesignParams()) -> tuple[SequentialRow, ...]:
    """Stopping-time and estimator characteristics of the sequential presets."""
    rows = []
    for p, k, m in SEQUENTIAL_PRESETS:
        cfg = SequentialConfig(k=k, m=m, design=d)
        pmf = stopping_pmf(p, cfg)
        nm = n_moments(pmf)
        em = estimator_moments(p, k, pmf)
        rows.append(SequentialRow(p=p, k=k, m=m, e_n=nm.e_n, sd_n=nm.sd_n,
                                  e_phat=em.mean, sd_phat=em.sd,
                                  cp=coverage(p, k, d.gamma, pmf)))
    return tuple(rows)


def table3_simulated(replicates: int = 1000, seed: int = 0,
                     d: DesignParams = DesignParams()) -> tuple[SimulatedRow, ...]:
    """Simulated counterparts of the sequential presets."""
    rows = []
    for i, (p, k, m) in enumerate(SEQUENTIAL_PRESETS):
        spec = SimulationSpec(procedure="sequential", truth_p=p,
                              config=SequentialConfig(k=k, m=m, design=d),
                              replicates=replicates, seed=seed + i)
        rows.append(SimulatedRow(p=p, k=k, m=m, summary=run(spec)))
    return tuple(rows)


def table4(replicates: int = 1000, seed: int = 0,
           d: DesignParams = DesignParams()) -> tuple[SimulatedRow, ...]:
    """Two-stage grand-MLE simulations over the standard design points."""
    rows = []
    for i, (p, k1, m) in enumerate(TWOSTAGE_PRESETS):
        cfg = TwoStageConfig(m=m, k1=k1, design=d, k2_rule="optimal")
        spec = SimulationSpec(procedure="twostage-mle", truth_p=p, config=cfg,
                              replicates=replicates, seed=seed + i)
        rows.append(SimulatedRow(p=p, k=k1, m=m, summary=run(spec)))
    return tuple(rows)


def table5(d: DesignParams = DesignParams()) -> tuple[FisherRow, ...]:
    """Two-stage Fisher information with the expected stage-2 count taken
    from the stopping-size approximation."""
    rows = []
    for p, m, k1, k2 in FISHER_PRESETS:
        cfg = TwoStageConfig(m=m, k1=k1, design=d, k2_rule=k2)
        expected_m2 = n2_distribution(p, cfg).e_m2
        fi = fisher_info_two_stage(p, m, k1, k2, expected_m2)
        rows.append(FisherRow(p=p, m=m, k1=k1, k2=k2, expected_m2=expected_m2,
                              fi=fi, sd=fi ** -0.5))
    return tuple(rows)


def table6_analytic(d: DesignParams = DesignParams()) -> tuple[LinearRow, ...]:
    """Moment expansions for the linear combination of the two stage MLEs."""
    rows = []
    for p, k1, k2, m in LINEAR_PRESETS:
        cfg = TwoStageConfig(m=m, k1=k1, design=d, k2_rule=k2)
        dist = n2_distribution(p, cfg)
        mean = linear_combo_mean(p, cfg, k2)
        se = linear_combo_var(p, cfg, k2) ** 0.5
        rows.append(LinearRow(p=p, k1=k1, k2=k2, m=m, e_n2=dist.mean,
                              sd_n2=dist.sd, mean=mean, se=se,
                              cp=linear_combo_coverage(p, mean, se, d.gamma)))
    return tuple(rows)


def table6_simulated(replicates: int = 1000, seed: int = 0,
                     d: DesignParams = DesignParams()) -> tuple[SimulatedRow, ...]:
    """Simulated linear-combination runs at the same design points."""
    rows = []
    for i, (p, k1, k2, m) in enumerate(LINEAR_PRESETS):
        cfg = TwoStageConfig(m=m, k1=k1, design=d, k2_rule=k2)
        spec = SimulationSpec(procedure="twostage-linear", truth_p=p, config=cfg,
                              replicates=replicates, seed=seed + i)
        rows.append(SimulatedRow(p=p, k=k1, m=m, summary=run(spec)))
    return tuple(rows)


def table7(replicates: int = 1000, seed: int = 0,
           d: DesignParams = DesignParams()) -> tuple[SimulatedRow, ...]:
    """Adaptive-procedure simulations over the standard prevalence grid."""
    m0, k0 = ADAPTIVE_PILOT
    cfg = AdaptiveConfig(m0=m0, k0=k0, design=d)
    rows = []
    for i, p in enumerate(ADAPTIVE_P):
        spec = SimulationSpec(procedure="adaptive", truth_p=p, config=cfg,
                              replicates=replicates, seed=seed + i)
        rows.append(SimulatedRow(p=p, k=k0, m=m0, summary=run(spec)))
    return tuple(rows)
