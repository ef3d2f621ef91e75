"""Adaptive design: a pilot study picks the pool size and initial group
count for a sequential phase, and one mixed-size MLE combines both phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .design import DesignParams, optimal_group_size
from .errors import DomainError, HorizonError
from .estimation import StageCounts, TwoStageRecord, mle_mixed, mle_single
from .sequential import SequentialConfig, advance, initial_state

# An outcome source maps a requested pool size to one test result (0 or 1).
OutcomeSource = Callable[[int], int]

# Guard against a source whose phase-2 outcomes never satisfy the stopping
# rule (for example, all negative forever).
PHASE2_STEP_CAP = 1_000_000


@dataclass(frozen=True)
class AdaptiveConfig:
    """Pilot size/pool and the rule scaling the phase-2 initial count.

    ``m_fraction`` multiplies the required group count at the pilot
    estimate to give the sequential phase's initial count m. The full
    required count (fraction 1.0) is the default: it reproduces the
    reference total-cost figures, whereas smaller fractions let the
    stopping rule do more of the work.
    """

    m0: int = 100
    k0: int = 2
    design: DesignParams = DesignParams()
    m_fraction: float = 1.0

    def __post_init__(self):
        if self.m0 < 1:
            raise DomainError(f"pilot group count must be >= 1, got {self.m0}")
        if self.k0 < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k0}")
        if not 0.0 < self.m_fraction <= 1.0:
            raise DomainError(f"m_fraction must be in (0, 1], got {self.m_fraction!r}")


@dataclass(frozen=True)
class ChosenDesign:
    k: int
    m: int


@dataclass(frozen=True)
class AdaptiveResult:
    """Outcome of a full adaptive run.

    ``n3`` counts every group tested, pilot included. ``degenerate`` marks
    runs whose pilot stayed all-negative or all-positive even after being
    repeated; those report the boundary estimate and run no phase 2
    (``m`` is 0 there).
    """

    p_hat0: float
    k: int
    m: int
    n3: int
    p_hat_final: float
    pilot_groups: int
    degenerate: bool = False


def choose_k_m(p_hat0: float, cfg: AdaptiveConfig) -> ChosenDesign:
    """Phase-2 design from the pilot estimate: optimal pool size, and the
    fraction of its required group count as the initial sample."""
    if not 0.0 < p_hat0 < 1.0:
        raise DomainError(f"pilot estimate must be in (0, 1), got {p_hat0!r}")
    plan = optimal_group_size(p_hat0, cfg.design)
    m = max(1, math.ceil(cfg.m_fraction * plan.n_required))
    return ChosenDesign(k=plan.k, m=m)


def _checked(outcome) -> int:
    o = int(outcome)
    if o not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {outcome!r}")
    return o


def run_adaptive(outcomes: OutcomeSource, cfg: AdaptiveConfig) -> AdaptiveResult:
    """Run pilot, pick (k, m), run the sequential phase, combine the MLE.

    A degenerate pilot (all outcomes equal) is repeated once at the same
    size; if still degenerate the run ends with the boundary estimate and
    the ``degenerate`` flag instead of a phase 2.
    """
    s0 = 0
    pilot_n = cfg.m0
    for _ in range(cfg.m0):
        s0 += _checked(outcomes(cfg.k0))
    if s0 in (0, pilot_n):
        for _ in range(cfg.m0):
            s0 += _checked(outcomes(cfg.k0))
        pilot_n = 2 * cfg.m0
        if s0 in (0, pilot_n):
            boundary = 1.0 if s0 else 0.0
            return AdaptiveResult(p_hat0=boundary, k=cfg.k0, m=0, n3=pilot_n,
                                  p_hat_final=boundary, pilot_groups=pilot_n,
                                  degenerate=True)

    pilot = StageCounts(k=cfg.k0, n=pilot_n, s=s0)
    p0 = mle_single(pilot)
    chosen = choose_k_m(p0, cfg)
    seq_cfg = SequentialConfig(k=chosen.k, m=chosen.m, design=cfg.design)

    state = initial_state()
    while not state.stopped:
        if state.n >= PHASE2_STEP_CAP:
            raise HorizonError(
                f"sequential phase did not stop within {PHASE2_STEP_CAP} groups",
                residual_tail=math.nan)
        state = advance(state, _checked(outcomes(chosen.k)), seq_cfg)

    record = TwoStageRecord(stage1=pilot,
                            stage2=StageCounts(k=chosen.k, n=state.n, s=state.s))
    return AdaptiveResult(p_hat0=p0, k=chosen.k, m=chosen.m,
                          n3=pilot_n + state.n, p_hat_final=mle_mixed(record),
                          pilot_groups=pilot_n)
