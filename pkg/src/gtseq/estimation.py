"""Maximum-likelihood estimation of prevalence from pooled test counts.

Covers the single-pool-size MLE, the merged estimator when both stages use
the same pool size, the mixed-size MLE obtained as the unique root of a
polynomial in q = 1 - p, delta-method bias/variance factors, and the
two-stage Fisher information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .design import theta_k
from .errors import ContractError, DomainError
from .numerics import Bracket, find_root


@dataclass(frozen=True)
class StageCounts:
    """Test tally for one stage: ``s`` positive pools out of ``n`` of size ``k``."""

    k: int
    n: int
    s: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k}")
        if self.n < 0:
            raise DomainError(f"group count must be >= 0, got {self.n}")
        if not 0 <= self.s <= self.n:
            raise DomainError(f"positives must satisfy 0 <= s <= n, got s={self.s}, n={self.n}")

    @property
    def xbar(self) -> float:
        if self.n == 0:
            raise DomainError("empty stage has no observed rate")
        return self.s / self.n


def _empty_stage(k: int) -> StageCounts:
    return StageCounts(k=k, n=0, s=0)


@dataclass(frozen=True)
class TwoStageRecord:
    """Counts from both stages of a two-stage study.

    ``n2`` is the grand total of groups; it always equals
    ``stage1.n + stage2.n`` (stage 2 may be empty).
    """

    stage1: StageCounts
    stage2: StageCounts
    n2: int = field(default=-1)

    def __post_init__(self):
        if self.stage1.n < 1:
            raise DomainError("stage 1 must contain at least one group")
        if self.n2 == -1:
            object.__setattr__(self, "n2", self.stage1.n + self.stage2.n)
        elif self.n2 != self.stage1.n + self.stage2.n:
            raise ContractError(
                f"n2={self.n2} inconsistent with stage sizes {self.stage1.n}+{self.stage2.n}")


def mle_single(c: StageCounts) -> float:
    """MLE of prevalence from one stage: 1 - (1 - s/n)^(1/k)."""
    if c.n < 1:
        raise DomainError("MLE requires at least one tested group")
    if c.s == 0:
        return 0.0
    if c.s == c.n:
        return 1.0
    if c.k == 1:
        return c.xbar
    return -math.expm1(math.log1p(-c.xbar) / c.k)


def mle_pooled_same_k(r: TwoStageRecord) -> float:
    """MLE when both stages used the same pool size: merge and estimate once."""
    if r.stage2.n > 0 and r.stage1.k != r.stage2.k:
        raise ContractError(
            f"stages used different pool sizes ({r.stage1.k} vs {r.stage2.k}); use mle_mixed")
    merged = StageCounts(k=r.stage1.k, n=r.n2, s=r.stage1.s + r.stage2.s)
    return mle_single(merged)


def mixed_mle_coefficients(r: TwoStageRecord) -> tuple[float, float, float, float]:
    """Coefficients (A, B, C, D) of the score polynomial in q = 1 - p.

    The mixed-size score has a zero exactly where
    A*q^(k1+k2) + B*q^k1 + C*q^k2 + D vanishes, with
    D = k1*(m - S1) + k2*(M - S2), C = -D - k2*S2, B = -D - k1*S1,
    A = D + k1*S1 + k2*S2.
    """
    k1, m, s1 = r.stage1.k, r.stage1.n, r.stage1.s
    k2, big_m, s2 = r.stage2.k, r.stage2.n, r.stage2.s
    d = k1 * (m - s1) + k2 * (big_m - s2)
    c = -d - k2 * s2
    b = -d - k1 * s1
    a = d + k1 * s1 + k2 * s2
    return float(a), float(b), float(c), float(d)


def mle_mixed(r: TwoStageRecord) -> float:
    """MLE of prevalence when the two stages used different pool sizes.

    Solves the score polynomial for its unique root in (0, 1). Boundary
    data (no positives anywhere, or every pool positive) degenerates the
    polynomial and is answered directly with 0 or 1. Same-size records are
    still solved through the polynomial; they agree with the merged
    estimator to root-finder tolerance.
    """
    s_total = r.stage1.s + r.stage2.s
    if s_total == 0:
        return 0.0
    a, b, c, d = mixed_mle_coefficients(r)
    if d == 0.0:
        # every pool positive: likelihood increases to the boundary p = 1
        return 1.0
    k1 = r.stage1.k
    k2 = r.stage2.k

    def score_poly(q: float) -> float:
        return a * q ** (k1 + k2) + b * q ** k1 + c * q ** k2 + d

    # polynomial is +D > 0 near q=0 and approaches 0 from below at q=1
    # (its slope there is k1*k2*(S1+S2) > 0), so the bracket always holds.
    q_hat = find_root(score_poly, Bracket(1e-12, 1.0 - 1e-12, tol=1e-14))
    return 1.0 - q_hat


def delta_bias(p: float, k: int) -> float:
    """First-order bias factor of the pooled MLE; bias is this over n."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    if k == 1:
        return 0.0
    q = 1.0 - p
    return (k - 1) / (2.0 * k * k) * q * (q ** (-k) - 1.0)


def delta_var(p: float, k: int) -> float:
    """First-order variance factor of the pooled MLE; variance is this over n.

    For k = 1 the expression collapses to p*(1-p).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    q = 1.0 - p
    return q * q * (q ** (-k) - 1.0) / (k * k)


def proportional_interval(p_hat: float, gamma: float) -> tuple[float, float]:
    """Interval dual to proportional closeness: (p_hat/(1+gamma), p_hat/(1-gamma)).

    Covers the truth exactly when the estimate is within a fraction gamma
    of it.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must be in (0, 1), got {gamma!r}")
    return p_hat / (1.0 + gamma), p_hat / (1.0 - gamma)


def log_likelihood(p: float, r: TwoStageRecord) -> float:
    """Log-likelihood of a two-stage record at prevalence ``p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    q = 1.0 - p
    ll = r.stage1.s * math.log(theta_k(p, r.stage1.k)) \
        + (r.stage1.n - r.stage1.s) * r.stage1.k * math.log(q)
    if r.stage2.n > 0:
        ll += r.stage2.s * math.log(theta_k(p, r.stage2.k)) \
            + (r.stage2.n - r.stage2.s) * r.stage2.k * math.log(q)
    return ll


def score(p: float, r: TwoStageRecord) -> float:
    """Derivative of the log-likelihood with respect to ``p``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    q = 1.0 - p

    def stage_term(c: StageCounts) -> float:
        if c.n == 0:
            return 0.0
        return c.s * c.k * q ** (c.k - 1) / theta_k(p, c.k) - (c.n - c.s) * c.k / q

    return stage_term(r.stage1) + stage_term(r.stage2)


def fisher_info_two_stage(p: float, m: int, k1: int, k2: int, expected_m: float) -> float:
    """Fisher information of a two-stage design at prevalence ``p``.

    The stage-1 term is exact for ``m`` groups of size ``k1``; the stage-2
    term enters through the expected stage-2 group count, which the caller
    supplies (typically mean total minus ``m`` under the stopping-size
    approximation). The asymptotic standard deviation of the MLE is the
    inverse square root of the returned value.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    if expected_m < 0.0:
        raise DomainError(f"expected stage-2 count must be >= 0, got {expected_m!r}")
    q = 1.0 - p
    t1 = m * k1 * k1 * q ** (k1 - 2) / theta_k(p, k1)
    t2 = k2 * k2 * q ** (k2 - 2) * expected_m / theta_k(p, k2)
    return t1 + t2


def fisher_sd(fi: float) -> float:
    """Asymptotic standard deviation implied by a Fisher information value."""
    if fi <= 0.0:
        raise DomainError(f"information must be positive, got {fi!r}")
    return fi ** -0.5
