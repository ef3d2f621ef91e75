"""Two-stage designs: pilot stage, data-driven second-stage size, and the
linear combination of the two stage MLEs.

Stage 1 tests ``m`` pools of size ``k1``; its observed rate fixes the total
group count to reach the precision contract, and the shortfall is tested in
stage 2 (possibly with a different pool size chosen from the stage-1
estimate). Alongside the simple linear estimator this module provides the
normal-approximation distribution of the total count and delta-method
moment expansions for the linear estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignParams, optimal_group_size, psi, psi_prime, theta_k, zeta
from .errors import DomainError
from .estimation import TwoStageRecord, delta_bias, delta_var, mle_single
from .numerics import std_normal_cdf

# Generosity factor for the fallback cap on the stage-2 group count. A
# degenerate pilot rate makes the required total infinite; fifty times the
# count suggested by a half-observation adjustment is far beyond any
# plausible requirement yet still finite.
CAP_FACTOR = 50.0


@dataclass(frozen=True)
class TwoStageConfig:
    """Stage-1 size and pool size, plus how stage 2 picks its pool size.

    ``k2_rule`` is either a fixed pool size (int) or the string
    ``"optimal"``, meaning the stage-2 pool size minimizes the required
    group count at the stage-1 estimate.
    """

    m: int
    k1: int
    design: DesignParams = DesignParams()
    k2_rule: int | str = "optimal"

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"stage-1 group count must be >= 1, got {self.m}")
        if self.k1 < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k1}")
        if isinstance(self.k2_rule, str):
            if self.k2_rule != "optimal":
                raise DomainError(f"k2_rule must be a pool size or 'optimal', got {self.k2_rule!r}")
        elif self.k2_rule < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k2_rule}")


def resolve_k2(cfg: TwoStageConfig, p_hat1: float, k_max: int = 1000) -> int:
    """Stage-2 pool size under the config's rule, given the stage-1 estimate."""
    if isinstance(cfg.k2_rule, int):
        return cfg.k2_rule
    if p_hat1 <= 0.0:
        return cfg.k1  # nothing learned; keep the current pool size
    if p_hat1 >= 1.0:
        return 1
    return optimal_group_size(p_hat1, cfg.design, k_max=k_max).k


@dataclass(frozen=True)
class Stage2Size:
    """Stage-2 sizing outcome: required total, extra groups, grand total."""

    n_req: float
    m2: int
    n2: int
    capped: bool = False


def stage2_size(m: int, k1: int, xbar1: float, d: DesignParams,
                m_cap: int | None = None) -> Stage2Size:
    """Number of additional groups needed after observing rate ``xbar1``.

    The required total is zeta_{k1} * psi(xbar1), infinite when the rate is
    degenerate. If stage 1 already covers it, no stage-2 groups are needed.
    Otherwise the shortfall is floor(required)+1-m, limited by ``m_cap``
    (or, when no cap is given, by CAP_FACTOR times the total suggested
    after nudging the rate off its boundary by half an observation); a
    binding limit is flagged.
    """
    if not 0.0 <= xbar1 <= 1.0:
        raise DomainError(f"observed rate must be in [0, 1], got {xbar1!r}")
    if m < 1:
        raise DomainError(f"stage-1 group count must be >= 1, got {m}")
    n_req = zeta(k1, d) * psi(xbar1, k1)
    if m > n_req:
        return Stage2Size(n_req=n_req, m2=0, n2=m)
    if m_cap is None:
        adjusted = (m * min(max(xbar1, 0.0), 1.0) + 0.5) / (m + 1)
        m_cap = math.ceil(CAP_FACTOR * zeta(k1, d) * psi(adjusted, k1))
    raw = math.inf if math.isinf(n_req) else math.floor(n_req) + 1 - m
    if raw > m_cap:
        return Stage2Size(n_req=n_req, m2=m_cap, n2=m + m_cap, capped=True)
    m2 = int(raw)
    return Stage2Size(n_req=n_req, m2=m2, n2=m + m2)


@dataclass(frozen=True)
class N2Distribution:
    """Discrete approximation to the total-group-count distribution.

    A normal law centered at zeta*psi(theta) with spread from the stage-1
    sampling noise is pushed through the floor-plus-one sizing rule and
    floored at ``m``, yielding a lattice distribution on ``support``.
    """

    support: np.ndarray
    probs: np.ndarray
    mean: float
    sd: float
    e_inv: float
    e_inv_sq: float
    var_inv: float

    @property
    def e_m2(self) -> float:
        """Expected number of stage-2 groups."""
        return self.mean - float(self.support[0])


def n2_distribution(p: float, cfg: TwoStageConfig) -> N2Distribution:
    """Distribution of the total group count at true prevalence ``p``.

    The continuous required-total is approximately normal with mean
    zeta * psi(theta) and variance zeta^2 * psi'(theta)^2 theta(1-theta)/m;
    the realized count is its floor plus one, never less than ``m``.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    th = theta_k(p, cfg.k1)
    z = zeta(cfg.k1, cfg.design)
    mu = z * psi(th, cfg.k1)
    sd_req = z * abs(psi_prime(th, cfg.k1)) * math.sqrt(th * (1.0 - th) / cfg.m)

    lo = cfg.m
    hi = max(lo + 1, math.ceil(mu + 12.0 * sd_req))
    support = np.arange(lo, hi + 1)
    # CDF of the continuous requirement at n, n-1, ...; the count equals n
    # exactly when the requirement falls in [n-1, n), and sticks at m for
    # anything below.
    upper = 0.5 * np.array([math.erfc(-(n - mu) / (sd_req * math.sqrt(2.0))) for n in support])
    probs = np.empty(support.shape)
    probs[0] = upper[0]
    probs[1:] = upper[1:] - upper[:-1]
    probs[-1] += 1.0 - upper[-1]

    nf = support.astype(float)
    mean = float(np.dot(probs, nf))
    var = float(np.dot(probs, (nf - mean) ** 2))
    e_inv = float(np.dot(probs, 1.0 / nf))
    e_inv_sq = float(np.dot(probs, 1.0 / nf ** 2))
    return N2Distribution(
        support=support, probs=probs,
        mean=mean, sd=math.sqrt(max(var, 0.0)),
        e_inv=e_inv, e_inv_sq=e_inv_sq,
        var_inv=max(e_inv_sq - e_inv * e_inv, 0.0),
    )


def linear_combo(r: TwoStageRecord) -> float:
    """Group-count-weighted average of the two per-stage MLEs."""
    p1 = mle_single(r.stage1)
    if r.stage2.n == 0:
        return p1
    p2 = mle_single(r.stage2)
    return (r.stage1.n * p1 + r.stage2.n * p2) / r.n2


# ---------------------------------------------------------------------------
# Delta-method kernels for the linear estimator.
#
# With u = (1-x)^(1/k), the stage-1 MLE is 1-u and the required total is
# zeta*psi(x), so the products appearing in the moment expansions are
# controlled by the ratio (MLE / psi) and its square, taken as functions of
# the observed rate x. Their derivatives below are hand-reduced closed
# forms; the test suite checks them against high-order finite differences.
# ---------------------------------------------------------------------------


def mle_over_psi(x: float, k: int) -> float:
    """Ratio of the stage-1 MLE to the shape factor psi, at observed rate x."""
    _check_kernel_args(x, k)
    u = math.exp(math.log1p(-x) / k)
    return (1.0 - x) * (1.0 - u) ** 3 / (x * u * u)


def mle_over_psi_d1(x: float, k: int) -> float:
    """First derivative of ``mle_over_psi`` in the observed rate."""
    _check_kernel_args(x, k)
    u = math.exp(math.log1p(-x) / k)
    return (1.0 - u) ** 2 * (u * (x + k) + 2.0 * x - k) / (k * x * x * u * u)


def mle_over_psi_d2(x: float, k: int) -> float:
    """Second derivative of ``mle_over_psi`` in the observed rate."""
    _check_kernel_args(x, k)
    u = math.exp(math.log1p(-x) / k)
    a = -4.0 * x * (k - x) + 2.0 * k * (k * (1.0 - x) + x * x)
    b = x * k * (2.0 - x) - 4.0 * k * k * (1.0 - x) + x * x
    c = -x * x * (k - 1.0) + 2.0 * k * k * (1.0 - x) + 2.0 * x * k
    return (1.0 - u) * (a + b * u + c * u * u) / (x ** 3 * k * k * u * u * (1.0 - x))


def mle_over_psi_sq(x: float, k: int) -> float:
    """Stage-1 MLE divided by psi squared, at observed rate x."""
    _check_kernel_args(x, k)
    u = math.exp(math.log1p(-x) / k)
    return (1.0 - x) ** 2 * (1.0 - u) ** 5 / (x * x * u ** 4)


def mle_over_psi_sq_d2(x: float, k: int) -> float:
    """Second derivative of ``mle_over_psi_sq`` in the observed rate."""
    _check_kernel_args(x, k)
    u = math.exp(math.log1p(-x) / k)
    a = 4.0 * x * (k - x) * (4.0 + k) - 6.0 * k * k
    b = -4.0 * x * k * (3.0 + 2.0 * k) + 3.0 * x * x * (k - 1.0) + 12.0 * k * k
    c = x * (k - 1.0) * (4.0 * k + x) - 6.0 * k * k
    return -(1.0 - u) ** 3 * (a + b * u + c * u * u) / (k * k * u ** 4 * x ** 4)


def _check_kernel_args(x: float, k: int) -> None:
    if not 0.0 < x < 1.0:
        raise DomainError(f"rate must be in (0, 1), got {x!r}")
    if k < 1:
        raise DomainError(f"pool size must be >= 1, got {k}")


def linear_combo_mean(p: float, cfg: TwoStageConfig, k2: int) -> float:
    """Approximate expectation of the linear estimator at prevalence ``p``.

    Second-order delta expansion around the stage-1 rate for the
    stage-1-over-total term, plus the stage-2 bias term weighted by the
    expected reciprocal total. ``k2`` is treated as a constant.
    """
    th = theta_k(p, cfg.k1)
    z = zeta(cfg.k1, cfg.design)
    dist = n2_distribution(p, cfg)
    spread = th * (1.0 - th) / (2.0 * cfg.m)
    e_p1_over_n2 = (mle_over_psi(th, cfg.k1) + mle_over_psi_d2(th, cfg.k1) * spread) / z
    c2 = delta_bias(p, k2)
    return p + cfg.m * e_p1_over_n2 + (c2 - cfg.m * p) * dist.e_inv


def linear_combo_var(p: float, cfg: TwoStageConfig, k2: int) -> float:
    """Approximate variance of the linear estimator at prevalence ``p``.

    Law-of-total-variance decomposition: stage-2 sampling noise enters
    through the expected reciprocal total; the variance of the conditional
    mean combines the stage-1 term (first-order delta), the reciprocal
    total variance, and their cross moment.
    """
    th = theta_k(p, cfg.k1)
    th_bar = 1.0 - th
    z = zeta(cfg.k1, cfg.design)
    m = cfg.m
    dist = n2_distribution(p, cfg)
    spread = th * th_bar / (2.0 * m)

    e_p1_over_n2 = (mle_over_psi(th, cfg.k1) + mle_over_psi_d2(th, cfg.k1) * spread) / z
    e_p1_over_n2sq = (mle_over_psi_sq(th, cfg.k1)
                      + mle_over_psi_sq_d2(th, cfg.k1) * spread) / (z * z)
    c2 = delta_bias(p, k2)
    v2 = delta_var(p, k2)
    slope = mle_over_psi_d1(th, cfg.k1)

    within = v2 * (dist.e_inv - m * dist.e_inv_sq)
    stage1_term = (m / (z * z)) * slope * slope * th * th_bar
    recip_term = (m * p - c2) ** 2 * dist.var_inv
    cross = -2.0 * m * (m * p - c2) * (e_p1_over_n2sq - e_p1_over_n2 * dist.e_inv)
    return within + stage1_term + recip_term + cross


def linear_combo_se(p: float, cfg: TwoStageConfig, k2: int) -> float:
    """Standard error of the linear estimator: root of ``linear_combo_var``."""
    return math.sqrt(linear_combo_var(p, cfg, k2))


def linear_combo_coverage(p: float, mean: float, se: float, gamma: float) -> float:
    """Normal-approximation coverage of the proportional band for a biased
    estimator with the given mean and standard error."""
    if se <= 0.0:
        raise DomainError(f"standard error must be positive, got {se!r}")
    bias = mean - p
    return (std_normal_cdf((gamma * p - bias) / se)
            + std_normal_cdf((gamma * p + bias) / se) - 1.0)
