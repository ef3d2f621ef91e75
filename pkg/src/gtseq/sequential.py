"""One-at-a-time sequential testing with a group-count stopping rule.

The rule stops at the first n >= m for which n exceeds
zeta_k * psi(observed positivity rate). This module drives that rule one
outcome at a time, and computes the normal-approximation distribution of
the stopping time together with the moments and coverage of the estimator
at stopping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignParams, psi, psi_prime, theta_k, zeta
from .errors import ContractError, DomainError, HorizonError
from .estimation import StageCounts, delta_bias, delta_var, mle_single
from .numerics import std_normal_cdf


@dataclass(frozen=True)
class SequentialConfig:
    k: int
    m: int
    design: DesignParams = DesignParams()
    n_max: int | None = None  # truncation horizon; None = derive from p

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k}")
        if self.m < 1:
            raise DomainError(f"initial group count must be >= 1, got {self.m}")
        if self.n_max is not None and self.n_max < self.m:
            raise DomainError(f"horizon {self.n_max} below initial count {self.m}")


@dataclass(frozen=True)
class SequentialState:
    """Snapshot of a running study after ``n`` groups with ``s`` positives.

    ``threshold`` is the current stopping boundary zeta_k * psi(s/n); it is
    +inf while the observed rate is degenerate (all negative or all
    positive), which keeps the study running. Invariant:
    stopped == (n >= m and n > threshold).
    """

    n: int = 0
    s: int = 0
    stopped: bool = False
    p_hat: float = 0.0
    threshold: float = math.inf

    @property
    def xbar(self) -> float:
        return self.s / self.n if self.n > 0 else 0.0


def initial_state() -> SequentialState:
    return SequentialState()


def advance(state: SequentialState, outcome: int, cfg: SequentialConfig) -> SequentialState:
    """Record one pool outcome (0 or 1) and re-evaluate the stopping rule."""
    if state.stopped:
        raise ContractError("cannot advance a stopped study")
    if outcome not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {outcome!r}")
    n = state.n + 1
    s = state.s + outcome
    threshold = zeta(cfg.k, cfg.design) * psi(s / n, cfg.k)
    return SequentialState(
        n=n,
        s=s,
        stopped=(n >= cfg.m and n > threshold),
        p_hat=mle_single(StageCounts(k=cfg.k, n=n, s=s)),
        threshold=threshold,
    )


@dataclass(frozen=True)
class StoppingPmf:
    """Distribution of the stopping time on integers ``support[0]..support[-1]``.

    ``folded_tail`` is the probability mass beyond the horizon that was
    added onto the final support point to make the masses sum to one.
    """

    support: np.ndarray
    probs: np.ndarray
    folded_tail: float


def stopping_tail(n: int, p: float, cfg: SequentialConfig) -> float:
    """P(stopping time > n), by the normal approximation.

    The variance of psi(observed rate) is taken to first order,
    psi'(theta)^2 * theta * (1-theta) / n, evaluated at the same n.
    """
    if n < cfg.m:
        raise DomainError(f"tail is defined for n >= m; got n={n}, m={cfg.m}")
    th = theta_k(p, cfg.k)
    z = zeta(cfg.k, cfg.design)
    mu = z * psi(th, cfg.k)
    sd = z * abs(psi_prime(th, cfg.k)) * math.sqrt(th * (1.0 - th) / n)
    return 1.0 - std_normal_cdf((n - mu) / sd)


def default_horizon(p: float, cfg: SequentialConfig) -> int:
    """Truncation horizon: center plus twelve approximate standard deviations.

    Evaluating the tail spread at the center itself is enough to push the
    residual mass far below 1e-9; the result is clipped to at least m+10.
    """
    th = theta_k(p, cfg.k)
    z = zeta(cfg.k, cfg.design)
    mu = z * psi(th, cfg.k)
    sd_center = z * abs(psi_prime(th, cfg.k)) * math.sqrt(th * (1.0 - th) / max(mu, 1.0))
    return max(cfg.m + 10, math.ceil(mu + 12.0 * sd_center))


def stopping_pmf(p: float, cfg: SequentialConfig) -> StoppingPmf:
    """Probability mass function of the stopping time on m..n_max.

    P(N = m) absorbs the whole lower tail; interior masses are successive
    tail differences; any residual tail at the horizon below 1e-9 is folded
    into the final point (and reported). A larger residual raises
    ``HorizonError`` instead of silently truncating.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    n_max = cfg.n_max if cfg.n_max is not None else default_horizon(p, cfg)
    if n_max < cfg.m:
        raise DomainError(f"horizon {n_max} below initial count {cfg.m}")

    th = theta_k(p, cfg.k)
    z = zeta(cfg.k, cfg.design)
    mu = z * psi(th, cfg.k)
    spread = z * abs(psi_prime(th, cfg.k)) * math.sqrt(th * (1.0 - th))

    support = np.arange(cfg.m, n_max + 1)
    zscores = (support - mu) / (spread / np.sqrt(support))
    tails = 0.5 * np.array([math.erfc(v / math.sqrt(2.0)) for v in zscores])

    residual = float(tails[-1])
    if residual >= 1e-9:
        raise HorizonError(
            f"residual stopping mass {residual:.3e} beyond horizon {n_max}; raise n_max",
            residual_tail=residual,
        )
    probs = np.empty(support.shape)
    probs[0] = 1.0 - tails[0]
    probs[1:] = tails[:-1] - tails[1:]
    probs[-1] += residual

    # The normal approximation can only produce a decreasing tail when the
    # initial count is not tiny relative to the center; genuine negative
    # masses mean the approximation does not apply to this configuration.
    tiny_negative = (probs < 0.0) & (probs > -1e-15)
    probs[tiny_negative] = 0.0
    if np.any(probs < 0.0):
        raise DomainError(
            "stopping-time approximation produced negative masses; "
            f"configuration m={cfg.m} is too small for its stopping center {mu:.1f}")
    return StoppingPmf(support=support, probs=probs, folded_tail=residual)


@dataclass(frozen=True)
class NMoments:
    e_n: float
    sd_n: float
    e_inv_n: float
    var_inv_n: float


def n_moments(pmf: StoppingPmf) -> NMoments:
    """Exact moments of the discrete stopping-time distribution."""
    n = pmf.support.astype(float)
    w = pmf.probs
    e_n = float(np.dot(w, n))
    var_n = float(np.dot(w, (n - e_n) ** 2))
    e_inv = float(np.dot(w, 1.0 / n))
    var_inv = float(np.dot(w, (1.0 / n - e_inv) ** 2))
    return NMoments(e_n=e_n, sd_n=math.sqrt(max(var_n, 0.0)),
                    e_inv_n=e_inv, var_inv_n=max(var_inv, 0.0))


@dataclass(frozen=True)
class EstimatorMoments:
    mean: float
    sd: float


def estimator_moments(p: float, k: int, pmf: StoppingPmf) -> EstimatorMoments:
    """Delta-method mean and sd of the MLE at stopping, averaged over the pmf."""
    mom = n_moments(pmf)
    e = delta_bias(p, k)
    v = delta_var(p, k)
    mean = p + e * mom.e_inv_n
    var = e * e * mom.var_inv_n + v * mom.e_inv_n
    return EstimatorMoments(mean=mean, sd=math.sqrt(max(var, 0.0)))


def coverage(p: float, k: int, gamma: float, pmf: StoppingPmf) -> float:
    """Probability the estimator at stopping lands within a fraction gamma of p."""
    v = delta_var(p, k)
    half = gamma * p * np.sqrt(pmf.support / v)
    phis = 0.5 * np.array([math.erfc(-x / math.sqrt(2.0)) for x in half])
    return float(2.0 * np.dot(pmf.probs, phis) - 1.0)
