"""Fixed-sample sizing for individual and pooled testing.

The sizing chain is: a precision contract (``DesignParams``) fixes a
chi-squared quantile; the pool-positivity rate ``theta_k`` and the shape
factor ``psi`` convert it into a required number of groups; scanning pool
sizes gives the optimal design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .numerics import chi2_quantile_1df


@dataclass(frozen=True)
class DesignParams:
    """Precision contract: estimator within a fraction ``gamma`` of the truth
    with probability at least ``1 - alpha``."""

    alpha: float = 0.05
    gamma: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must be in (0, 1), got {self.gamma!r}")

    @property
    def chi2(self) -> float:
        return chi2_quantile_1df(1.0 - self.alpha)


@dataclass(frozen=True)
class GroupPlan:
    """A pool size together with the group count it requires."""

    k: int
    n_required: float
    n_ceil: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"pool size must be >= 1, got {self.k}")


def _check_k(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise DomainError(f"pool size must be an integer >= 1, got {k!r}")


def theta_k(p: float, k: int) -> float:
    """Probability that a pool of k samples tests positive: 1 - (1-p)^k."""
    _check_k(k)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"prevalence must be in [0, 1], got {p!r}")
    if k == 1:
        return p
    if p == 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-p))


def psi(theta: float, k: int) -> float:
    """Variance-shape factor mapping pool positivity rate to group counts.

    For k = 1 this reduces to (1 - theta) / theta. At the degenerate rates
    theta in {0, 1} the factor diverges and +inf is returned rather than
    raising: the sequential stopping rule must keep running when every
    pool so far agrees, and an infinite threshold does exactly that.
    """
    _check_k(k)
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"rate must be in [0, 1], got {theta!r}")
    if theta == 0.0 or theta == 1.0:
        return math.inf
    if k == 1:
        return (1.0 - theta) / theta
    log_q = math.log1p(-theta) / k
    one_minus_q1 = -math.expm1(log_q)
    # theta * q1^(2-k) / (1 - q1)^2, with q1^(2-k) kept in log space so
    # large pools with small rates do not underflow.
    return theta * math.exp((2.0 - k) * log_q) / (one_minus_q1 * one_minus_q1)


def psi_vec(thetas: np.ndarray, k: int) -> np.ndarray:
    """Vectorized ``psi`` over an array of rates; degenerate entries map to +inf."""
    _check_k(k)
    th = np.asarray(thetas, dtype=float)
    out = np.full(th.shape, math.inf)
    interior = (th > 0.0) & (th < 1.0)
    t = th[interior]
    if k == 1:
        out[interior] = (1.0 - t) / t
    else:
        log_q = np.log1p(-t) / k
        one_minus_q1 = -np.expm1(log_q)
        out[interior] = t * np.exp((2.0 - k) * log_q) / (one_minus_q1 * one_minus_q1)
    return out


def psi_prime(theta: float, k: int) -> float:
    """First derivative of ``psi`` with respect to the rate.

    Closed form via the chain rule through q = (1-theta)^(1/k); validated
    against central finite differences in the test suite.
    """
    _check_k(k)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"rate must be in (0, 1), got {theta!r}")
    q = math.exp(math.log1p(-theta) / k)
    a = q ** (1 - k) * (2.0 - k * (1.0 - q)) - 2.0 * q
    return -a / (k * q ** (k - 1) * (1.0 - q) ** 3)


def psi_double_prime(theta: float, k: int) -> float:
    """Second derivative of ``psi`` with respect to the rate."""
    _check_k(k)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"rate must be in (0, 1), got {theta!r}")
    q = math.exp(math.log1p(-theta) / k)
    one_m = 1.0 - q
    a = q ** (1 - k) * (2.0 - k * one_m) - 2.0 * q
    a_prime = (2.0 - k) * q ** (-k) * (1.0 - k * one_m) - 2.0
    num = (a_prime * q ** (1 - k) / one_m ** 3
           + (1 - k) * a * q ** (-k) / one_m ** 3
           + 3.0 * a * q ** (1 - k) / one_m ** 4)
    return num / (k * k * q ** (k - 1))


def n_star_individual(p: float, d: DesignParams) -> float:
    """Sample size bound for one-at-a-time testing (real-valued; ceil to use)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    return d.chi2 * (1.0 - p) / (p * d.gamma * d.gamma)


def zeta(k: int, d: DesignParams) -> float:
    """Design constant scaling ``psi`` into group counts: chi2 / (gamma*k)^2."""
    _check_k(k)
    gk = d.gamma * k
    return d.chi2 / (gk * gk)


def _required_groups(p: float, k: int, d: DesignParams) -> float:
    """Real-valued group requirement; +inf when it exceeds float range.

    Normally zeta * psi(theta_k). For pools large enough that theta_k
    rounds to 1.0 the sentinel would hide a finite (astronomical) value,
    so the same quantity is evaluated from p directly in log space:
    the pool-level root (1-theta)^(1/k) equals 1-p exactly, giving
    psi = theta * (1-p)^(2-k) / p^2.
    """
    if k == 1:
        return n_star_individual(p, d)
    if not 0.0 < p < 1.0:
        raise DomainError(f"prevalence must be in (0, 1), got {p!r}")
    n = zeta(k, d) * psi(theta_k(p, k), k)
    if math.isinf(n):
        log_n = (math.log(d.chi2) - 2.0 * math.log(d.gamma * k)
                 + (2.0 - k) * math.log1p(-p) - 2.0 * math.log(p))
        n = math.exp(log_n) if log_n <= 709.0 else math.inf
    return n


def n_star_group(p: float, k: int, d: DesignParams) -> GroupPlan:
    """Required group count for pools of size k.

    The k = 1 case is routed through ``n_star_individual`` so both
    operations share one arithmetic path and agree bit for bit.
    """
    _check_k(k)
    n = _required_groups(p, k, d)
    if math.isinf(n):
        raise DomainError(
            f"required group count for pools of {k} at p={p!r} exceeds float range")
    return GroupPlan(k=k, n_required=n, n_ceil=math.ceil(n))


def optimal_group_size(p: float, d: DesignParams, k_max: int = 1000) -> GroupPlan:
    """Exhaustive scan for the pool size minimizing the required group count.

    Ties within 1e-9 absolute go to the smaller pool. The scan is cheap
    (one ``psi`` evaluation per candidate) and makes no unimodality
    assumption about the objective. Candidates whose requirement exceeds
    float range cannot win and are skipped.
    """
    _check_k(k_max)
    best_k = 0
    best_n = math.inf
    for k in range(1, k_max + 1):
        n = _required_groups(p, k, d)
        if n < best_n - 1e-9:
            best_k, best_n = k, n
    if best_k == 0:
        raise DomainError(f"no finite design for p={p!r} with pools up to {k_max}")
    return n_star_group(p, best_k, d)
