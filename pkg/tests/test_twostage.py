"""Two-stage sizing, the total-count distribution, and the linear estimator.

The derivative kernels are the riskiest code here (hand-reduced closed
forms), so they get high-order finite-difference checks over a grid of
rates and pool sizes.
"""

import math

import numpy as np
import pytest

from gtseq.design import DesignParams, psi, theta_k, zeta
from gtseq.errors import DomainError
from gtseq.estimation import StageCounts, TwoStageRecord, mle_single
from gtseq.twostage import (
    TwoStageConfig,
    linear_combo,
    linear_combo_coverage,
    linear_combo_mean,
    linear_combo_se,
    linear_combo_var,
    mle_over_psi,
    mle_over_psi_d1,
    mle_over_psi_d2,
    mle_over_psi_sq,
    mle_over_psi_sq_d2,
    n2_distribution,
    resolve_k2,
    stage2_size,
)

# p, k1, k2, m, and the reference total-count moments for those settings
REFERENCE_ROWS = (
    (0.5, 2, 3, 200, 288.61, 23.526),
    (0.4, 3, 3, 200, 349.08, 18.370),
    (0.3, 4, 4, 300, 414.21, 14.905),
    (0.2, 7, 7, 400, 473.19, 7.493),
    (0.1, 15, 16, 500, 533.88, 3.481),
    (0.05, 31, 31, 500, 563.89, 1.726),
)

KERNEL_GRID = [(x, k) for x in (0.15, 0.4, 0.62, 0.75, 0.9) for k in (1, 2, 5, 16)]


def central_d1(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def central_d2(f, x, h):
    # Richardson-extrapolated second difference; the plain stencil's h^2
    # truncation term is visible at 1e-6 where the fourth derivative is big
    a = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    hh = h / 2.0
    b = (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh)
    return (4.0 * b - a) / 3.0


# --- configuration and stage-2 sizing ---------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(m=0, k1=2),
    dict(m=200, k1=0),
    dict(m=200, k1=2, k2_rule="best"),
    dict(m=200, k1=2, k2_rule=0),
])
def test_config_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        TwoStageConfig(**kwargs)


def test_resolve_k2_fixed():
    cfg = TwoStageConfig(m=200, k1=2, k2_rule=7)
    assert resolve_k2(cfg, 0.3) == 7


def test_resolve_k2_optimal_matches_known_minima():
    cfg = TwoStageConfig(m=200, k1=2)
    for p_hat, k in ((0.5, 2), (0.3, 4), (0.1, 15), (0.05, 31)):
        assert resolve_k2(cfg, p_hat) == k


def test_resolve_k2_degenerate_estimates():
    cfg = TwoStageConfig(m=200, k1=3)
    assert resolve_k2(cfg, 0.0) == 3
    assert resolve_k2(cfg, 1.0) == 1


def test_resolve_k2_respects_k_max():
    cfg = TwoStageConfig(m=200, k1=2)
    assert resolve_k2(cfg, 0.001, k_max=50) <= 50


def test_stage2_size_no_extra_needed():
    # rate 0.75 at k=2 needs about 288 groups total; 400 already covers it
    out = stage2_size(400, 2, 0.75, DesignParams())
    assert out.m2 == 0 and out.n2 == 400 and not out.capped


def test_stage2_size_shortfall():
    d = DesignParams()
    out = stage2_size(200, 2, 0.75, d)
    n_req = zeta(2, d) * psi(0.75, 2)
    assert out.n_req == pytest.approx(n_req, rel=1e-12)
    assert out.m2 == math.floor(n_req) + 1 - 200
    assert out.n2 == 200 + out.m2 and not out.capped


def test_stage2_size_caps_degenerate_rate():
    out = stage2_size(200, 2, 1.0, DesignParams())
    assert math.isinf(out.n_req)
    assert out.capped and out.m2 > 0 and out.n2 == 200 + out.m2


def test_stage2_size_explicit_cap_binds():
    out = stage2_size(200, 2, 0.75, DesignParams(), m_cap=10)
    assert out.capped and out.m2 == 10 and out.n2 == 210


@pytest.mark.parametrize("m,xbar", [(0, 0.5), (200, -0.1), (200, 1.5)])
def test_stage2_size_domain(m, xbar):
    with pytest.raises(DomainError):
        stage2_size(m, 2, xbar, DesignParams())


# --- total-count distribution ------------------------------------------------


@pytest.mark.parametrize("p,k1,k2,m,e_n2,sd_n2", REFERENCE_ROWS)
def test_total_count_moments(p, k1, k2, m, e_n2, sd_n2):
    dist = n2_distribution(p, TwoStageConfig(m=m, k1=k1, k2_rule=k2))
    assert dist.mean == pytest.approx(e_n2, abs=0.05)
    assert dist.sd == pytest.approx(sd_n2, abs=0.05)


def test_total_count_distribution_invariants():
    cfg = TwoStageConfig(m=300, k1=4, k2_rule=4)
    dist = n2_distribution(0.3, cfg)
    assert dist.support[0] == 300
    assert float(dist.probs.sum()) == pytest.approx(1.0, abs=1e-12)
    assert np.all(dist.probs >= 0.0)
    # floor-plus-one rounding always lands at or above the requirement
    assert dist.mean >= zeta(4, cfg.design) * psi(theta_k(0.3, 4), 4)
    assert dist.e_inv == pytest.approx(float(np.dot(dist.probs, 1.0 / dist.support)), rel=1e-12)
    assert dist.var_inv == pytest.approx(dist.e_inv_sq - dist.e_inv ** 2, abs=1e-15)
    assert dist.e_m2 == pytest.approx(dist.mean - 300.0, abs=1e-12)


def test_total_count_rejects_boundary_prevalence():
    cfg = TwoStageConfig(m=200, k1=2)
    for p in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            n2_distribution(p, cfg)


# --- derivative kernels ------------------------------------------------------


@pytest.mark.parametrize("x,k", KERNEL_GRID)
def test_kernel_matches_definition(x, k):
    u = (1.0 - x) ** (1.0 / k)
    assert mle_over_psi(x, k) == pytest.approx((1.0 - u) / psi(x, k), rel=1e-12)
    assert mle_over_psi_sq(x, k) == pytest.approx((1.0 - u) / psi(x, k) ** 2, rel=1e-12)


@pytest.mark.parametrize("x,k", KERNEL_GRID)
def test_kernel_first_derivative(x, k):
    got = mle_over_psi_d1(x, k)
    fd = central_d1(lambda t: mle_over_psi(t, k), x, 1e-6)
    assert got == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("x,k", KERNEL_GRID)
def test_kernel_second_derivative(x, k):
    got = mle_over_psi_d2(x, k)
    fd = central_d2(lambda t: mle_over_psi(t, k), x, 1e-4)
    assert got == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("x,k", KERNEL_GRID)
def test_squared_kernel_second_derivative(x, k):
    got = mle_over_psi_sq_d2(x, k)
    fd = central_d2(lambda t: mle_over_psi_sq(t, k), x, 1e-4)
    assert got == pytest.approx(fd, rel=1e-6)


def test_kernel_domain():
    for bad_x in (0.0, 1.0, -0.5):
        with pytest.raises(DomainError):
            mle_over_psi(bad_x, 2)
    with pytest.raises(DomainError):
        mle_over_psi_d2(0.5, 0)


# --- linear combination of per-stage estimates -------------------------------


def test_linear_combo_weighted_average():
    r = TwoStageRecord(StageCounts(2, 200, 150), StageCounts(3, 90, 60))
    p1 = mle_single(r.stage1)
    p2 = mle_single(r.stage2)
    expected = (200 * p1 + 90 * p2) / 290
    assert linear_combo(r) == pytest.approx(expected, rel=1e-14)


def test_linear_combo_degenerates_to_stage1():
    r = TwoStageRecord(StageCounts(2, 200, 150), StageCounts(3, 0, 0))
    assert linear_combo(r) == pytest.approx(mle_single(r.stage1), rel=1e-14)


@pytest.mark.parametrize("p,k1,k2,m,mean_ref,se_ref", [
    (0.4, 3, 3, 200, 0.400, 0.02428),
    (0.3, 4, 4, 300, 0.300, 0.01880),
    (0.2, 7, 7, 400, 0.200, 0.01215),
    (0.1, 15, 16, 500, 0.100, 0.00605),
    (0.05, 31, 31, 500, 0.050, 0.00293),
])
def test_linear_moments_near_reference(p, k1, k2, m, mean_ref, se_ref):
    cfg = TwoStageConfig(m=m, k1=k1, k2_rule=k2)
    assert linear_combo_mean(p, cfg, k2) == pytest.approx(mean_ref, abs=5e-3)
    assert linear_combo_se(p, cfg, k2) == pytest.approx(se_ref, abs=2e-3)


def test_linear_variance_shrinks_with_stage1_size():
    k2 = 4
    small = linear_combo_var(0.3, TwoStageConfig(m=150, k1=4, k2_rule=k2), k2)
    large = linear_combo_var(0.3, TwoStageConfig(m=300, k1=4, k2_rule=k2), k2)
    assert 0.0 < large < small


def test_linear_coverage_unbiased_case():
    cp = linear_combo_coverage(0.3, 0.3, 0.015, 0.1)
    # symmetric band around an unbiased estimate
    phi = 0.5 * math.erfc(-(0.1 * 0.3 / 0.015) / math.sqrt(2.0))
    assert cp == pytest.approx(2.0 * phi - 1.0, abs=1e-12)


def test_linear_coverage_falls_with_bias():
    base = linear_combo_coverage(0.3, 0.300, 0.015, 0.1)
    skew = linear_combo_coverage(0.3, 0.312, 0.015, 0.1)
    assert skew < base


def test_linear_coverage_requires_positive_se():
    with pytest.raises(DomainError):
        linear_combo_coverage(0.3, 0.3, 0.0, 0.1)
