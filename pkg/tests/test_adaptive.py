"""Pilot-then-sequential adaptive procedure, driven by scripted outcome
sources so every branch is deterministic."""

import math

import pytest

import gtseq.adaptive as adaptive_mod
from gtseq.adaptive import AdaptiveConfig, AdaptiveResult, choose_k_m, run_adaptive
from gtseq.errors import DomainError, HorizonError


def scripted(seq, expect_k=None):
    """Outcome source replaying ``seq``; optionally checks the pool sizes
    the procedure asks for, one expectation per call."""
    it = iter(seq)
    ks = iter(expect_k) if expect_k is not None else None

    def source(k):
        if ks is not None:
            assert k == next(ks)
        return next(it)

    return source


@pytest.mark.parametrize("kwargs", [
    dict(m0=0), dict(k0=0), dict(m_fraction=0.0), dict(m_fraction=1.2),
])
def test_config_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        AdaptiveConfig(**kwargs)


def test_choose_k_m_full_requirement():
    got = choose_k_m(0.5, AdaptiveConfig())
    assert got.k == 2 and got.m == 289


def test_choose_k_m_scaled_requirement():
    got = choose_k_m(0.5, AdaptiveConfig(m_fraction=0.95))
    assert got.k == 2 and got.m == 274


def test_choose_k_m_tracks_optimal_pool():
    cfg = AdaptiveConfig()
    assert choose_k_m(0.1, cfg).k == 15
    assert choose_k_m(0.05, cfg).k == 31


def test_choose_k_m_rejects_boundary_estimates():
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            choose_k_m(bad, AdaptiveConfig())


def test_full_run_pools_both_phases():
    # pilot: 75 of 100 positive at k=2 gives estimate 0.5, so phase 2 runs
    # at k=2 with initial count 289; the walkthrough sequence stops there.
    pilot = [1] * 75 + [0] * 25
    phase2 = [0, 1, 1, 1] * 72 + [1]
    res = run_adaptive(scripted(pilot + phase2, expect_k=[2] * (100 + 289)),
                       AdaptiveConfig())
    assert res.p_hat0 == pytest.approx(0.5, abs=1e-12)
    assert res.k == 2 and res.m == 289
    assert res.pilot_groups == 100
    assert res.n3 == 389
    assert not res.degenerate
    # both phases share a pool size, so the mixed estimate is the pooled one
    xbar = (75 + 217) / 389
    assert res.p_hat_final == pytest.approx(1.0 - (1.0 - xbar) ** 0.5, abs=1e-12)


def test_run_is_deterministic():
    pilot = [1] * 75 + [0] * 25
    phase2 = [0, 1, 1, 1] * 72 + [1]
    a = run_adaptive(scripted(pilot + phase2), AdaptiveConfig())
    b = run_adaptive(scripted(pilot + phase2), AdaptiveConfig())
    assert a == b


def test_pilot_switches_pool_size():
    # 51 of 100 positive at k=2 estimates 0.3 exactly; the optimal pool
    # size there is 4 and the full requirement rounds up to 414
    pilot = [1] * 51 + [0] * 49
    phase2 = [1, 1, 1, 0] * 200
    ks = [2] * 100 + [4] * 800
    res = run_adaptive(scripted(pilot + phase2, expect_k=ks), AdaptiveConfig())
    assert res.p_hat0 == pytest.approx(0.3, abs=1e-12)
    assert res.k == 4 and res.m == 414
    assert res.n3 >= 100 + 414
    assert 0.0 < res.p_hat_final < 1.0


def test_all_negative_pilot_is_degenerate():
    res = run_adaptive(scripted([0] * 200), AdaptiveConfig())
    assert res == AdaptiveResult(p_hat0=0.0, k=2, m=0, n3=200,
                                 p_hat_final=0.0, pilot_groups=200,
                                 degenerate=True)


def test_all_positive_pilot_is_degenerate():
    res = run_adaptive(scripted([1] * 200), AdaptiveConfig())
    assert res.degenerate and res.p_hat_final == 1.0 and res.n3 == 200


def test_pilot_retry_can_recover():
    # first hundred all negative, second hundred half positive: the doubled
    # pilot has 50 of 200, estimate 1-sqrt(0.75)
    pilot = [0] * 100 + [1, 0] * 50
    phase2 = [1, 0] * 3000
    res = run_adaptive(scripted(pilot + phase2), AdaptiveConfig())
    assert not res.degenerate
    assert res.pilot_groups == 200
    assert res.p_hat0 == pytest.approx(1.0 - math.sqrt(0.75), abs=1e-12)


def test_never_stopping_phase2_raises(monkeypatch):
    # healthy pilot, then all-negative pools forever: the threshold stays
    # infinite and the step cap is the only way out
    monkeypatch.setattr(adaptive_mod, "PHASE2_STEP_CAP", 500)
    pilot = iter([1] * 75 + [0] * 25)

    def source(k):
        return next(pilot, 0)

    with pytest.raises(HorizonError):
        run_adaptive(source, AdaptiveConfig())


def test_outcome_validation():
    with pytest.raises(DomainError):
        run_adaptive(scripted([2] * 200), AdaptiveConfig())
