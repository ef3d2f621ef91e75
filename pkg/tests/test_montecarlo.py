"""Simulation engine: stream reproducibility, thread invariance, and the
comparison report. Heavy statistical agreement with published summaries
lives in the acceptance suite; these tests keep replicate counts small.
"""

import numpy as np
import pytest

from gtseq.adaptive import AdaptiveConfig
from gtseq.design import theta_k
from gtseq.errors import DomainError
from gtseq.montecarlo import (
    ReferenceRow,
    SimulationSpec,
    bernoulli_group,
    compare,
    replicate_stream,
    run,
)
from gtseq.sequential import SequentialConfig
from gtseq.twostage import TwoStageConfig

SEQ_SPEC = SimulationSpec(procedure="sequential", truth_p=0.5,
                          config=SequentialConfig(k=2, m=250),
                          replicates=200, seed=11)


def test_replicate_streams_are_reproducible_and_distinct():
    a = replicate_stream(7, 3).random(5)
    b = replicate_stream(7, 3).random(5)
    c = replicate_stream(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_bernoulli_group_rate():
    stream = replicate_stream(123, 0)
    n = 200_000
    hits = sum(bernoulli_group(stream, 0.1, 15) for _ in range(n))
    se = (0.794 * 0.206 / n) ** 0.5
    assert hits / n == pytest.approx(theta_k(0.1, 15), abs=4 * se)


def test_spec_validation():
    cfg = SequentialConfig(k=2, m=250)
    with pytest.raises(DomainError):
        SimulationSpec(procedure="bogus", truth_p=0.5, config=cfg)
    with pytest.raises(DomainError):
        SimulationSpec(procedure="sequential", truth_p=0.0, config=cfg)
    with pytest.raises(DomainError):
        SimulationSpec(procedure="sequential", truth_p=0.5, config=cfg, replicates=0)
    with pytest.raises(DomainError):
        SimulationSpec(procedure="sequential", truth_p=0.5,
                       config=TwoStageConfig(m=200, k1=2))


def test_run_is_pure():
    assert run(SEQ_SPEC) == run(SEQ_SPEC)


def test_run_thread_count_does_not_change_output():
    base = run(SEQ_SPEC, threads=1)
    assert run(SEQ_SPEC, threads=4) == base
    assert run(SEQ_SPEC, threads=7) == base


def test_seed_changes_output():
    other = SimulationSpec(procedure="sequential", truth_p=0.5,
                           config=SEQ_SPEC.config, replicates=200, seed=12)
    assert run(other) != run(SEQ_SPEC)


def test_sequential_summary_is_sane():
    s = run(SEQ_SPEC)
    assert s.replicates == 200
    assert s.capped == 0 and s.degenerate == 0
    # stopping starts at the initial count and lands near the center
    assert 250 <= s.e_n <= 360
    assert 0.4 < s.e_phat < 0.6
    assert 0.0 <= s.cp <= 1.0
    assert s.mc_se.e_n == pytest.approx(s.sd_n / 200 ** 0.5, rel=1e-12)


def test_twostage_runs_both_estimators():
    cfg = TwoStageConfig(m=200, k1=2, k2_rule=3)
    mixed = run(SimulationSpec(procedure="twostage-mle", truth_p=0.5,
                               config=cfg, replicates=300, seed=5))
    linear = run(SimulationSpec(procedure="twostage-linear", truth_p=0.5,
                                config=cfg, replicates=300, seed=5))
    # same streams, same counts; only the estimator differs
    assert mixed.e_n == linear.e_n and mixed.sd_n == linear.sd_n
    assert mixed.e_phat != linear.e_phat
    # the pooled-information estimate is tighter than the weighted average
    assert mixed.sd_phat < linear.sd_phat


def test_adaptive_summary_counts_pilot():
    spec = SimulationSpec(procedure="adaptive", truth_p=0.3,
                          config=AdaptiveConfig(), replicates=100, seed=3)
    s = run(spec)
    assert s.e_n > 100  # pilot groups are part of the total
    assert s.capped == 0
    assert abs(s.e_phat - 0.3) < 0.01


def test_compare_flags_and_passes():
    s = run(SEQ_SPEC)
    exact = ReferenceRow(e_n=s.e_n, e_phat=s.e_phat, cp=s.cp)
    report = compare(exact, s)
    assert not report.flagged
    assert {f.name for f in report.fields} == {"e_n", "e_phat", "cp"}
    assert all(f.z == 0.0 for f in report.fields)

    shifted = ReferenceRow(e_n=s.e_n + 10 * s.mc_se.e_n)
    bad = compare(shifted, s)
    assert bad.flagged and bad.fields[0].z == pytest.approx(-10.0, rel=1e-9)


def test_compare_widens_se_for_finite_reference():
    s = run(SEQ_SPEC)
    ref = ReferenceRow(e_n=s.e_n + 1.0)
    alone = compare(ref, s).fields[0]
    joint = compare(ref, s, reference_replicates=1000).fields[0]
    assert joint.se > alone.se
    assert abs(joint.z) < abs(alone.z)


def test_compare_skips_missing_fields():
    s = run(SEQ_SPEC)
    report = compare(ReferenceRow(cp=s.cp), s)
    assert [f.name for f in report.fields] == ["cp"]
