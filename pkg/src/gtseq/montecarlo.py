"""Reproducible Monte Carlo engine for all three study procedures.

Every replicate owns a counter-derived random stream, so results are a
pure function of (seed, replicate index) and identical no matter how many
threads execute the batch or in which order they finish. Group outcomes
are drawn directly against the pool-positivity rate rather than by
simulating individual samples, which keeps large pools as cheap as small
ones.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adaptive import AdaptiveConfig, choose_k_m
from .design import optimal_group_size, psi, psi_vec, theta_k, zeta
from .errors import DomainError, HorizonError
from .estimation import StageCounts, TwoStageRecord, mle_mixed, mle_single
from .sequential import SequentialConfig
from .twostage import CAP_FACTOR, TwoStageConfig, linear_combo, resolve_k2, stage2_size

# Outcomes are drawn from each stream in fixed-size blocks so the draw
# pattern cannot depend on scheduling.
CHUNK = 256

# Hard per-replicate guard against a path that never satisfies the
# stopping rule.
STEP_CAP = 1_000_000

PROCEDURES = ("sequential", "twostage-mle", "twostage-linear", "adaptive")

_CONFIG_TYPES = {
    "sequential": SequentialConfig,
    "twostage-mle": TwoStageConfig,
    "twostage-linear": TwoStageConfig,
    "adaptive": AdaptiveConfig,
}


@dataclass(frozen=True)
class SimulationSpec:
    procedure: str
    truth_p: float
    config: SequentialConfig | TwoStageConfig | AdaptiveConfig
    replicates: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.procedure not in PROCEDURES:
            raise DomainError(f"unknown procedure {self.procedure!r}; expected one of {PROCEDURES}")
        if not 0.0 < self.truth_p < 1.0:
            raise DomainError(f"prevalence must be in (0, 1), got {self.truth_p!r}")
        if self.replicates < 1:
            raise DomainError(f"replicates must be >= 1, got {self.replicates}")
        want = _CONFIG_TYPES[self.procedure]
        if not isinstance(self.config, want):
            raise DomainError(
                f"procedure {self.procedure!r} needs a {want.__name__}, "
                f"got {type(self.config).__name__}")


@dataclass(frozen=True)
class McSe:
    """Monte Carlo standard errors for each summary field."""

    e_n: float
    sd_n: float
    e_phat: float
    sd_phat: float
    cp: float


@dataclass(frozen=True)
class SimulationSummary:
    """Replicate averages of total group count and estimate, with the
    fraction landing inside the proportional band around the truth."""

    e_n: float
    sd_n: float
    e_phat: float
    sd_phat: float
    cp: float
    mc_se: McSe
    replicates: int
    capped: int = 0
    degenerate: int = 0


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    """Independent random stream for one replicate, derived from (seed, index)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def bernoulli_group(stream: np.random.Generator, p: float, k: int) -> int:
    """One pooled test outcome: positive with probability theta_k(p, k)."""
    return int(stream.random() < theta_k(p, k))


def _stop_scan(gen: np.random.Generator, theta: float, z: float, m: int,
               k: int, cap: int) -> tuple[int, int, bool]:
    """Draw pooled outcomes in fixed blocks until the stopping rule fires.

    Returns (count, positives, fired). The rule is checked at every n,
    exactly as the one-at-a-time driver would. When the rule has not
    fired by ``cap`` groups the state at the cap comes back with
    ``fired`` False; the caller owns the policy for that path.
    """
    n = 0
    s = 0
    while n < cap:
        block = min(CHUNK, cap - n)
        hits = gen.random(block) < theta
        cum = s + np.cumsum(hits)
        ns = np.arange(n + 1, n + block + 1)
        done = (ns >= m) & (ns > z * psi_vec(cum / ns, k))
        first = int(np.argmax(done))
        if done[first]:
            return int(ns[first]), int(cum[first]), True
        n += block
        s = int(cum[-1])
    return n, s, False


def _sequential_replicate(gen, p, cfg: SequentialConfig):
    theta = theta_k(p, cfg.k)
    z = zeta(cfg.k, cfg.design)
    cap = cfg.n_max if cfg.n_max is not None else STEP_CAP
    n, s, fired = _stop_scan(gen, theta, z, cfg.m, cfg.k, cap)
    if not fired:
        raise HorizonError(f"no stop within {cap} groups", residual_tail=math.nan)
    return n, mle_single(StageCounts(cfg.k, n, s)), False, False


def _twostage_replicate(gen, p, cfg: TwoStageConfig, use_mle: bool,
                        m_cap: int, k2_cache: dict):
    s1 = int(gen.binomial(cfg.m, theta_k(p, cfg.k1)))
    stage1 = StageCounts(cfg.k1, cfg.m, s1)
    k2 = k2_cache.get(s1)
    if k2 is None:
        k2 = resolve_k2(cfg, mle_single(stage1))
        k2_cache[s1] = k2
    size = stage2_size(cfg.m, cfg.k1, s1 / cfg.m, cfg.design, m_cap=m_cap)
    s2 = int(gen.binomial(size.m2, theta_k(p, k2))) if size.m2 > 0 else 0
    record = TwoStageRecord(stage1=stage1, stage2=StageCounts(k2, size.m2, s2))
    p_hat = mle_mixed(record) if use_mle else linear_combo(record)
    return size.n2, p_hat, size.capped, False


def _adaptive_replicate(gen, p, cfg: AdaptiveConfig, phase2_cap: int,
                        choose_cache: dict):
    theta0 = theta_k(p, cfg.k0)
    s0 = int(gen.binomial(cfg.m0, theta0))
    pilot_n = cfg.m0
    if s0 in (0, pilot_n):
        s0 += int(gen.binomial(cfg.m0, theta0))
        pilot_n = 2 * cfg.m0
        if s0 in (0, pilot_n):
            boundary = 1.0 if s0 else 0.0
            return pilot_n, boundary, False, True
    pilot = StageCounts(cfg.k0, pilot_n, s0)
    key = (s0, pilot_n)
    chosen = choose_cache.get(key)
    if chosen is None:
        chosen = choose_k_m(mle_single(pilot), cfg)
        choose_cache[key] = chosen
    theta = theta_k(p, chosen.k)
    z = zeta(chosen.k, cfg.design)
    # A pilot that badly underestimates the prevalence can pick pools so
    # large that nearly every one tests positive and the rule would run
    # for millions of groups; such phase 2s are truncated at the cap and
    # flagged rather than simulated to their astronomical stopping point.
    n, s, fired = _stop_scan(gen, theta, z, chosen.m, chosen.k, phase2_cap)
    record = TwoStageRecord(stage1=pilot, stage2=StageCounts(chosen.k, n, s))
    return pilot_n + n, mle_mixed(record), not fired, False


def _make_replicate_fn(spec: SimulationSpec):
    p = spec.truth_p
    cfg = spec.config
    if spec.procedure == "sequential":
        return lambda gen: _sequential_replicate(gen, p, cfg)
    if spec.procedure in ("twostage-mle", "twostage-linear"):
        use_mle = spec.procedure == "twostage-mle"
        # Cap runaway stage-2 requests from degenerate pilots at a generous
        # multiple of the requirement at the true prevalence; the flag count
        # in the summary reports how often it bound.
        m_cap = math.ceil(CAP_FACTOR * zeta(cfg.k1, cfg.design)
                          * psi(theta_k(p, cfg.k1), cfg.k1))
        k2_cache: dict = {}
        return lambda gen: _twostage_replicate(gen, p, cfg, use_mle, m_cap, k2_cache)
    # Same guard idea for the adaptive phase 2: the cap is the same
    # generous multiple of the best-case requirement at the true
    # prevalence, so it can only bind on pathological pilot branches.
    phase2_cap = math.ceil(CAP_FACTOR * optimal_group_size(p, cfg.design).n_required)
    choose_cache: dict = {}
    return lambda gen: _adaptive_replicate(gen, p, cfg, phase2_cap, choose_cache)


def run(spec: SimulationSpec, threads: int = 1) -> SimulationSummary:
    """Simulate the spec and summarize. Output depends only on the spec:
    replicate streams are derived from (seed, index) and reduced in index
    order, so any thread count gives identical bytes."""
    replicate = _make_replicate_fn(spec)
    r_total = spec.replicates
    n_arr = np.empty(r_total)
    p_arr = np.empty(r_total)
    capped_arr = np.zeros(r_total, dtype=bool)
    degen_arr = np.zeros(r_total, dtype=bool)

    def fill(r: int) -> None:
        n, p_hat, capped, degenerate = replicate(replicate_stream(spec.seed, r))
        n_arr[r] = n
        p_arr[r] = p_hat
        capped_arr[r] = capped
        degen_arr[r] = degenerate

    if threads <= 1:
        for r in range(r_total):
            fill(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for _ in pool.map(fill, range(r_total)):
                pass

    gamma = spec.config.design.gamma
    e_n = float(n_arr.mean())
    sd_n = float(n_arr.std(ddof=1)) if r_total > 1 else 0.0
    e_phat = float(p_arr.mean())
    sd_phat = float(p_arr.std(ddof=1)) if r_total > 1 else 0.0
    cp = float(np.mean(np.abs(p_arr - spec.truth_p) < gamma * spec.truth_p))
    pairs = math.sqrt(2.0 * max(r_total - 1, 1))
    mc_se = McSe(e_n=sd_n / math.sqrt(r_total),
                 sd_n=sd_n / pairs,
                 e_phat=sd_phat / math.sqrt(r_total),
                 sd_phat=sd_phat / pairs,
                 cp=math.sqrt(cp * (1.0 - cp) / r_total))
    return SimulationSummary(e_n=e_n, sd_n=sd_n, e_phat=e_phat, sd_phat=sd_phat,
                             cp=cp, mc_se=mc_se, replicates=r_total,
                             capped=int(capped_arr.sum()),
                             degenerate=int(degen_arr.sum()))


@dataclass(frozen=True)
class ReferenceRow:
    """A published or analytic summary to compare a simulation against.

    Leave a field None to skip it.
    """

    e_n: float | None = None
    sd_n: float | None = None
    e_phat: float | None = None
    sd_phat: float | None = None
    cp: float | None = None


@dataclass(frozen=True)
class FieldComparison:
    name: str
    reference: float
    simulated: float
    se: float
    z: float
    flagged: bool


@dataclass(frozen=True)
class ComparisonReport:
    fields: tuple[FieldComparison, ...]

    @property
    def flagged(self) -> bool:
        return any(f.flagged for f in self.fields)


def compare(reference, simulated: SimulationSummary,
            reference_replicates: int | None = None) -> ComparisonReport:
    """Per-field z-scores of a simulation against a reference summary.

    The SE of each difference is the simulation's Monte Carlo SE; when the
    reference is itself a finite simulation, pass its replicate count and
    the SE becomes the combined one (the reference's sampling noise is
    estimated from our own dispersion, which is the best available stand-in
    for its unpublished one). Fields beyond three SEs are flagged.
    """
    sim_se = simulated.mc_se
    out = []
    for name, sim_val, se_pair in (
        ("e_n", simulated.e_n, (sim_se.e_n, simulated.sd_n)),
        ("sd_n", simulated.sd_n, (sim_se.sd_n, simulated.sd_n)),
        ("e_phat", simulated.e_phat, (sim_se.e_phat, simulated.sd_phat)),
        ("sd_phat", simulated.sd_phat, (sim_se.sd_phat, simulated.sd_phat)),
        ("cp", simulated.cp, (sim_se.cp, None)),
    ):
        ref_val = getattr(reference, name, None)
        if ref_val is None:
            continue
        se = se_pair[0]
        if reference_replicates is not None:
            se = math.sqrt(se * se + _reference_se(name, simulated,
                                                   reference_replicates) ** 2)
        diff = sim_val - float(ref_val)
        if se > 0.0:
            z = diff / se
        else:
            z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        out.append(FieldComparison(name=name, reference=float(ref_val),
                                   simulated=sim_val, se=se, z=z,
                                   flagged=abs(z) > 3.0))
    return ComparisonReport(fields=tuple(out))


def _reference_se(name: str, simulated: SimulationSummary, r_ref: int) -> float:
    pairs = math.sqrt(2.0 * max(r_ref - 1, 1))
    if name == "e_n":
        return simulated.sd_n / math.sqrt(r_ref)
    if name == "sd_n":
        return simulated.sd_n / pairs
    if name == "e_phat":
        return simulated.sd_phat / math.sqrt(r_ref)
    if name == "sd_phat":
        return simulated.sd_phat / pairs
    return math.sqrt(simulated.cp * (1.0 - simulated.cp) / r_ref)
