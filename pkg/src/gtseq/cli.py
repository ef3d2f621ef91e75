"""Command-line interface.

Subcommands: ``design`` (sizing and optimal pool size), ``analyze``
(analytic characteristics), ``simulate`` (Monte Carlo), ``table``
(reference tables), ``session`` (interactive sequential run), ``serve``
(local JSON service). Every printed number comes from a library call; this
module formats and routes.

Exit codes: 0 success, 2 usage, 3 domain/numeric error, 4 a truncation
horizon or stage-2 cap fired.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adaptive import AdaptiveConfig
from .design import DesignParams, n_star_group, optimal_group_size
from .errors import GtseqError, HorizonError
from .estimation import fisher_info_two_stage, fisher_sd, proportional_interval
from .montecarlo import SimulationSpec, SimulationSummary, run
from .sequential import (SequentialConfig, advance, coverage, estimator_moments,
                         initial_state, n_moments, stopping_pmf)
from .twostage import (TwoStageConfig, linear_combo_coverage, linear_combo_mean,
                       linear_combo_se, n2_distribution)
from . import service, tables

CSV_HEADER = "procedure,p,k,m,replicates,seed,E_N,sd_N,E_phat,sd_phat,CP,mc_se_CP"


class _UsageError(Exception):
    pass


# Group counts print with 2 decimals, probabilities and estimates with 4,
# asymptotic SDs/SEs with 5; JSON and CSV carry full precision.

def _count(x: float) -> str:
    return f"{x:.2f}"


def _prob(x: float) -> str:
    return f"{x:.4f}"


def _sdev(x: float) -> str:
    return f"{x:.5f}"


def _full(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _design_params(args) -> DesignParams:
    return DesignParams(alpha=args.alpha, gamma=args.gamma)


def _require(args, names: tuple[str, ...], context: str) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise _UsageError(f"{context} requires {', '.join(missing)}")


# --- design ------------------------------------------------------------

def cmd_design(args) -> int:
    d = _design_params(args)
    if args.k == "auto":
        plan = optimal_group_size(args.p, d)
    else:
        plan = n_star_group(args.p, _parse_k(args.k), d)
    if args.format == "json":
        text = json.dumps({"k": plan.k, "n_required": plan.n_required,
                           "n_ceil": plan.n_ceil})
    else:
        text = "\n".join([f"k {plan.k}",
                          f"n_required {_count(plan.n_required)}",
                          f"n_ceil {plan.n_ceil}"])
    _emit(text, args.out)
    return 0


def _parse_k(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"--k must be an integer or 'auto', got {raw!r}")


# --- analyze -----------------------------------------------------------

def cmd_analyze(args) -> int:
    d = _design_params(args)
    if args.procedure == "sequential":
        _require(args, ("k", "m"), "analyze sequential")
        k = _parse_k(args.k)
        cfg = SequentialConfig(k=k, m=args.m, design=d)
        pmf = stopping_pmf(args.p, cfg)
        nm = n_moments(pmf)
        em = estimator_moments(args.p, k, pmf)
        cp = coverage(args.p, k, d.gamma, pmf)
        fields = [("procedure", "sequential"), ("p", _full(args.p)),
                  ("k", k), ("m", args.m),
                  ("E_N", _count(nm.e_n)), ("sd_N", _count(nm.sd_n)),
                  ("E_phat", _prob(em.mean)), ("sd_phat", _prob(em.sd)),
                  ("CP", _prob(cp))]
        raw = {"procedure": "sequential", "p": args.p, "k": k, "m": args.m,
               "E_N": nm.e_n, "sd_N": nm.sd_n, "E_phat": em.mean,
               "sd_phat": em.sd, "CP": cp}
    elif args.procedure == "fisher":
        _require(args, ("k", "k2", "m"), "analyze fisher")
        k1 = _parse_k(args.k)
        cfg = TwoStageConfig(m=args.m, k1=k1, design=d, k2_rule=args.k2)
        expected_m2 = n2_distribution(args.p, cfg).e_m2
        fi = fisher_info_two_stage(args.p, args.m, k1, args.k2, expected_m2)
        sd = fisher_sd(fi)
        fields = [("procedure", "fisher"), ("p", _full(args.p)),
                  ("m", args.m), ("k1", k1), ("k2", args.k2),
                  ("E_M", _count(expected_m2)),
                  ("FI", _count(fi)), ("SD", _sdev(sd))]
        raw = {"procedure": "fisher", "p": args.p, "m": args.m, "k1": k1,
               "k2": args.k2, "E_M": expected_m2, "FI": fi, "SD": sd}
    elif args.procedure == "twostage-linear":
        _require(args, ("k", "k2", "m"), "analyze twostage-linear")
        k1 = _parse_k(args.k)
        cfg = TwoStageConfig(m=args.m, k1=k1, design=d, k2_rule=args.k2)
        dist = n2_distribution(args.p, cfg)
        mean = linear_combo_mean(args.p, cfg, args.k2)
        se = linear_combo_se(args.p, cfg, args.k2)
        cp = linear_combo_coverage(args.p, mean, se, d.gamma)
        fields = [("procedure", "twostage-linear"), ("p", _full(args.p)),
                  ("k1", k1), ("k2", args.k2), ("m", args.m),
                  ("E_N2", _count(dist.mean)), ("sd_N2", _count(dist.sd)),
                  ("E_phat", _prob(mean)), ("SE", _sdev(se)), ("CP", _prob(cp))]
        raw = {"procedure": "twostage-linear", "p": args.p, "k1": k1,
               "k2": args.k2, "m": args.m, "E_N2": dist.mean, "sd_N2": dist.sd,
               "E_phat": mean, "SE": se, "CP": cp}
    else:  # pragma: no cover - argparse restricts choices
        raise _UsageError(f"unknown analyze procedure {args.procedure!r}")

    if args.format == "json":
        text = json.dumps(raw)
    else:
        text = "\n".join(f"{name} {value}" for name, value in fields)
    _emit(text, args.out)
    return 0


# --- simulate ----------------------------------------------------------

def _simulation_spec(args) -> tuple[SimulationSpec, int, int]:
    """Build the spec; returns (spec, k column, m column) for reporting."""
    d = _design_params(args)
    if args.procedure == "sequential":
        _require(args, ("k", "m"), "simulate sequential")
        k = _parse_k(args.k)
        cfg = SequentialConfig(k=k, m=args.m, design=d)
        return (SimulationSpec("sequential", args.p, cfg,
                               replicates=args.replicates, seed=args.seed), k, args.m)
    if args.procedure in ("twostage-mle", "twostage-linear"):
        _require(args, ("k", "m"), f"simulate {args.procedure}")
        k1 = _parse_k(args.k)
        rule = args.k2 if args.k2 is not None else "optimal"
        cfg = TwoStageConfig(m=args.m, k1=k1, design=d, k2_rule=rule)
        return (SimulationSpec(args.procedure, args.p, cfg,
                               replicates=args.replicates, seed=args.seed), k1, args.m)
    cfg = AdaptiveConfig(m0=args.m0, k0=args.k0, design=d)
    return (SimulationSpec("adaptive", args.p, cfg,
                           replicates=args.replicates, seed=args.seed),
            args.k0, args.m0)


def _summary_csv(spec: SimulationSpec, k: int, m: int, s: SimulationSummary) -> str:
    row = [spec.procedure, _full(spec.truth_p), str(k), str(m),
           str(spec.replicates), str(spec.seed), _full(s.e_n), _full(s.sd_n),
           _full(s.e_phat), _full(s.sd_phat), _full(s.cp), _full(s.mc_se.cp)]
    return CSV_HEADER + "\n" + ",".join(row)


def _summary_json(spec: SimulationSpec, k: int, m: int, s: SimulationSummary) -> str:
    return json.dumps({
        "procedure": spec.procedure, "p": spec.truth_p, "k": k, "m": m,
        "replicates": spec.replicates, "seed": spec.seed,
        "E_N": s.e_n, "sd_N": s.sd_n, "E_phat": s.e_phat, "sd_phat": s.sd_phat,
        "CP": s.cp,
        "mc_se": {"E_N": s.mc_se.e_n, "sd_N": s.mc_se.sd_n,
                  "E_phat": s.mc_se.e_phat, "sd_phat": s.mc_se.sd_phat,
                  "CP": s.mc_se.cp},
        "capped": s.capped, "degenerate": s.degenerate,
    })


def _summary_text(spec: SimulationSpec, k: int, m: int, s: SimulationSummary) -> str:
    lines = [f"procedure {spec.procedure}", f"p {_full(spec.truth_p)}",
             f"k {k}", f"m {m}", f"replicates {spec.replicates}",
             f"seed {spec.seed}",
             f"E_N {_count(s.e_n)}", f"sd_N {_count(s.sd_n)}",
             f"E_phat {_prob(s.e_phat)}", f"sd_phat {_prob(s.sd_phat)}",
             f"CP {_prob(s.cp)}", f"mc_se_CP {_prob(s.mc_se.cp)}"]
    if s.capped:
        lines.append(f"capped {s.capped}")
    if s.degenerate:
        lines.append(f"degenerate {s.degenerate}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    spec, k, m = _simulation_spec(args)
    summary = run(spec)
    if args.format == "csv":
        text = _summary_csv(spec, k, m, summary)
    elif args.format == "json":
        text = _summary_json(spec, k, m, summary)
    else:
        text = _summary_text(spec, k, m, summary)
    _emit(text, args.out)
    return 4 if summary.capped else 0


# --- table -------------------------------------------------------------

def _table_rows(args, d: DesignParams):
    """Rows for one table id: (column names, text cells, csv cells)."""
    tid = args.id
    r, s = args.replicates, args.seed
    if tid == 1:
        cols = ("p", "n_required", "n_ceil")
        data = [(row.p, _count(row.n_required), row.n_ceil, row.n_required)
                for row in tables.table1(d)]
        text = [(_full(p), nr, str(nc)) for p, nr, nc, _ in data]
        csv = [(_full(p), _full(nfull), str(nc)) for p, _, nc, nfull in data]
        return cols, text, csv
    if tid == 2:
        cols = ("p", "k", "n_required", "optimal")
        text, csv = [], []
        for block in tables.table2(d):
            for plan in block.entries:
                star = "*" if plan.k == block.best.k else ""
                text.append((_full(block.p), str(plan.k), _count(plan.n_required), star))
                csv.append((_full(block.p), str(plan.k), _full(plan.n_required), star))
        return cols, text, csv
    if tid == 3:
        cols = ("row", "p", "k", "m", "E_N", "sd_N", "E_phat", "sd_phat", "CP", "mc_se_CP")
        text, csv = [], []
        for row in tables.table3_analytic(d):
            cells = ("A", _full(row.p), str(row.k), str(row.m), _count(row.e_n),
                     _count(row.sd_n), _prob(row.e_phat), _prob(row.sd_phat),
                     _prob(row.cp), "")
            text.append(cells)
            csv.append(("A", _full(row.p), str(row.k), str(row.m), _full(row.e_n),
                        _full(row.sd_n), _full(row.e_phat), _full(row.sd_phat),
                        _full(row.cp), ""))
        for row in tables.table3_simulated(r, s, d):
            text.append(_sim_cells("S", row, text_mode=True))
            csv.append(_sim_cells("S", row, text_mode=False))
        return cols, text, csv
    if tid == 4:
        cols = ("row", "p", "k", "m", "E_N", "sd_N", "E_phat", "sd_phat", "CP", "mc_se_CP")
        rows = tables.table4(r, s, d)
        return (cols, [_sim_cells("S", row, True) for row in rows],
                [_sim_cells("S", row, False) for row in rows])
    if tid == 5:
        cols = ("p", "m", "k1", "k2", "E_M", "FI", "SD")
        text = [(_full(x.p), str(x.m), str(x.k1), str(x.k2), _count(x.expected_m2),
                 _count(x.fi), _sdev(x.sd)) for x in tables.table5(d)]
        csv = [(_full(x.p), str(x.m), str(x.k1), str(x.k2), _full(x.expected_m2),
                _full(x.fi), _full(x.sd)) for x in tables.table5(d)]
        return cols, text, csv
    if tid == 6:
        cols = ("row", "p", "k1", "k2", "m", "E_N2", "sd_N2", "E_phat", "SE_or_sd", "CP", "mc_se_CP")
        text, csv = [], []
        for x in tables.table6_analytic(d):
            text.append(("E", _full(x.p), str(x.k1), str(x.k2), str(x.m),
                         _count(x.e_n2), _count(x.sd_n2), _prob(x.mean),
                         _sdev(x.se), _prob(x.cp), ""))
            csv.append(("E", _full(x.p), str(x.k1), str(x.k2), str(x.m),
                        _full(x.e_n2), _full(x.sd_n2), _full(x.mean),
                        _full(x.se), _full(x.cp), ""))
        for i, row in enumerate(tables.table6_simulated(r, s, d)):
            k2 = tables.LINEAR_PRESETS[i][2]
            su = row.summary
            text.append(("S", _full(row.p), str(row.k), str(k2), str(row.m),
                         _count(su.e_n), _count(su.sd_n), _prob(su.e_phat),
                         _sdev(su.sd_phat), _prob(su.cp), _prob(su.mc_se.cp)))
            csv.append(("S", _full(row.p), str(row.k), str(k2), str(row.m),
                        _full(su.e_n), _full(su.sd_n), _full(su.e_phat),
                        _full(su.sd_phat), _full(su.cp), _full(su.mc_se.cp)))
        return cols, text, csv
    if tid == 7:
        cols = ("row", "p", "k", "m", "E_N", "sd_N", "E_phat", "sd_phat", "CP", "mc_se_CP")
        rows = tables.table7(r, s, d)
        return (cols, [_sim_cells("S", row, True) for row in rows],
                [_sim_cells("S", row, False) for row in rows])
    raise _UsageError(f"unknown table id {tid}; expected 1..7")


def _sim_cells(tag: str, row, text_mode: bool):
    su = row.summary
    if text_mode:
        return (tag, _full(row.p), str(row.k), str(row.m), _count(su.e_n),
                _count(su.sd_n), _prob(su.e_phat), _prob(su.sd_phat),
                _prob(su.cp), _prob(su.mc_se.cp))
    return (tag, _full(row.p), str(row.k), str(row.m), _full(su.e_n),
            _full(su.sd_n), _full(su.e_phat), _full(su.sd_phat),
            _full(su.cp), _full(su.mc_se.cp))


def cmd_table(args) -> int:
    d = _design_params(args)
    cols, text_rows, csv_rows = _table_rows(args, d)
    csv_text = "\n".join([",".join(cols)] + [",".join(row) for row in csv_rows])

    if args.format == "csv":
        _emit(csv_text, args.out)
        return 0
    header = []
    if (args.alpha, args.gamma) != (0.05, 0.1):
        header.append(f"# extrapolated design: alpha={args.alpha} gamma={args.gamma}")
    widths = [max(len(cols[i]), *(len(row[i]) for row in text_rows)) if text_rows
              else len(cols[i]) for i in range(len(cols))]
    lines = header + [
        "  ".join(cols[i].ljust(widths[i]) for i in range(len(cols))).rstrip()]
    for row in text_rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(cols))).rstrip())
    print("\n".join(lines))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text + "\n")
    return 0


# --- session -----------------------------------------------------------

POSITIVE_TOKENS = ("1", "p", "+", "pos", "positive", "y", "yes")
NEGATIVE_TOKENS = ("0", "n", "-", "neg", "negative")
QUIT_TOKENS = ("q", "quit", "exit")


def _state_line(state, cfg) -> str:
    threshold = "inf" if state.threshold == float("inf") else _count(state.threshold)
    verdict = "stopped" if state.stopped else "continue"
    return (f"n {state.n}  s {state.s}  xbar {_prob(state.xbar)}  "
            f"p_hat {_prob(state.p_hat)}  threshold {threshold}  "
            f"m {cfg.m}  {verdict}")


def cmd_session(args) -> int:
    d = _design_params(args)
    cfg = SequentialConfig(k=_parse_k(args.k), m=args.m, design=d)
    state = initial_state()
    print(f"sequential session: k={cfg.k} m={cfg.m} alpha={d.alpha} gamma={d.gamma}")
    print("enter one pool outcome per line (1/p positive, 0/n negative, q quits)")
    prompt = "> " if sys.stdin.isatty() else ""
    while not state.stopped:
        try:
            token = input(prompt).strip().lower()
        except EOFError:
            print("input closed before the rule stopped")
            return 0
        if token in QUIT_TOKENS:
            print("session abandoned")
            return 0
        if token in POSITIVE_TOKENS:
            outcome = 1
        elif token in NEGATIVE_TOKENS:
            outcome = 0
        elif token == "":
            continue
        else:
            print(f"unrecognized outcome {token!r}; use 1/0/p/n/q", file=sys.stderr)
            continue
        state = advance(state, outcome, cfg)
        print(_state_line(state, cfg))
    lo, hi = proportional_interval(state.p_hat, d.gamma)
    print(f"stopped at n {state.n}")
    print(f"final p_hat {_prob(state.p_hat)}")
    print(f"proportional interval ({_prob(lo)}, {_prob(hi)})")
    return 0


# --- serve -------------------------------------------------------------

def cmd_serve(args) -> int:
    try:
        service.serve(port=args.port)
    except OSError as err:
        print(f"could not bind port {args.port}: {err}", file=sys.stderr)
        return 2
    return 0


# --- parser ------------------------------------------------------------

def _add_design_flags(sub) -> None:
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--gamma", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtseq",
        description="Prevalence estimation with pooled tests: sizing, "
                    "sequential and two-stage procedures, simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="required group count and optimal pool size")
    p_design.add_argument("--p", type=float, required=True)
    p_design.add_argument("--k", default="auto", help="pool size, or 'auto'")
    _add_design_flags(p_design)
    p_design.add_argument("--format", choices=("text", "json"), default="text")
    p_design.add_argument("--out")
    p_design.set_defaults(fn=cmd_design)

    p_analyze = sub.add_parser("analyze", help="analytic characteristics of a procedure")
    p_analyze.add_argument("--procedure", required=True,
                           choices=("sequential", "fisher", "twostage-linear"))
    p_analyze.add_argument("--p", type=float, required=True)
    p_analyze.add_argument("--k", default=None, help="pool size (stage 1 for two-stage)")
    p_analyze.add_argument("--k2", type=int, default=None, help="stage-2 pool size")
    p_analyze.add_argument("--m", type=int, default=None)
    _add_design_flags(p_analyze)
    p_analyze.add_argument("--format", choices=("text", "json"), default="text")
    p_analyze.add_argument("--out")
    p_analyze.set_defaults(fn=cmd_analyze)

    p_sim = sub.add_parser("simulate", help="Monte Carlo run of a procedure")
    p_sim.add_argument("--procedure", required=True,
                       choices=("sequential", "twostage-mle", "twostage-linear",
                                "adaptive"))
    p_sim.add_argument("--p", type=float, required=True)
    p_sim.add_argument("--k", default=None, help="pool size (stage 1 for two-stage)")
    p_sim.add_argument("--k2", type=int, default=None,
                       help="fixed stage-2 pool size (default: optimal from stage 1)")
    p_sim.add_argument("--m", type=int, default=None)
    p_sim.add_argument("--m0", type=int, default=100, help="pilot group count (adaptive)")
    p_sim.add_argument("--k0", type=int, default=2, help="pilot pool size (adaptive)")
    p_sim.add_argument("--replicates", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=0)
    _add_design_flags(p_sim)
    p_sim.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p_sim.add_argument("--out")
    p_sim.set_defaults(fn=cmd_simulate)

    p_table = sub.add_parser("table", help="reference tables 1-7")
    p_table.add_argument("id", type=int)
    p_table.add_argument("--replicates", type=int, default=1000)
    p_table.add_argument("--seed", type=int, default=0)
    _add_design_flags(p_table)
    p_table.add_argument("--format", choices=("text", "csv"), default="text")
    p_table.add_argument("--out", help="also write the table as CSV here")
    p_table.set_defaults(fn=cmd_table)

    p_session = sub.add_parser("session", help="interactive sequential run")
    p_session.add_argument("--k", default="2")
    p_session.add_argument("--m", type=int, default=250)
    _add_design_flags(p_session)
    p_session.set_defaults(fn=cmd_session)

    p_serve = sub.add_parser("serve", help="local JSON service")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except HorizonError as err:
        print(f"horizon error: {err}", file=sys.stderr)
        return 4
    except GtseqError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
