"""``mrf-cp`` command-line interface.

Every subcommand writes its outputs plus ``config.json`` (the resolved
arguments) into ``--out``, which defaults to ``$MRF_CP_OUTPUT_DIR`` or
``./mrf_cp_out``.  Exit codes: 0 success, 2 configuration error, 3 data
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import kernels
from .artifacts import (
    DataError,
    read_dataset_csv,
    read_json,
    write_curve_csv,
    write_dataset_csv,
    write_json,
    write_rows_csv,
)
from .bench import BenchConfig, run_bench
from .core import GroupLabels, MRFError, SymmetricParams, make_ising_spec
from .estimator import SolverOptions
from .evaluation import changepoint_stats, edge_sign_proportions, network_stats, recovery_report
from .ingestion import (
    STRATEGIES,
    IngestionError,
    attach_parties,
    conformity_filter,
    impute,
    read_party_csv,
    read_votes_csv,
)
from .scan import TUNING_MODES, Tuning, basic_scan, build_domain, default_margin, fast_scan
from .simulate import (
    SamplerOptions,
    ScenarioSpec,
    build_scenario,
    community_labels,
    table6_scenario,
)
from .stability import LambdaPolicy, stability_select

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_ENV = "MRF_CP_OUTPUT_DIR"


class NumericalFailure(MRFError):
    pass


def _default_out() -> str:
    return os.environ.get(OUTPUT_ENV, "mrf_cp_out")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(out: Path, args) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    write_json(out / "config.json", {"command": args.command, "params": params,
                                     "backend": kernels.BACKEND})


def _load_dataset(path):
    data = read_dataset_csv(path)
    try:
        data.validate(make_ising_spec())
    except MRFError as exc:
        raise DataError(f"{path}: {exc}") from None
    return data


def _solver(args) -> SolverOptions:
    return SolverOptions(tol=args.tol, max_iter=args.max_iter)


def _tuning(args) -> Tuning:
    return Tuning(mode=args.tuning, a1=args.a1, a2=args.a2, pilot_tau=args.pilot_tau)


def _check_result(result, strict: bool) -> None:
    values = [v for _, v in result.curve]
    if not all(math.isfinite(v) for v in values):
        raise NumericalFailure("profile objective is not finite")
    if strict and result.n_unconverged:
        raise NumericalFailure(f"{result.n_unconverged} profile fits did not converge")


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    sampler = SamplerOptions(args.burn_in, args.thin)
    if args.community_table6:
        base = table6_scenario(args.T, args.tau_star, args.seed)
        scenario = ScenarioSpec(base.p, base.T, base.tau_star, base.density, 0.0, args.seed,
                                community=base.community, sampler=sampler)
    else:
        if args.p is None:
            raise MRFError("--p is required unless --community-table6 is given")
        scenario = ScenarioSpec(args.p, args.T, args.tau_star, args.density, args.similarity,
                                args.seed, not args.keep_positions, sampler=sampler)
    theta1, theta2, data = build_scenario(scenario)
    out = _outdir(args)
    write_dataset_csv(out / "dataset.csv", data)
    truth = {"tau_star": scenario.tau_star, "T": scenario.T,
             "theta1": theta1.to_json(), "theta2": theta2.to_json()}
    if scenario.community is not None:
        truth["groups"] = list(community_labels(scenario.community))
    write_json(out / "truth.json", truth)
    write_json(out / "scenario.json", scenario.to_json())
    _write_config(out, args)
    return EXIT_OK


def _domain_bounds(args, T: int) -> tuple[int, int]:
    margin = default_margin(T)
    k_l = margin if args.kl is None else args.kl
    k_u = margin if args.ku is None else args.ku
    return k_l, k_u


def cmd_scan(args) -> int:
    data = _load_dataset(args.input)
    k_l, k_u = _domain_bounds(args, data.T)
    domain = build_domain(data.T, k_l, k_u, args.step)
    result = basic_scan(make_ising_spec(), data, domain, _tuning(args), _solver(args), args.threads)
    _check_result(result, args.strict)
    out = _outdir(args)
    write_json(out / "scan.json", result.to_json())
    write_curve_csv(out / "curve.csv", result.curve)
    _write_config(out, args)
    return EXIT_OK


def cmd_fast_scan(args) -> int:
    data = _load_dataset(args.input)
    k_l, k_u = _domain_bounds(args, data.T)
    stage1 = build_domain(data.T, k_l, k_u, args.stage1_step)
    result = fast_scan(make_ising_spec(), data, stage1, args.stage2_halfwidth, args.stage2_step,
                       args.bandwidth, args.bandwidth2, _tuning(args), _solver(args), args.threads)
    _check_result(result, args.strict)
    out = _outdir(args)
    write_json(out / "scan.json", result.to_json())
    for name, meta in (("stage1", result.stage1), ("stage2", result.stage2)):
        write_curve_csv(out / f"{name}_curve.csv",
                        [(c["tau"], c["objective"]) for c in meta["curve"]],
                        [(c["tau"], c["objective"]) for c in meta["smoothed"]])
        write_curve_csv(out / f"{name}_smoothed.csv",
                        [(c["tau"], c["objective"]) for c in meta["smoothed"]])
    write_curve_csv(out / "curve.csv", result.curve)
    _write_config(out, args)
    return EXIT_OK


def _segment_range(args, T: int) -> tuple[int, int]:
    if args.start is not None or args.end is not None:
        return (1 if args.start is None else args.start, T if args.end is None else args.end)
    if args.scan is not None and args.segment is not None:
        tau = int(read_json(args.scan)["tau_hat"])
        return (1, tau) if args.segment == "first" else (tau + 1, T)
    return 1, T


def cmd_stability(args) -> int:
    data = _load_dataset(args.input)
    rng = _segment_range(args, data.T)
    if args.lambda_policy == "fixed":
        policy = LambdaPolicy("fixed", lam=args.lam)
    else:
        policy = LambdaPolicy("bic")
    result = stability_select(make_ising_spec(), data, rng, args.bootstrap, args.threshold,
                              policy, args.seed, args.threads, _solver(args))
    out = _outdir(args)
    doc = result.to_json()
    doc["range"] = list(rng)
    write_json(out / "stability.json", doc)
    labels = data.node_labels or tuple(str(j) for j in range(data.p))
    freq = result.selection_frequency
    write_rows_csv(out / "stable_edges.csv", ("j", "k", "node_j", "node_k", "frequency"),
                   [(j, k, labels[j], labels[k], repr(float(freq[j, k])))
                    for j, k in result.stable_edges()])
    write_rows_csv(out / "frequencies.csv", ("j", "k", "count", "n_bootstrap"),
                   [(e["j"], e["k"], e["count"], result.n_bootstrap) for e in doc["frequencies"]])
    _write_config(out, args)
    return EXIT_OK


def _params_from(doc: dict, key: str) -> SymmetricParams:
    try:
        return SymmetricParams.from_json(doc[key])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"missing or malformed {key!r}: {exc}") from None


def cmd_metrics(args) -> int:
    est = read_json(args.estimate)
    truth = read_json(args.truth)
    t1, t2 = _params_from(truth, "theta1"), _params_from(truth, "theta2")
    h1, h2 = _params_from(est, "theta1"), _params_from(est, "theta2")
    report = recovery_report(h1, h2, t1, t2, args.zero_tol)
    doc = report.to_json()
    if "tau_hat" in est and "tau_star" in truth:
        cp = changepoint_stats([int(est["tau_hat"])], int(truth["tau_star"]))
        doc["changepoint"] = {"tau_hat": int(est["tau_hat"]), "tau_star": cp.tau_star,
                              "abs_error": abs(int(est["tau_hat"]) - cp.tau_star)}
    if truth.get("groups"):
        groups = GroupLabels(tuple(truth["groups"]))
        doc["networks"] = {
            side: {"stats": [vars(g) for g in network_stats(theta, groups)],
                   "edge_signs": edge_sign_proportions(theta, groups)}
            for side, theta in (("first", h1), ("second", h2))
        }
    out = _outdir(args)
    write_json(out / "metrics.json", doc)
    rows = []
    for side in ("first", "second"):
        s = doc[side]
        rows.append((side, s["tp"], s["fp"], s["tn"], s["fn"], s["sensitivity"],
                     s["specificity"], repr(s["relative_error"])))
    write_rows_csv(out / "metrics.csv", ("side", "tp", "fp", "tn", "fn", "sensitivity",
                                         "specificity", "relative_error"), rows)
    _write_config(out, args)
    return EXIT_OK


def cmd_impute(args) -> int:
    raw = read_votes_csv(args.input, args.na)
    n_raw = raw.shape[0]
    if args.parties is not None:
        raw = attach_parties(raw, read_party_csv(args.parties))
    if not args.no_filter:
        raw = conformity_filter(raw, args.max_conformity)
    n_missing = int((raw.votes < 0).sum())
    data = impute(raw, args.strategy, 1 if args.tie == "yes" else 0)
    out = _outdir(args)
    write_dataset_csv(out / "dataset.csv", data)
    write_json(out / "impute.json", {"rows_raw": n_raw, "rows_kept": data.T, "p": data.p,
                                     "cells_imputed": n_missing, "strategy": args.strategy})
    _write_config(out, args)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        p=args.p, T=args.T, tau_star=args.tau_star, density=args.density,
        similarities=tuple(args.similarities), seeds=tuple(range(args.seeds)),
        k_l=args.kl, k_u=args.ku, step=args.step, stage1_step=args.stage1_step,
        stage2_halfwidth=args.stage2_halfwidth, stage2_step=args.stage2_step,
        tuning=_tuning(args), sampler=SamplerOptions(args.burn_in, args.thin),
    )
    summary, _ = run_bench(cfg, opts=_solver(args), threads=args.threads)
    out = _outdir(args)
    write_json(out / "bench.json", summary)
    cols = ("similarity", "method", "n", "mean", "rmse", "cv", "mean_profile_fits",
            "mean_runtime_seconds", "specificity_first", "sensitivity_first",
            "specificity_second", "sensitivity_second")
    write_rows_csv(out / "bench.csv", cols, [[r.get(c, "") for c in cols] for r in summary["rows"]])
    print(",".join(cols))
    for r in summary["rows"]:
        print(",".join(f"{r.get(c):.4g}" if isinstance(r.get(c), float) else str(r.get(c, ""))
                       for c in cols))
    _write_config(out, args)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _probability(text: str) -> float:
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=_default_out(), help="output directory")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-6, help="relative KKT tolerance")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _add_tuning(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tuning", choices=TUNING_MODES, default="bic-constant")
    p.add_argument("--a1", type=float, default=32.0)
    p.add_argument("--a2", type=float, default=32.0)
    p.add_argument("--pilot-tau", type=int, default=None)
    p.add_argument("--strict", action="store_true",
                   help="fail with exit code 4 if any profile fit did not converge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrf-cp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a series with one change-point")
    p.add_argument("--p", type=int)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--tau-star", type=int, required=True)
    p.add_argument("--density", type=_probability, default=0.1)
    p.add_argument("--similarity", type=_probability, default=0.0)
    p.add_argument("--keep-positions", action="store_true",
                   help="redrawn entries stay on the pre-change support")
    p.add_argument("--community-table6", action="store_true",
                   help="two-community 50-node layout with fixed block edge counts")
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    for name, func in (("scan", cmd_scan), ("fast-scan", cmd_fast_scan)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} for a single change-point")
        p.add_argument("--input", required=True)
        p.add_argument("--kl", type=int, default=None, help="lower margin (default max(30, 8%% of T))")
        p.add_argument("--ku", type=int, default=None, help="upper margin")
        if name == "scan":
            p.add_argument("--step", type=int, default=1)
        else:
            p.add_argument("--stage1-step", type=int, default=10)
            p.add_argument("--stage2-halfwidth", type=int, default=30)
            p.add_argument("--stage2-step", type=int, default=3)
            p.add_argument("--bandwidth", type=float, default=None,
                           help="stage-1 kernel bandwidth (default 1.5 x step)")
            p.add_argument("--bandwidth2", type=float, default=None,
                           help="stage-2 kernel bandwidth (default 1.5 x step)")
        _add_tuning(p)
        _add_solver(p)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("stability", help="bootstrap edge stability on one segment")
    p.add_argument("--input", required=True)
    p.add_argument("--start", type=int, default=None)
    p.add_argument("--end", type=int, default=None)
    p.add_argument("--scan", default=None, help="scan JSON whose tau_hat splits the series")
    p.add_argument("--segment", choices=("first", "second"), default=None)
    p.add_argument("--bootstrap", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--lambda-policy", choices=("bic", "fixed"), default="bic")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("metrics", help="compare a scan estimate with the truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--zero-tol", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("impute", help="filter and impute a vote matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--parties", default=None, help="CSV with seat,start,end,party")
    p.add_argument("--na", default="NA", help="missing-value marker")
    p.add_argument("--strategy", choices=STRATEGIES, default="own-party-majority")
    p.add_argument("--tie", choices=("yes", "no"), default="yes")
    p.add_argument("--max-conformity", type=float, default=0.75)
    p.add_argument("--no-filter", action="store_true", help="skip the conformity filter")
    _add_common(p)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("bench", help="replicated simulation study")
    p.add_argument("--p", type=int, default=15)
    p.add_argument("--T", type=int, default=400)
    p.add_argument("--tau-star", type=int, default=200)
    p.add_argument("--density", type=_probability, default=0.15)
    p.add_argument("--similarities", type=_probability, nargs="+", default=[0.0, 0.2, 0.4])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--kl", type=int, default=40)
    p.add_argument("--ku", type=int, default=40)
    p.add_argument("--step", type=int, default=5)
    p.add_argument("--stage1-step", type=int, default=25)
    p.add_argument("--stage2-halfwidth", type=int, default=15)
    p.add_argument("--stage2-step", type=int, default=5)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=5)
    _add_tuning(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, IngestionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MRFError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
