"""Command-line interface: run, sweep, verify, env-info, report.

Data files (CSV/JSON/SVG) are deterministic functions of the configuration;
wall-clock metadata goes into a sidecar file next to the sweep output.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import re
import sys

import numpy as np

from . import environments, harness, svg, verify
from .core import ConfigurationError, ContractViolation
from .harness import FitInfeasible


def _cmd_run(args) -> int:
    try:
        env = environments.parse_env_id(args.env)
        algo_spec = harness.parse_algo_id(args.algo)
        result = harness.run_once(env, algo_spec, args.T, args.seed)
    except (ContractViolation, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    env_id = env.canonical_id()
    algo_id = harness.format_algo_id(algo_spec)
    run_id = f"{env_id}|{algo_id}|T={args.T}|seed={args.seed}"
    records = [harness.Record(run_id, env_id, algo_id, args.T, args.seed, cp.t,
                              cp.learner_cum_loss, cp.comparator_cum_loss,
                              cp.regret, cp.v)
               for cp in result.trace.checkpoints]
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"run_{_slug(run_id)}.csv")
    harness.write_records_csv(records, path)
    final = result.trace.checkpoints[-1]
    line = (f"{run_id}: regret={final.regret:.6g} v={final.v:.6g}")
    if result.certified_bound is not None:
        line += (f" certified_bound={result.certified_bound:.6g}"
                 f" certified_K={result.certified_k:.6g}")
    print(line)
    print(f"trace written to {path}")
    return 0


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_")


def _cmd_sweep(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = harness.SweepConfig.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, ConfigurationError, TypeError) as exc:
        print(f"error: invalid sweep config: {exc}", file=sys.stderr)
        return 2
    out = args.out or config.output
    if not out:
        print("error: no output path (set --out or config 'output')",
              file=sys.stderr)
        return 2
    records, failures = harness.sweep(config, workers=args.workers)
    harness.write_records_csv(records, out)
    sidecar = {"config": config.to_dict(),
               "created": datetime.datetime.now().isoformat(),
               "n_records": len(records),
               "failures": failures}
    with open(out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
    print(f"{len(records)} records -> {out}")
    for failure in failures:
        print(f"warning: cell failed: {failure}", file=sys.stderr)
    if failures and args.strict:
        return 1
    return 0


def _cmd_verify(args) -> int:
    names = args.checks.split(",") if args.checks else None
    try:
        results = verify.run_checks(names, samples=args.samples, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    width = max(len(r.name) for r in results)
    all_pass = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_pass &= r.passed
        print(f"{r.name:<{width}}  {status}  slack={r.slack:+.3e}  {r.detail}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(verify.checks_to_json_dict(results), fh, indent=2)
        print(f"report written to {args.out}")
    if not all_pass:
        failing = ", ".join(r.name for r in results if not r.passed)
        print(f"failing checks: {failing}", file=sys.stderr)
    return 0 if all_pass else 1


def _cmd_env_info(args) -> int:
    try:
        env = environments.parse_env_id(args.env)
        oracle = env.oracle()
    except (ContractViolation, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"env: {env.canonical_id()}")
    best = oracle.best
    if isinstance(best, np.ndarray):
        print(f"u* = {np.array2string(best, precision=6)}")
    else:
        print(f"k* = {int(best)}")
        if isinstance(env, environments.MarkovExperts):
            bits = tuple((best >> c) & 1 for c in range(env.n_contexts))
            print(f"f* = {bits} (prediction per context)")
    print(f"kappa = {oracle.kappa:g}")
    print(f"bernstein_B = {oracle.bernstein_B:.6g}")
    if oracle.exact_B is not None:
        print(f"exact_B = {oracle.exact_B:.6g}")
    for key, value in oracle.extras.items():
        print(f"{key} = {value:.6g}" if isinstance(value, float)
              else f"{key} = {value}")
    if oracle.excess_laws:
        print("excess-law moments (label, E[x], E[x^2]):")
        for law in oracle.excess_laws:
            print(f"  {law.label or '-':<28} {law.mean():+.6f}  "
                  f"{law.second_moment():.6f}")
    else:
        print("excess laws: not finite (Monte-Carlo oracle)")
    return 0


def _parse_fit_statistic(text: str):
    if text == "mean":
        return "mean"
    if text.startswith("quantile:"):
        return ("quantile", float(text.split(":", 1)[1]))
    raise ConfigurationError(f"unknown fit statistic {text!r}")


def _cmd_report(args) -> int:
    try:
        records = harness.read_records_csv(args.input)
    except (OSError, ConfigurationError, ValueError, IndexError) as exc:
        print(f"error: cannot read results: {exc}", file=sys.stderr)
        return 2
    if not records:
        print("error: results file contains no records", file=sys.stderr)
        return 1
    try:
        statistics = [_parse_fit_statistic(t) for t in args.fit.split(";") if t]
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    groups: dict[tuple[str, str], list[harness.Record]] = {}
    for rec in records:
        groups.setdefault((rec.env, rec.algo), []).append(rec)
    reports = []
    for (env_id, algo_id), rows in sorted(groups.items()):
        entry: dict = {"env": env_id, "algo": algo_id, "fits": [],
                       "bound_margins": [], "quantiles": []}
        for stat in statistics:
            label = stat if isinstance(stat, str) else f"quantile:{stat[1]:g}"
            try:
                fit = harness.fit_rate(rows, stat)
                entry["fits"].append({"statistic": label, "slope": fit.slope,
                                      "stderr": fit.stderr,
                                      "intercept": fit.intercept,
                                      "dropped_horizons": fit.dropped,
                                      "burn_in_horizons": fit.burn_in})
            except FitInfeasible as exc:
                entry["fits"].append({"statistic": label, "error": str(exc)})
        env = None
        try:
            env = environments.parse_env_id(env_id)
        except (ContractViolation, ConfigurationError):
            print(f"warning: cannot rebuild env {env_id!r}; "
                  "bound margins skipped", file=sys.stderr)
        if env is not None:
            algo_spec = harness.parse_algo_id(algo_id)
            policy = ("squint-certified" if algo_spec["kind"] == "squint"
                      else "nominal")
            entry["bound_margins"] = harness.compare_bound(
                rows, env, algo_spec, policy=policy)
            oracle = env.oracle()
            k_t = entry["bound_margins"][-1]["K_T"] if entry["bound_margins"] else None
            quantiles, warnings = harness.quantile_report(
                rows, oracle=oracle, k_t=k_t)
            entry["quantiles"] = quantiles
            for w in warnings:
                print(f"note: {env_id}|{algo_id}: {w}", file=sys.stderr)
        else:
            quantiles, _ = harness.quantile_report(rows)
            entry["quantiles"] = quantiles
        reports.append(entry)
        _write_group_chart(args.out, env_id, algo_id, rows, entry)
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(reports, fh, indent=2)
    print(f"report written to {report_path}")
    return 0


def _write_group_chart(out_dir: str, env_id: str, algo_id: str,
                       rows: list, entry: dict) -> None:
    per_t = harness.final_regrets(rows)
    horizons = sorted(per_t)
    means = [float(per_t[T].mean()) for T in horizons]
    q90 = [float(np.quantile(per_t[T], 0.9)) for T in horizons]
    series = [("mean regret", horizons, means), ("0.9 quantile", horizons, q90)]
    annotation = ""
    for fit in entry["fits"]:
        if "slope" in fit:
            annotation = (f"{fit['statistic']} slope = {fit['slope']:.3f} "
                          f"(se {fit['stderr']:.3f})")
            break
    if entry.get("bound_margins"):
        series.append(("theoretical bound", horizons,
                       [row["theoretical"] for row in entry["bound_margins"]]))
    path = os.path.join(out_dir, f"{_slug(env_id)}__{_slug(algo_id)}.svg")
    svg.line_chart(path, series, title=f"{env_id} / {algo_id}",
                   xlabel="T", ylabel="regret", loglog=True,
                   annotation=annotation)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastrates",
        description="Second-order adaptive online learning benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="play one env/algo run and dump its trace")
    p_run.add_argument("--env", required=True,
                       help="env spec, e.g. gap:alpha=0.2,K=8")
    p_run.add_argument("--algo", required=True,
                       help="algo spec: squint | metagrad | hedge:eta=0.5 | ftl")
    p_run.add_argument("--T", type=int, required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=".")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a full sweep from a JSON config")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--strict", action="store_true",
                         help="exit nonzero if any cell failed")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the theory verification suites")
    p_verify.add_argument("--checks", default="",
                          help="comma-separated subset (default: all)")
    p_verify.add_argument("--samples", type=int, default=None)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", default=None,
                          help="write the check report as JSON")
    p_verify.set_defaults(fn=_cmd_verify)

    p_info = sub.add_parser("env-info", help="print an environment's oracle")
    p_info.add_argument("--env", required=True)
    p_info.set_defaults(fn=_cmd_env_info)

    p_report = sub.add_parser("report", help="rate fits, bound margins, charts")
    p_report.add_argument("--in", dest="input", required=True)
    p_report.add_argument("--fit", default="mean;quantile:0.9",
                          help="semicolon-separated statistics")
    p_report.add_argument("--out", default="reports")
    p_report.set_defaults(fn=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
