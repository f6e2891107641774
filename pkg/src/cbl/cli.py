"""Command-line entry point: ``cbl {simulate,reproduce,verify,gen-instance}``.

Exit status is 0 on success, 1 on a configuration error and 2 when a
verification suite finds a failing case.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import checks, experiments, svg
from .environment import generate_instance, save_instance
from .errors import ConfigError, InstanceParseError, InvalidArgument
from .harness import (ensure_dir, job_instance, regret_decomposition, run_jobs, write_aggregate_csv,
                      write_trace_csv)

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2
SUITES = ("lemmas", "geometry", "coverage", "bounds")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (default: $CBL_OUT or ./out)")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--seeds", type=int, help="number of episodes")
    parser.add_argument("--horizon", type=int, help="rounds per episode")
    parser.add_argument("--alpha", help="comma-separated alpha values")
    parser.add_argument("--policies", help="comma-separated policies")
    parser.add_argument("--scale", choices=sorted(experiments.SCALES))
    parser.add_argument("--threads", type=int, help="worker processes")
    parser.add_argument("--strict-nested", action="store_true", default=None,
                        help="cut CLUCB2 ellipsoids by the parameter ball")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbl", description="Conservative linear bandit simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="run policies over seeds, write trace and aggregate CSVs")
    _common(p)
    p = sub.add_parser("reproduce", help="regenerate figure data and SVG")
    p.add_argument("figure", choices=("fig1", "fig2", "fig3"))
    _common(p)
    p = sub.add_parser("verify", help="run a numerical verification suite")
    p.add_argument("suite", choices=SUITES + ("all",))
    _common(p)
    p = sub.add_parser("gen-instance", help="write a random instance file")
    p.add_argument("path", nargs="?", help="instance file (default: OUT/instance.json)")
    _common(p)
    return parser


def config_from_args(args, defaults: dict | None = None) -> experiments.RunConfig:
    cfg = experiments.load_config(args.config) if args.config else experiments.RunConfig()
    for key, value in (defaults or {}).items():
        if not args.config:
            cfg.apply(key, value)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set: expected KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.apply(key.strip(), experiments.parse_value(value))
    for key in ("out", "seed", "seeds", "horizon", "alpha", "policies", "scale", "threads",
                "strict_nested"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.apply(key, value)
    return cfg.resolved()


def _alpha_tag(alpha: float) -> str:
    return f"{alpha:g}"


def cmd_simulate(cfg: experiments.RunConfig) -> int:
    out = ensure_dir(cfg.out)
    grid = experiments.run_grid(cfg)
    traces_dir = out / "traces"
    for (name, alpha), traces in grid.items():
        for tr in traces[: cfg.trace_runs]:
            ensure_dir(traces_dir)
            write_trace_csv(tr, traces_dir / f"trace_{name}_a{_alpha_tag(alpha)}_run{tr.run}.csv")
    write_aggregate_csv(experiments.aggregates(grid, thin=cfg.thin), out / "aggregate.csv")
    _write_json(out / "summary.json", experiments.summarize(grid))
    print(f"wrote {out / 'aggregate.csv'}")
    return EXIT_OK


def cmd_reproduce(cfg: experiments.RunConfig, figure: str) -> int:
    out = ensure_dir(cfg.out)
    if figure == "fig2":
        grid = experiments.run_grid(cfg, horizon=min(cfg.horizon, experiments.VIOLATION_WINDOW))
        rows = experiments.figure2(grid)
        _write_rows(out / "fig2.csv", ["policy", "alpha", "violation_pct"], rows)
        chart = _bars(rows, "violation_pct", cfg,
                      f"Rounds violating the constraint (first {experiments.VIOLATION_WINDOW})",
                      "violated rounds (%)")
    elif figure == "fig3":
        grid = experiments.run_grid(cfg)
        rows = experiments.figure3(grid)
        _write_rows(out / "fig3.csv", ["policy", "alpha", "per_step_regret"], rows)
        chart = _bars(rows, "per_step_regret", cfg, f"Per-step regret at t = {cfg.horizon}",
                      "per-step regret")
    else:
        grid = experiments.run_grid(cfg)
        stats = experiments.figure1(grid)
        write_aggregate_csv(stats, out / "fig1.csv")
        series = []
        for s in stats:
            if s.policy == "lucb" and series and any(lbl == "LUCB" for lbl, _, _ in series):
                continue
            label = "LUCB" if s.policy == "lucb" else f"{s.policy.upper()} a={_alpha_tag(s.alpha)}"
            series.append((label, s.t, s.mean_per_step_regret))
        chart = svg.line_chart(series, "Average per-step regret", "round t", "R_t / t")
    (out / f"{figure}.svg").write_text(chart)
    print(f"wrote {out / (figure + '.csv')} and {out / (figure + '.svg')}")
    return EXIT_OK


def _bars(rows, key, cfg, title, ylabel) -> str:
    alphas = sorted({r["alpha"] for r in rows})
    groups = []
    for name in cfg.policies:
        by_alpha = {r["alpha"]: r[key] for r in rows if r["policy"] == name}
        groups.append((name.upper(), [by_alpha.get(a, 0.0) for a in alphas]))
    return svg.bar_chart([_alpha_tag(a) for a in alphas], groups, title, "alpha", ylabel)


def verify_suite(suite: str, cfg: experiments.RunConfig) -> dict:
    """Run one suite and return its report; ``report["passed"]`` is the verdict."""
    if suite == "lemmas":
        cases = checks.lemma1_sweep() + checks.lemma2_grid() + checks.lemma3_grid()
        failures = [c.to_dict() for c in cases if not c.holds]
        counts = {}
        for c in cases:
            counts[c.lemma] = counts.get(c.lemma, 0) + 1
        return {"suite": suite, "passed": not failures, "cases": counts, "failures": failures,
                "lemma1_cases": [c.to_dict() for c in cases if c.lemma == "lemma1"][:50]}
    if suite == "geometry":
        cases = checks.geometry_cases()
        bad = [vars(c) | {"gap": c.gap} for c in cases
               if not (c.analytic >= c.sampled - 1e-12 and c.gap <= 1e-3)
               or (c.diagonal and abs(c.analytic - c.diagonal_formula) > 1e-10)]
        rls = [checks.rls_oracle_error(seed=s) for s in range(20)]
        return {"suite": suite, "passed": not bad and max(rls) <= 1e-8,
                "cases": len(cases), "max_gap": max(c.gap for c in cases),
                "min_gap": min(c.gap for c in cases), "rls_max_rel_error": max(rls), "failures": bad}
    if suite == "coverage":
        results = [checks.coverage_experiment(p, delta=0.1, seed=cfg.seed) for p in ("lucb", "clucb2")]
        return {"suite": suite, "passed": all(r.failure_rate <= r.delta + 0.05 for r in results),
                "results": [vars(r) | {"failure_rate": r.failure_rate} for r in results]}
    if suite == "bounds":
        rows, passed = [], True
        for pcfg in experiments.policy_configs(cfg, "clucb"):
            jobs = experiments.episode_jobs(cfg, pcfg)
            for job, tr in zip(jobs, run_jobs(jobs, cfg.threads)):
                inst = job_instance(job)
                ok = checks.check_nT_bound(tr, inst, pcfg)
                opt_part, cons_part = regret_decomposition(tr)
                ident = abs(tr.cum_regret[-1] - opt_part - cons_part) <= 1e-9
                cons_ok = cons_part <= tr.n_conservative * inst.baseline.delta_h + 1e-9
                passed &= ok is not False and ident and cons_ok
                rows.append({"alpha": pcfg.alpha, "run": tr.run, "n_T": tr.n_conservative,
                             "nT_bound_ok": ok, "decomposition_ok": ident and cons_ok})
        return {"suite": suite, "passed": bool(passed), "episodes": rows}
    raise ConfigError(f"suite: unknown suite {suite!r}")


def cmd_verify(cfg: experiments.RunConfig, suite: str) -> int:
    out = ensure_dir(cfg.out)
    suites = SUITES if suite == "all" else (suite,)
    status = EXIT_OK
    for name in suites:
        report = verify_suite(name, cfg)
        _write_json(out / f"verify_{name}.json", report)
        print(f"{name}: {'PASS' if report['passed'] else 'FAIL'}")
        if not report["passed"]:
            status = EXIT_VERIFY
    return status


def cmd_gen_instance(cfg: experiments.RunConfig, path: str | None) -> int:
    target = Path(path) if path else ensure_dir(cfg.out) / "instance.json"
    inst = generate_instance(cfg.d, cfg.K, cfg.sigma, cfg.baseline_rank, seed=cfg.seed)
    target.parent.mkdir(parents=True, exist_ok=True)
    save_instance(inst, target)
    print(f"wrote {target}")
    return EXIT_OK


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(format(r[h], ".10g") if isinstance(r[h], float) else str(r[h])
                              for h in header))
    Path(path).write_text("\n".join(lines) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce":
            defaults = {"alpha": experiments.FIGURE_ALPHAS, "policies": ["lucb", "clucb"]}
            return cmd_reproduce(config_from_args(args, defaults), args.figure)
        cfg = config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        return cmd_gen_instance(cfg, args.path)
    except (ConfigError, InstanceParseError, InvalidArgument) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
