"""Command-line interface: eval, indices, simulate, verify, demo, paper-suite.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import functionals as fn
from . import indices as ix
from . import report
from . import simulate as sim
from . import specfile
from . import verify as vf
from .errors import GrowthError, SpecError

ENV_OUT = "ADDGROWTH_OUT"


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def _out_dir(args, sub: str) -> Path:
    base = Path(args.out or os.environ.get(ENV_OUT) or "addgrowth_out")
    path = base / sub
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SpecError(f"cannot create output directory {path}: {exc.strerror}") from exc
    if not os.access(path, os.W_OK):
        raise SpecError(f"output directory {path} is not writable")
    return path


def _specs(args):
    return [specfile.load(s) for s in args.spec]


# --------------------------------------------------------------------------


def cmd_eval(args) -> int:
    out = _out_dir(args, "eval")
    for spec in _specs(args):
        r_max = args.r_max
        r_min = r_max * 10.0 ** (-args.r_decades) if args.r_decades else args.r_min
        r_grid = fn.default_r_grid(r_min, r_max, args.per_decade)
        t_grid = np.asarray(args.t_grid, dtype=float) if args.t_grid else None
        grid = fn.build_grid(spec, t_grid, r_grid, args.m)
        report.write_csv(out / f"{spec.label}_grid.csv", grid.columns(), grid.rows(), f"eval {spec.label}")
        if not args.no_plots:
            report.plot_functional_grid(grid, out / f"{spec.label}_grid.png")
        live = grid.t > 0
        ratio = grid.y[live] / grid.y_smooth[live]
        dv, sv = grid.doubling_violations(), grid.sandwich_violations()
        print(f"{spec.label}: {grid.t.size} t x {grid.r.size} r points; doubling violations {dv}; "
              f"sandwich violations {sv}; y/smoothed y in [{ratio.min():.4g}, {ratio.max():.4g}]")
    return 0


def cmd_indices(args) -> int:
    out = _out_dir(args, "indices")
    for spec in _specs(args):
        rep = ix.growth_report(spec, args.b)
        rows = list(rep.rows())
        report.write_csv(out / f"{spec.label}_indices.csv", ("quantity", "estimate", "half_width", "method"), rows,
                         f"indices {spec.label}")
        (tu, u), (_, v) = rep.u_samples, rep.v_samples
        report.write_csv(out / f"{spec.label}_growth_u.csv", ("t", "u", "v"), zip(tu, u, v),
                         f"growth function {spec.label}")
        if not args.no_plots:
            r = ix.default_r_grid_deep()
            y_b = np.asarray(fn.y_total(spec, np.full_like(r, rep.b), r))
            report.plot_growth_report(spec.label, r, y_b, rep, out / f"{spec.label}_indices.png")
        print(rep.text(), end="")
    return 0


def _sim_config(args, spec) -> sim.SimConfig:
    return sim.SimConfig(
        n_paths=args.n_paths, seed=args.seed, jump_threshold=args.eps, time_step=args.dt,
        small_jump_mode=args.mode, grid=args.grid, t_min=args.t_min, steps_per_octave=args.steps_per_octave,
        horizon=args.horizon, adaptive_fraction=args.adaptive, levels=tuple(args.levels or ()),
        store_paths=True,
    )


def cmd_simulate(args) -> int:
    out = _out_dir(args, "simulate")
    for spec in _specs(args):
        batch = sim.sample_paths(spec, _sim_config(args, spec))
        stem = f"{spec.label}_seed{args.seed}"
        report.write_csv(out / f"{stem}_summary.csv", batch.summary_columns(), batch.summary_rows(),
                         f"simulate {spec.label}")
        if batch.levels.size:
            report.write_csv(out / f"{stem}_passage.csv", batch.passage_columns(), batch.passage_rows(),
                             f"passage {spec.label}")
        if args.dump_paths:
            cols = ["path", "t", *[f"X{i}" for i in range(spec.d)], "running_max"]
            report.write_csv(out / f"{stem}_paths.csv", cols, batch.path_rows(args.dump_paths),
                             f"paths {spec.label}")
        if not args.no_plots:
            report.plot_paths(batch, out / f"{stem}_paths.png")
        last = list(batch.summary_rows())[-1]
        print(f"{spec.label}: {batch.n_paths} paths, {batch.t.size - 1} steps, mean jumps per path "
              f"{batch.n_jumps.mean():.4g}; at t={last[0]:g}: " +
              ", ".join(f"{c}={v:.4g}" for c, v in zip(batch.summary_columns()[1:], last[1:])))
        for row in batch.passage_rows():
            print("  level r={:g}: passed {:.4g}, mean T {:.4g}, mean overshoot {:.4g}, by jump {:.4g}".format(*row))
    return 0


def _run_check(name, spec, args):
    kw = {"seed": args.seed}
    if args.n_paths is not None:
        kw["n_paths"] = args.n_paths
    if name == "tail_bounds":
        return vf.check_tail_bounds(spec, **kw)
    if name == "exit_time":
        return [vf.check_exit_time(spec, **kw)]
    if name == "passage_moments":
        return vf.check_passage_moments(spec, **kw)
    if name == "passage_jump":
        return vf.check_passage_jump(spec, **kw)
    if name == "overshoot_ratio":
        return vf.check_overshoot_ratio(spec, ix.ModerateFunctionSpec("power", p=0.5), e_name="sqrt", **kw)
    if name == "sojourn":
        return vf.check_sojourn(spec, **kw)
    raise SpecError(f"unknown check '{name}'")


def cmd_verify(args) -> int:
    unknown = [c for c in args.checks if c not in vf.CHECKS]
    if unknown:
        raise SpecError(f"unknown check(s) {', '.join(unknown)}; choose from {', '.join(vf.CHECKS)}")
    out = _out_dir(args, "verify")
    failed = False
    for spec in _specs(args):
        outcomes = []
        for name in args.checks:
            outcomes += _run_check(name, spec, args)
        report.write_csv(out / f"{spec.label}_checks.csv", vf.CheckOutcome.COLUMNS, (o.row() for o in outcomes),
                         f"verify {spec.label}")
        if not args.no_plots:
            report.plot_outcomes(outcomes, out / f"{spec.label}_checks.png", f"{spec.label}: checks")
        counts = vf.summarize(outcomes)
        failed |= counts[vf.FAIL] > 0
        print(f"{spec.label}: {counts[vf.PASS]} pass, {counts[vf.FAIL]} fail, {counts[vf.INCONCLUSIVE]} inconclusive")
        for o in outcomes:
            if o.verdict == vf.FAIL:
                print("  FAIL", o.check, o.row()[2])
    return 1 if failed else 0


def cmd_demo(args) -> int:
    out = _out_dir(args, "demo")
    for spec in _specs(args):
        index = args.index
        if index is None:
            delta, _ = ix.delta_beta_from_y(spec, min(1.0, spec.T_max))
            index = delta.value
        etas = args.etas or [max(index - 0.5, 0.1), index + 0.5]
        rep = vf.dichotomy_demo(spec, etas, index=index, n_paths=args.n_paths, seed=args.seed,
                                n_dyadic=args.n_dyadic)
        stem = f"{spec.label}_seed{args.seed}"
        report.write_csv(out / f"{stem}_dichotomy.csv", rep.COLUMNS, rep.rows(), f"demo {spec.label}")
        if not args.no_plots:
            report.plot_dichotomy(rep, out / f"{stem}_dichotomy.png")
        print(f"{spec.label}: index {index:.4g} ({vf.PROXY_LABEL})")
        for a, eta in enumerate(rep.etas):
            print(f"  eta={eta:g}: fraction with running min < {rep.lo:g}: {rep.frac_min_below[a, -1]:.4f}; "
                  f"with running max > {rep.hi:g}: {rep.frac_max_above[a, -1]:.4f}; expected "
                  f"{rep.expected.get(eta) or 'no verdict'}")
    return 0


def cmd_paper_suite(args) -> int:
    from . import suite

    out = _out_dir(args, "paper_suite")
    numbers = args.criteria or sorted(suite.CRITERIA)
    lines = []
    summary = []
    ok = True
    for n in numbers:
        if n not in suite.CRITERIA:
            raise SpecError(f"unknown criterion {n}")
        res = suite.run_criterion(n, quick=args.quick, seed=args.seed)
        report.write_csv(out / f"criterion_{n:02d}.csv", res.columns, res.rows, f"criterion {n}")
        line = res.line()
        print(line, flush=True)
        lines.append(line)
        passed = res.passed and (args.quick or res.within_time)
        ok &= passed
        summary.append([n, res.title, int(passed), res.detail])
    report.write_csv(out / "summary.csv", ("criterion", "title", "passed", "detail"), summary, "paper suite")
    report.write_text(out / "summary.txt", "\n".join(lines) + "\n")
    return 0 if ok else 1


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="addgrowth", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./addgrowth_out)")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    spec_arg = argparse.ArgumentParser(add_help=False)
    spec_arg.add_argument("--spec", action="append", required=True,
                          help="built-in name or path to a spec TOML file (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common, spec_arg], help="tabulate y_t(r) and its smoothed form")
    e.add_argument("--t-grid", type=_floats, help="comma-separated times")
    e.add_argument("--r-min", type=float, default=1e-7)
    e.add_argument("--r-max", type=float, default=10.0)
    e.add_argument("--r-decades", type=float, help="r grid spans this many decades below --r-max")
    e.add_argument("--per-decade", type=int, default=8)
    e.add_argument("--m", type=float, help="threshold m for n(r)")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("indices", parents=[common, spec_arg], help="growth indices and regularity flags")
    i.add_argument("--b", type=float, help="reference time b (default min(1, T_max))")
    i.set_defaults(func=cmd_indices)

    s = sub.add_parser("simulate", parents=[common, spec_arg], help="Monte Carlo paths and summaries")
    s.add_argument("--n-paths", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, help="jump threshold")
    s.add_argument("--dt", type=float, help="time step for the uniform grid")
    s.add_argument("--mode", choices=("discard", "gaussian"), default="discard", help="small-jump treatment")
    s.add_argument("--grid", choices=("uniform", "dyadic"), default="uniform")
    s.add_argument("--t-min", type=float, default=2.0**-20)
    s.add_argument("--steps-per-octave", type=int, default=4)
    s.add_argument("--horizon", type=float)
    s.add_argument("--adaptive", type=float, help="adaptive threshold fraction")
    s.add_argument("--levels", type=_floats, help="comma-separated passage levels")
    s.add_argument("--dump-paths", type=int, default=0, metavar="N", help="write the first N raw paths")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common, spec_arg], help="run pass/fail checks")
    v.add_argument("--checks", type=_names, default=list(vf.CHECKS),
                   help=f"comma-separated subset of {','.join(vf.CHECKS)}")
    v.add_argument("--n-paths", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo", parents=[common, spec_arg], help="dichotomy demonstration")
    d.add_argument("--etas", type=_floats, help="comma-separated η values")
    d.add_argument("--index", type=float, help="index to straddle (default: estimated)")
    d.add_argument("--n-paths", type=int, default=10_000)
    d.add_argument("--n-dyadic", type=int, default=20)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_demo)

    ps_ = sub.add_parser("paper-suite", parents=[common], help="run the acceptance battery")
    ps_.add_argument("--quick", action="store_true", help="reduced path counts")
    ps_.add_argument("--seed", type=int, default=0)
    ps_.add_argument("--criteria", type=lambda t: [int(x) for x in _names(t)], help="comma-separated numbers")
    ps_.set_defaults(func=cmd_paper_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"addgrowth: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except GrowthError as exc:
        print(f"addgrowth: numerical error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
