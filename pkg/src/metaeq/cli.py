"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (config, flags, domain), 2 runtime or numerical failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import (check_lb_hypotheses, check_ub_hypotheses, lb_probability_bound, lower_bound_fn,
                     two_sided_bound, ub_probability_bound, upper_bound_fn)
from .config import Config
from .dynamics import largest_fixed_point
from .errors import ConfigError, DomainError, MetaEqError, NotApplicable, PreconditionError
from .io import (read_csv, write_checklist, write_coupling, write_csv, write_equilibrium, write_manifest,
                 write_patches)
from .landscape import q_field
from .montecarlo import (ExperimentConfig, run_bound_experiment, run_concentration_experiment,
                         run_scaling_experiment, run_stochastic_comparison)
from .patches import coupling_matrix, sample_patches

COMMANDS = ("sample", "equilibrium", "approx", "check", "bounds-experiment", "scaling", "concentration",
            "stochastic", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}; valid subcommands: {', '.join(COMMANDS)}")


def g6(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6g}"
    return str(v)


def table(rows, header) -> str:
    cells = [[g6(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[k]) for r in cells)) if cells else len(h) for k, h in enumerate(header)]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    out = [line, "-" * len(line)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (key = value lines)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: logical cores)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="repeatable")
    p = _Parser(prog="metaeq", description="Equilibria of spatial metapopulation models")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _load(args) -> tuple[Config, ExperimentConfig]:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = Config.load(args.config, args.override)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must lie in [0, 2^64)")
        cfg = cfg.with_overrides([f"seed={args.seed}"])
    return cfg, ExperimentConfig.from_config(cfg)


def _sample(ec: ExperimentConfig):
    return sample_patches(ec.landscape, ec.sizes()[0], ec.seed)


def cmd_sample(args, cfg, ec, out):
    ps = _sample(ec)
    write_patches(out / "patches.csv", ps)
    write_manifest(out, "sample", cfg.values, ec.seed)
    print(table([["n", ps.n], ["A", ec.landscape.A], ["edges", len(ps.pairs)]], ["quantity", "value"]))


def cmd_equilibrium(args, cfg, ec, out):
    ps = _sample(ec)
    cm = coupling_matrix(ps, ec.f)
    fp = largest_fixed_point(ps, ec.f, ec.tol, ec.max_iter)
    write_equilibrium(out / "equilibrium.csv", ps, fp.p)
    write_coupling(out / "coupling.csv", cm)
    write_manifest(out, "equilibrium", cfg.values, ec.seed)
    rows = [["n", ps.n], ["lambda_T", cm.lambda_T], ["primitive", cm.primitive], ["iterations", fp.iterations],
            ["residual", fp.residual], ["min p*", float(fp.p.min())], ["mean p*", float(fp.p.mean())],
            ["max p*", float(fp.p.max())]]
    print(table(rows, ["quantity", "value"]))


def _need_spec(ec):
    if ec.spec is None:
        raise ConfigError("this command needs the bounds.* keys (bounds.center, bounds.t, bounds.alpha1, ...)")
    return ec.spec


def cmd_approx(args, cfg, ec, out):
    spec = _need_spec(ec)
    land, f = ec.landscape, ec.f
    ps = _sample(ec)
    fp = largest_fixed_point(ps, f, ec.tol, ec.max_iter)
    z = ps.locations
    ub = upper_bound_fn(land, f, spec)
    pp = ub(z)
    q1 = q_field(land, f, z, 1.0)
    pm = np.full(ps.n, np.nan)
    in_theta = land.domain.distance(z, np.asarray(spec.center)) <= spec.t
    try:
        lb = lower_bound_fn(land, f, spec)
        pm[in_theta] = lb(z[in_theta])
    except PreconditionError:
        lb = None
    write_equilibrium(out / "approx.csv", ps, fp.p, {"p_plus": pp, "q1": q1, "p_minus": pm})
    grid = land.grid(None, land.grid_step)
    write_csv(out / "q_grid.csv", [f"x{k + 1}" for k in range(land.dim)] + ["q1", "p_plus"],
              (list(g) + [a, b] for g, a, b in zip(grid, q_field(land, f, grid, 1.0), ub(grid))))
    write_manifest(out, "approx", cfg.values, ec.seed)
    rows = [["max(p* - p+)", float(np.max(fp.p - pp))], ["interpolation budget", ub.error_budget],
            ["max |p* - q1|", float(np.max(np.abs(fp.p - q1)))]]
    if lb is not None and in_theta.any():
        rows.append(["max(p- - p*) on Theta", float(np.max(pm[in_theta] - fp.p[in_theta]))])
    print(table(rows, ["quantity", "value"]))


def cmd_check(args, cfg, ec, out):
    spec = _need_spec(ec)
    land, f = ec.landscape, ec.f
    n = ec.sizes()[0]
    ubc = check_ub_hypotheses(land, f, spec, n)
    lbc = check_lb_hypotheses(land, f, spec)
    write_checklist(out / "checklist.csv", ubc, lbc)
    rows = [["ub", ub_probability_bound(land, f, spec, n).value]]
    try:
        rows.append(["lb", lb_probability_bound(land, f, spec, n).value])
    except NotApplicable as exc:
        rows.append(["lb", str(exc)])
    try:
        ts = two_sided_bound(land, f, spec, n)
        rows += [["two_sided", ts.probability.value], ["accuracy", ts.accuracy], ["inner_radius", ts.inner.radius]]
    except (NotApplicable, PreconditionError) as exc:
        rows.append(["two_sided", f"not applicable: {exc}"])
    write_csv(out / "bounds.csv", ["name", "value"], rows)
    write_manifest(out, "check", cfg.values, ec.seed)
    items = [[it.name, it.lhs, it.rhs, "info" if it.info else ("PASS" if it.passed else "FAIL"), it.margin]
             for it in ubc.items + lbc.items]
    print(f"branch: {ubc.branch}")
    print(table(items, ["inequality", "lhs", "rhs", "status", "margin"]))
    print()
    print(table(rows, ["bound", "value"]))
    print("all hypotheses pass" if ubc.all_pass and lbc.all_pass else "FAILED: " + ", ".join(ubc.failed() + lbc.failed()))


def _print_report(rep):
    rows = [[a.get("name"), a.get("value"), a.get("wilson_lo"), a.get("wilson_hi"), a.get("bound")]
            for a in rep.aggregates.values()]
    print(table(rows, ["quantity", "value", "wilson_lo", "wilson_hi", "bound"]))
    for name, tab in rep.tables.items():
        if tab:
            cols = [c for c in tab[0] if not c.startswith("check:")][:10]
            print(f"\n{name}")
            print(table([[r[c] for c in cols] for r in tab], cols))
    if rep.flagged:
        print("\nFLAGGED hypotheses: " + ", ".join(rep.flagged))


def cmd_bounds_experiment(args, cfg, ec, out):
    _print_report(run_bound_experiment(ec, args.threads, out))


def cmd_scaling(args, cfg, ec, out):
    _print_report(run_scaling_experiment(ec, args.threads, out))


def cmd_concentration(args, cfg, ec, out):
    rep = run_concentration_experiment(ec, None, args.threads, out)
    tab = rep.tables["concentration"]
    print(table([[r["n"], r["point"], r["t_over_H"], r["frequency"], r["wilson_hi"], r["bound"], r["holds"]] for r in tab],
                ["n", "point", "t/H", "frequency", "wilson_hi", "bound", "holds"]))


def cmd_stochastic(args, cfg, ec, out):
    _print_report(run_stochastic_comparison(ec, args.threads, out))


def cmd_report(args):
    out = Path(args.out)
    found = False
    for name in ("report.csv", "checklist.csv", "bounds.csv", "scaling.csv", "stochastic.csv"):
        p = out / name
        if p.exists():
            found = True
            rows = read_csv(p)
            if rows:
                cols = list(rows[0])
                print(f"{name}")
                print(table([[_num(r[c]) for c in cols] for r in rows], cols))
                print()
    if not found:
        raise ConfigError(f"no report files in {out}")


def _num(s):
    try:
        return float(s)
    except ValueError:
        return s


HANDLERS = {"sample": cmd_sample, "equilibrium": cmd_equilibrium, "approx": cmd_approx, "check": cmd_check,
            "bounds-experiment": cmd_bounds_experiment, "scaling": cmd_scaling, "concentration": cmd_concentration,
            "stochastic": cmd_stochastic}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"a subcommand is required: {', '.join(COMMANDS)}")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        if args.command == "report":
            cmd_report(args)
            return 0
        cfg, ec = _load(args)
    except (UsageError, ConfigError, DomainError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    try:
        HANDLERS[args.command](args, cfg, ec, out)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MetaEqError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
