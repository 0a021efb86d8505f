"""Replicated experiments: bound verification, scaling, concentration and stochastic comparison.

Each replicate draws from its own keyed random stream, so results depend
only on the config and seed. Replicates run in worker processes and are
collected in replicate order, so the thread count never changes an output.
Wall-clock times are kept in memory (and in ``timing.json``) but never in CSVs.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .bounds import (BoundSpec, check_lb_hypotheses, check_ub_hypotheses, corollary2_schedule, land_with_r,
                     lb_probability_bound, lower_bound_fn, two_sided_bound, ub_probability_bound, upper_bound_fn)
from .colonization import ColonizationFunction
from .config import Config, validate
from .dynamics import largest_fixed_point
from .errors import ConfigError, MetaEqError, NotApplicable, NumericalError, PreconditionError
from .geometry import unit_ball_volume
from .io import write_checklist, write_csv, write_equilibrium, write_manifest
from .landscape import Landscape, landscape_constants, q_field
from .patches import coupling_matrix, primitivity_probability_bound, sample_patches
from .rng import INITIAL_STATE, STOCHASTIC, make_rng
from .stochastic import ctmc_simulate, window_occupancy

# absolute slack when comparing p* with the bracketing functions (fixed-point tolerance scale)
HOLD_TOL = 1e-9


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return float("nan"), float("nan")
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment inputs; ``config`` keeps the raw key/value map for the manifest."""

    config: Config
    landscape: Landscape
    f: ColonizationFunction
    spec: BoundSpec | None
    n: int | None
    n_sequence: tuple | None
    replicates: int
    seed: int
    tol: float = 1e-10
    max_iter: int = 1_000_000

    @classmethod
    def from_config(cls, cfg: Config, seed: int | None = None) -> "ExperimentConfig":
        if seed is not None:
            cfg = cfg.with_overrides([f"seed={int(seed)}"])
        built = validate(cfg)
        seq = cfg.get("n_sequence", kind=list)
        return cls(cfg, built["landscape"], built["f"], built["spec"], cfg.get("n", kind=int),
                   None if seq is None else tuple(int(k) for k in seq), cfg.get("replicates", 1, kind=int),
                   cfg.get("seed", 0, kind=int), cfg.get("solver.tol", 1e-10, kind=float),
                   cfg.get("solver.max_iter", 1_000_000, kind=int))

    def sizes(self) -> tuple:
        if self.n_sequence is not None:
            return self.n_sequence
        if self.n is None:
            raise ConfigError("missing required key 'n' (or 'n_sequence')")
        return (self.n,)


def _pmap(fn, tasks, threads: int):
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks))) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


@dataclass
class ExperimentReport:
    records: list
    aggregates: dict
    checklists: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    flagged: list = field(default_factory=list)
    runtime: float = 0.0
    tables: dict = field(default_factory=dict)


# ---------------------------------------------------------------- bound experiment

def _bound_replicate(task):
    ec, n, rep, ub, lb, inner = task
    land, f = ec.landscape, ec.f
    rec = {"replicate": rep, "n": n, "lambda_T": float("nan"), "primitive": None, "iterations": None,
           "residual": float("nan"), "ub_holds": None, "lb_holds": None, "ub_violation": float("nan"),
           "lb_violation": float("nan"), "max_interior_error": float("nan"), "interior_count": 0,
           "within_accuracy": None, "error": ""}
    arrays = None
    t0 = time.perf_counter()
    try:
        ps = sample_patches(land, n, ec.seed, rep)
        cm = coupling_matrix(ps, f)
        rec["lambda_T"], rec["primitive"] = cm.lambda_T, cm.primitive
        fp = largest_fixed_point(ps, f, ec.tol, ec.max_iter)
        p, z = fp.p, ps.locations
        rec["iterations"], rec["residual"] = fp.iterations, fp.residual
        pp = ub(z)
        q1 = q_field(land, f, z, 1.0)
        rec["ub_violation"] = float(np.max(p - pp))
        rec["ub_holds"] = bool(rec["ub_violation"] <= HOLD_TOL)
        dist = land.domain.distance(z, np.asarray(ec.spec.center))
        in_theta = dist <= ec.spec.t
        pm = np.full(ps.n, np.nan)
        if lb is not None and in_theta.any():
            pm[in_theta] = lb(z[in_theta])
            rec["lb_violation"] = float(np.max(pm[in_theta] - p[in_theta]))
            rec["lb_holds"] = bool(rec["lb_violation"] <= HOLD_TOL)
        elif lb is not None:
            rec["lb_holds"] = True
        if inner is not None:
            ins = dist <= inner[0]
            rec["interior_count"] = int(ins.sum())
            if ins.any():
                rec["max_interior_error"] = float(np.max(np.abs(p[ins] - q1[ins])))
                rec["within_accuracy"] = bool(rec["max_interior_error"] <= inner[1])
        arrays = (z, p, pp, q1, pm)
    except (MetaEqError, NumericalError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    rec["runtime"] = time.perf_counter() - t0
    return rec, arrays


REPLICATE_COLUMNS = ["replicate", "n", "lambda_T", "primitive", "iterations", "residual", "ub_holds", "lb_holds",
                     "ub_violation", "lb_violation", "max_interior_error", "interior_count", "within_accuracy", "error"]


def _freq_row(name, flags, bound=None):
    vals = [v for v in flags if v is not None]
    k, tot = int(sum(vals)), len(vals)
    lo, hi = wilson(k, tot)
    freq = k / tot if tot else float("nan")
    vac = None if bound is None else bool(bound <= 0)
    return {"name": name, "value": freq, "wilson_lo": lo, "wilson_hi": hi, "count": k, "total": tot,
            "bound": bound, "vacuous": vac}


REPORT_COLUMNS = ["name", "value", "wilson_lo", "wilson_hi", "count", "total", "bound", "vacuous"]


def run_bound_experiment(ec: ExperimentConfig, threads: int | None = 1, out=None) -> ExperimentReport:
    """Check the upper, lower and two-sided bracketing events over replicates.

    Hypothesis failures do not stop the run; they are listed in ``flagged``.
    """
    if ec.spec is None:
        raise ConfigError("bounds experiment needs the bounds.* keys (bounds.t, bounds.center, ...)")
    t0 = time.perf_counter()
    land, f, spec = ec.landscape, ec.f, ec.spec
    n = ec.sizes()[0]
    ubc = check_ub_hypotheses(land, f, spec, n)
    lbc = check_lb_hypotheses(land, f, spec)
    flagged = ubc.failed() + lbc.failed()
    ub = upper_bound_fn(land, f, spec, memoize=False)
    try:
        lb = lower_bound_fn(land, f, spec)
    except PreconditionError:
        lb = None
    bounds: dict = {"ub": ub_probability_bound(land, f, spec, n)}
    if lb is not None:
        bounds["lb"] = lb_probability_bound(land, f, spec, n)
    inner = None
    try:
        ts = two_sided_bound(land, f, spec, n)
        inner = (ts.inner.radius, ts.accuracy)
        bounds["two_sided"] = ts.probability
        bounds["accuracy"] = ts.accuracy
        bounds["inner_radius"] = ts.inner.radius
    except (NotApplicable, PreconditionError) as exc:
        flagged.append(f"two-sided: {exc}")
    try:
        bounds["primitive"] = primitivity_probability_bound(land, n)
    except NotApplicable:
        pass
    tasks = [(ec, n, rep, ub, lb, inner) for rep in range(ec.replicates)]
    results = _pmap(_bound_replicate, tasks, threads)
    records = [r for r, _ in results]
    agg = {
        "ub_holds": _freq_row("ub_holds", [r["ub_holds"] for r in records], bounds["ub"].value),
        "lb_holds": _freq_row("lb_holds", [r["lb_holds"] for r in records],
                              bounds["lb"].value if "lb" in bounds else None),
        "within_accuracy": _freq_row("within_accuracy", [r["within_accuracy"] for r in records],
                                     bounds["two_sided"].value if "two_sided" in bounds else None),
        "primitive": _freq_row("primitive", [r["primitive"] for r in records],
                               bounds["primitive"].value if "primitive" in bounds else None),
    }
    errs = np.array([r["max_interior_error"] for r in records])
    agg["median_max_interior_error"] = {"name": "median_max_interior_error",
                                        "value": float(np.nanmedian(errs)) if np.isfinite(errs).any() else float("nan"),
                                        "bound": bounds.get("accuracy")}
    agg["failed_replicates"] = {"name": "failed_replicates", "value": sum(bool(r["error"]) for r in records),
                                "total": len(records)}
    rep = ExperimentReport(records, agg, [ubc, lbc], bounds, flagged, time.perf_counter() - t0)
    if out is not None:
        out = Path(out)
        write_csv(out / "replicates.csv", REPLICATE_COLUMNS, ([r[c] for c in REPLICATE_COLUMNS] for r in records))
        write_csv(out / "report.csv", REPORT_COLUMNS, ([a.get(c) for c in REPORT_COLUMNS] for a in agg.values()))
        write_checklist(out / "checklist.csv", ubc, lbc)
        write_csv(out / "bounds.csv", ["name", "value", "vacuous"], _bound_rows(bounds))
        for (r, arrays) in results:
            if arrays is None:
                continue
            z, p, pp, q1, pm = arrays
            write_equilibrium(out / f"equilibrium_{r['replicate']}.csv", _Locs(z), p,
                              {"p_plus": pp, "q1": q1, "p_minus": pm})
        write_manifest(out, "bounds-experiment", ec.config.values, ec.seed)
        _write_timing(out, rep.runtime, records)
    return rep


class _Locs:
    def __init__(self, z):
        self.locations, self.n, self.dim = z, z.shape[0], z.shape[1]


def _bound_rows(bounds):
    for k, v in bounds.items():
        if hasattr(v, "vacuous"):
            yield [k, v.value, v.vacuous]
            if getattr(v, "alt_value", None) is not None:
                yield [k + "_covering_prefactor", v.alt_value, v.alt_value <= 0]
        elif hasattr(v, "covering"):
            yield [k, v.value, v.value <= 0]
        else:
            yield [k, v, None]


def _write_timing(out, total, records):
    import json

    times = [r.get("runtime", 0.0) for r in records]
    (Path(out) / "timing.json").write_text(json.dumps({"total_seconds": total, "replicate_seconds": times}) + "\n")


# ---------------------------------------------------------------- scaling

def _schedule(ec: ExperimentConfig):
    c = ec.config
    return corollary2_schedule(
        ec.landscape, ec.f, ec.sizes(), c.get("schedule.gamma1", 0.0, kind=float), c.get("schedule.gamma2", 0.0, kind=float),
        c.get("schedule.c1", 0.0, kind=float), c.get("schedule.c2", 0.0, kind=float), c.get("schedule.phi", "log", kind=str),
        c.get("schedule.r_scale", 1.0, kind=float), c.get("schedule.r_exponent", kind=float), c.get("schedule.K2", 1.0, kind=float))


def _scaling_replicate(task):
    ec, land, k, n, rep, inner = task
    rec = {"n": n, "replicate": rep, "lambda_T": float("nan"), "iterations": None, "interior_count": 0,
           "max_interior_error": float("nan"), "error": ""}
    t0 = time.perf_counter()
    try:
        ps = sample_patches(land, n, ec.seed, rep, key=(n,))
        rec["lambda_T"] = coupling_matrix(ps, ec.f).lambda_T
        fp = largest_fixed_point(ps, ec.f, ec.tol, ec.max_iter)
        rec["iterations"] = fp.iterations
        z = ps.locations
        ins = land.domain.distance(z, np.asarray(ec.spec.center)) <= inner
        rec["interior_count"] = int(ins.sum())
        if ins.any():
            rec["max_interior_error"] = float(np.max(np.abs(fp.p[ins] - q_field(land, ec.f, z[ins], 1.0))))
    except (MetaEqError, NumericalError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    rec["runtime"] = time.perf_counter() - t0
    return rec


SCALING_COLUMNS = ["n", "r", "phi", "scale", "alpha1", "alpha2", "beta", "beta_prime", "m", "M", "eta",
                   "excluded_width", "excluded_fraction", "median_error", "ratio", "valid_replicates"]


def run_scaling_experiment(ec: ExperimentConfig, threads: int | None = 1, out=None) -> ExperimentReport:
    """Median over replicates of the interior error for each ``n`` of the schedule.

    The interior is ``B_x(t - K2/phi_n)``; the ratio column divides the median
    error by ``r_n^(1-gamma1) phi_n``.
    """
    if ec.spec is None:
        raise ConfigError("scaling experiment needs bounds.center and bounds.t to define Theta")
    t0 = time.perf_counter()
    sched = _schedule(ec)
    lands = {e.n: land_with_r(ec.landscape, e.r) for e in sched}
    inner = {e.n: ec.spec.t - e.excluded_width for e in sched}
    tasks = [(ec, lands[e.n], k, e.n, rep, inner[e.n]) for k, e in enumerate(sched) for rep in range(ec.replicates)]
    records = _pmap(_scaling_replicate, tasks, threads)
    d = ec.landscape.dim
    vol = ec.landscape.domain.volume
    rows = []
    for e in sched:
        errs = np.array([r["max_interior_error"] for r in records if r["n"] == e.n])
        ok = errs[np.isfinite(errs)]
        med = float(np.median(ok)) if ok.size else float("nan")
        rad = max(inner[e.n], 0.0)
        frac = 1.0 - unit_ball_volume(d) * rad ** d / vol
        rows.append({"n": e.n, "r": e.r, "phi": e.phi, "scale": e.scale, "alpha1": e.alpha1, "alpha2": e.alpha2,
                     "beta": e.beta, "beta_prime": e.beta_prime, "m": e.m, "M": e.M, "eta": e.eta,
                     "excluded_width": e.excluded_width, "excluded_fraction": frac, "median_error": med,
                     "ratio": med / e.scale, "valid_replicates": int(ok.size), **{f"check:{k}": v for k, v in e.checks.items()}})
    meds = [r["median_error"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    fracs = [r["excluded_fraction"] for r in rows]
    agg = {
        "median_error_strictly_decreasing": {"name": "median_error_strictly_decreasing",
                                             "value": bool(all(b < a for a, b in zip(meds, meds[1:])))},
        "ratio_spread": {"name": "ratio_spread", "value": float(max(ratios) / min(ratios)) if min(ratios) > 0 else float("nan")},
        "excluded_fraction_decreasing": {"name": "excluded_fraction_decreasing",
                                         "value": bool(all(b < a for a, b in zip(fracs, fracs[1:])))},
        "M_increasing": {"name": "M_increasing", "value": bool(all(b.M > a.M for a, b in zip(sched, sched[1:])))},
    }
    rep = ExperimentReport(records, agg, runtime=time.perf_counter() - t0, tables={"scaling": rows})
    if out is not None:
        out = Path(out)
        check_cols = [k for k in rows[0] if k.startswith("check:")]
        write_csv(out / "scaling.csv", SCALING_COLUMNS + check_cols, ([r[c] for c in SCALING_COLUMNS + check_cols] for r in rows))
        cols = ["n", "replicate", "lambda_T", "iterations", "interior_count", "max_interior_error", "error"]
        write_csv(out / "replicates.csv", cols, ([r[c] for c in cols] for r in records))
        write_csv(out / "report.csv", ["name", "value"], ([a["name"], a["value"]] for a in agg.values()))
        write_manifest(out, "scaling", ec.config.values, ec.seed)
        _write_timing(out, rep.runtime, records)
    return rep


# ---------------------------------------------------------------- concentration

def concentration_bound(land: Landscape, n: int, t_over_H: float) -> float:
    """``2 exp(-C2 ((n-1) r^d / A) (t/H)^2)`` with ``H = a_max``."""
    const = landscape_constants(land, ColonizationFunction())
    return 2 * math.exp(-const.C2 * (n - 1) * land.r ** land.dim / land.A * t_over_H ** 2)


def empirical_deviation(land: Landscape, sources: np.ndarray, points: np.ndarray) -> np.ndarray:
    """``A/m sum_j a(z_j) c(z, z_j) - rho(z)`` over ``m`` sources at each point."""
    from scipy.spatial import cKDTree

    dom = land.domain
    tree = cKDTree(sources, boxsize=dom.side if dom.periodic else None)
    out = np.empty(len(points))
    for k, z in enumerate(points):
        idx = tree.query_ball_point(z, land.r)
        if idx:
            y = sources[idx]
            zz = np.broadcast_to(z, y.shape)
            s = float(np.sum(land.a(y) * land.c(zz, y)))
        else:
            s = 0.0
        out[k] = land.A / len(sources) * s
    return out - land.rho(points)


def _concentration_points(ec: ExperimentConfig) -> np.ndarray:
    pts = ec.config.get("concentration.points", kind=list)
    land = ec.landscape
    if pts is None:
        lo, hi = land.domain.bounding_box
        pts = [0.5 * (lo + hi)]
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != land.dim:
        raise ConfigError(f"concentration.points must have {land.dim} coordinates each")
    return land.domain.check_point(pts)


def _concentration_replicate(task):
    ec, n, rep, pts = task
    ps = sample_patches(ec.landscape, n, ec.seed, rep, key=(n,))
    # the empirical measure leaves one patch out
    return n, rep, empirical_deviation(ec.landscape, ps.locations[:-1], pts)


def run_concentration_experiment(ec: ExperimentConfig, t_grid=None, threads: int | None = 1, out=None) -> ExperimentReport:
    """Empirical tail frequency of ``|deviation| >= t`` against the tail bound, per (n, point, t).

    ``holds`` uses the Wilson upper limit, a one-sided comparison.

    Raises:
        PreconditionError: if some ``t/H`` exceeds ``c_max sigma_max v_d``.
    """
    t0 = time.perf_counter()
    land = ec.landscape
    if t_grid is None:
        t_grid = ec.config.get("concentration.t_over_H", kind=list, required=True)
    t_grid = [float(t) for t in t_grid]
    cap = land.kernel.c_max * land.sigma.upper * land.v_d
    if any(t < 0 or t > cap for t in t_grid):
        raise PreconditionError(f"t/H must lie in [0, c_max sigma_max v_d] = [0, {cap}]")
    H = land.a.upper
    pts = _concentration_points(ec)
    tasks = [(ec, n, rep, pts) for n in ec.sizes() for rep in range(ec.replicates)]
    results = _pmap(_concentration_replicate, tasks, threads)
    rows = []
    for n in ec.sizes():
        devs = np.array([d for (m, _, d) in results if m == n])
        for k in range(len(pts)):
            for th in t_grid:
                cnt = int(np.sum(np.abs(devs[:, k]) >= th * H))
                lo, hi = wilson(cnt, len(devs))
                b = concentration_bound(land, n, th)
                rows.append({"n": n, "point": k, **{f"x{j + 1}": pts[k, j] for j in range(land.dim)}, "t_over_H": th,
                             "t": th * H, "count": cnt, "total": len(devs), "frequency": cnt / len(devs),
                             "wilson_lo": lo, "wilson_hi": hi, "bound": b, "vacuous": b >= 1, "holds": hi <= b})
    records = [{"n": m, "replicate": r, **{f"dev{k}": d[k] for k in range(len(pts))}} for (m, r, d) in results]
    agg = {"all_hold": {"name": "all_hold", "value": all(r["holds"] for r in rows)}}
    rep = ExperimentReport(records, agg, runtime=time.perf_counter() - t0, tables={"concentration": rows})
    if out is not None:
        out = Path(out)
        cols = list(rows[0])
        write_csv(out / "report.csv", cols, ([r[c] for c in cols] for r in rows))
        rcols = list(records[0])
        write_csv(out / "replicates.csv", rcols, ([r[c] for c in rcols] for r in records))
        write_manifest(out, "concentration", ec.config.values, ec.seed)
        _write_timing(out, rep.runtime, [])
    return rep


# ---------------------------------------------------------------- stochastic comparison

def _stochastic_replicate(task):
    ec, n, rep, t_end, burn_in, K = task
    rec = {"n": n, "replicate": rep, "lambda_T": float("nan"), "extinct": None, "extinction_time": None,
           "events": 0, "sup_max_dev": 0.0, "sup_mean_abs_dev": 0.0, "sup_global_dev": 0.0, "error": ""}
    try:
        ps = sample_patches(ec.landscape, n, ec.seed, rep, key=(n,))
        rec["lambda_T"] = coupling_matrix(ps, ec.f).lambda_T
        p = largest_fixed_point(ps, ec.f, ec.tol, ec.max_iter).p
        if t_end > 0 and K > 0:
            x0 = (make_rng(ec.seed, rep, INITIAL_STATE, n).random(n) < p).astype(np.int8)
            traj = ctmc_simulate(ps, ec.f, x0, t_end, make_rng(ec.seed, rep, STOCHASTIC, n))
            rec["extinct"], rec["extinction_time"], rec["events"] = traj.extinct, traj.extinction_time, len(traj.times)
            edges = np.linspace(burn_in, t_end, K + 1)
            for a, b in zip(edges[:-1], edges[1:]):
                occ = window_occupancy(traj, a, b)
                dev = np.abs(occ - p)
                rec["sup_max_dev"] = max(rec["sup_max_dev"], float(dev.max()))
                rec["sup_mean_abs_dev"] = max(rec["sup_mean_abs_dev"], float(dev.mean()))
                rec["sup_global_dev"] = max(rec["sup_global_dev"], float(abs(occ.mean() - p.mean())))
        else:
            rec["extinct"] = False
    except (MetaEqError, NumericalError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


STOCH_COLUMNS = ["n", "replicate", "lambda_T", "extinct", "extinction_time", "events", "sup_max_dev",
                 "sup_mean_abs_dev", "sup_global_dev", "error"]


def run_stochastic_comparison(ec: ExperimentConfig, threads: int | None = 1, out=None) -> ExperimentReport:
    """CTMC started from Bernoulli(p*) occupancy, compared with ``p*`` over checkpoint windows.

    Windows split ``[burn_in, t_end]`` into ``stochastic.checkpoints`` pieces.
    Three deviations are tracked (sup over windows): the largest per-patch
    gap, the mean per-patch gap, and the gap of the habitat-wide averages.
    Extinction is flagged; windows after it count with zero occupancy.
    """
    t0 = time.perf_counter()
    c = ec.config
    t_end = c.get("stochastic.t_end", 100.0, kind=float)
    burn_in = c.get("stochastic.burn_in", 0.0, kind=float)
    K = c.get("stochastic.checkpoints", 10, kind=int)
    if t_end < 0 or burn_in < 0 or (t_end > 0 and burn_in >= t_end) or K < 0:
        raise ConfigError("need 0 <= stochastic.burn_in < stochastic.t_end and stochastic.checkpoints >= 0")
    tasks = [(ec, n, rep, t_end, burn_in, K) for n in ec.sizes() for rep in range(ec.replicates)]
    records = _pmap(_stochastic_replicate, tasks, threads)
    rows = []
    for n in ec.sizes():
        rs = [r for r in records if r["n"] == n and not r["error"]]
        rows.append({"n": n, "replicates": len(rs), "extinct": sum(bool(r["extinct"]) for r in rs),
                     **{k: float(np.mean([r[k] for r in rs])) if rs else float("nan")
                        for k in ("sup_max_dev", "sup_mean_abs_dev", "sup_global_dev")}})
    g = [r["sup_global_dev"] for r in rows]
    agg = {"global_dev_decreasing": {"name": "global_dev_decreasing", "value": bool(all(b < a for a, b in zip(g, g[1:])))},
           "extinctions": {"name": "extinctions", "value": sum(r["extinct"] for r in rows)}}
    rep = ExperimentReport(records, agg, runtime=time.perf_counter() - t0, tables={"stochastic": rows})
    if out is not None:
        out = Path(out)
        write_csv(out / "replicates.csv", STOCH_COLUMNS, ([r[k] for k in STOCH_COLUMNS] for r in records))
        cols = list(rows[0])
        write_csv(out / "stochastic.csv", cols, ([r[k] for k in cols] for r in rows))
        write_csv(out / "report.csv", ["name", "value"], ([a["name"], a["value"]] for a in agg.values()))
        write_manifest(out, "stochastic", ec.config.values, ec.seed)
        _write_timing(out, rep.runtime, [])
    return rep
