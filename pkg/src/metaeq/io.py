"""CSV and manifest output. Floats are written with ``repr`` so they round-trip exactly."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def coord_header(d: int) -> list[str]:
    return [f"x{k + 1}" for k in range(d)]


def write_patches(path, ps) -> Path:
    z = ps.locations
    return write_csv(path, ["id", *coord_header(ps.dim)], ([i, *z[i]] for i in range(ps.n)))


def read_patches(path, landscape):
    """Rebuild a patch set from an ``id, x1..xd`` file written by :func:`write_patches`."""
    from .patches import PatchSet

    rows = read_csv(path)
    cols = coord_header(landscape.dim)
    rows.sort(key=lambda r: int(r["id"]))
    z = np.array([[float(r[c]) for c in cols] for r in rows])
    return PatchSet(landscape, z)


def write_coupling(path, cm) -> Path:
    return write_csv(path, ["lambda_T", "primitive", "n_edges"], [[cm.lambda_T, cm.primitive, cm.n_edges]])


def write_equilibrium(path, ps, p_star, extra: dict | None = None) -> Path:
    """``id, x1..xd, p_star`` plus any named extra per-patch columns."""
    extra = extra or {}
    cols = list(extra)
    z = ps.locations
    rows = ([i, *z[i], p_star[i], *(extra[c][i] for c in cols)] for i in range(ps.n))
    return write_csv(path, ["id", *coord_header(ps.dim), "p_star", *cols], rows)


def write_checklist(path, *checklists) -> Path:
    rows = []
    for cl in checklists:
        for it in cl.items:
            rows.append([it.name, it.lhs, it.rhs, it.passed, it.margin])
    return write_csv(path, ["name", "lhs", "rhs", "pass", "margin"], rows)


def write_manifest(out, command: str, config_values: dict, seed: int, extra: dict | None = None) -> Path:
    """Full config, seed and version string; independent of thread count and wall time."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    data = {"command": command, "version": f"metaeq {__version__}", "seed": seed,
            "config": dict(sorted(config_values.items()))}
    if extra:
        data.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def write_trajectory(path, traj) -> Path:
    """ODE trajectory: ``t, p1..pn``."""
    n = traj.p.shape[1]
    return write_csv(path, ["t", *(f"p{i + 1}" for i in range(n))], ([t, *row] for t, row in zip(traj.t, traj.p)))


def write_events(path, traj) -> Path:
    """CTMC event list ``time, patch_id, new_state``."""
    return write_csv(path, ["time", "patch_id", "new_state"], zip(traj.times, traj.patches, traj.states))
