"""Config-driven experiment pipeline: geometry -> evolution -> analysis -> fits.

A run is described by one declarative TOML file (JSON accepted); the
runner validates it strictly (unknown fields are hard errors), executes
the requested pipeline stages, and leaves behind a self-contained run
directory:

    trajectory.csv          t,r_obs,psi,dpsi_dt,dpsi_drstar rows
    curves/<label>.csv      moving-observer samples (if configured)
    snapshots.npz           full-field dumps (if configured)
    reports/*.json          per-analysis reports
    plots/*.svg             diagnostic plots (native SVG)
    manifest.json           config hash, versions, wall time, file checksums

Reruns of the same configuration produce byte-identical data files
(checksums recorded in the manifest make this auditable).  Run
directories are append-only: a rerun creates a new timestamped directory
unless in_place is requested.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
import time
from pathlib import Path

import numpy as np

from . import __version__ as _VERSION
from .analysis import GridField, NormSpec, cone_partition, commutator_residual_flat, le_norm, sobolev_check
from .errors import ConfigError, PricelabError
from .evolver import GridSpec, InitialData, PerturbationSpec, evolve, photon_sphere_window
from .geometry import BlackHoleParams, tortoise
from .reduction import RadialPotential
from .svgplot import svg_line_plot
from .tailfit import CurveSeries, envelope_fit, fit_tail

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

ANALYSES = ("tail", "envelope", "norms", "commutators", "sobolev")
WORKERS_ENV = "PRICELAB_WORKERS"


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------

_SCHEMA = {
    "name": str,
    "background": {
        "M": (int, float), "a": (int, float), "ell": int, "flat": bool,
        "perturbation": {
            "epsilon": (int, float), "decay_exponent": (int, float),
            "mode": str, "window_half_width": (int, float),
        },
    },
    "grid": {
        "rstar_min": (int, float), "rstar_max": (int, float), "h": (int, float),
        "cfl": (int, float), "t_max": (int, float), "order": int,
        "left_boundary": str, "right_boundary": str,
    },
    "data": {
        "profile": str, "center": (int, float), "width": (int, float),
        "amplitude": (int, float), "momentarily_static": bool, "direction": str,
    },
    "observers": {"r": list, "curves": list},
    "analyses": {
        "run": list,
        "tail": {"window": list, "method": str, "plateau_tol": (int, float), "margin": (int, float)},
        "envelope": {"t_min": (int, float)},
        "norms": {"variants": list, "intervals": list},
        "commutators": {"resolutions": list},
        "sobolev": {"T": list},
    },
    "output": {"directory": str, "stride": int, "snapshot_stride": (int, float), "formats": list},
    "sweep": {"ell": list, "epsilon": list, "delta": list, "resolution": list},
}

_REQUIRED = {"background": ("M",), "grid": ("rstar_min", "rstar_max", "h", "cfl", "t_max"),
             "data": (), "observers": (), "output": ()}


def _validate(node, schema, location):
    if not isinstance(node, dict):
        raise ConfigError(f"expected a table, got {type(node).__name__}", location)
    for key, val in node.items():
        if key not in schema:
            raise ConfigError(f"unknown field '{key}'", location)
        want = schema[key]
        if isinstance(want, dict):
            _validate(val, want, f"{location}.{key}" if location else key)
        elif not isinstance(val, want) or (want is int and isinstance(val, bool)):
            raise ConfigError(f"field '{key}' has type {type(val).__name__}", location)


def load_config(path) -> dict:
    """Parse and validate a TOML (or JSON) experiment configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    if path.suffix == ".json":
        try:
            cfg = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}", str(path)) from e
    else:
        try:
            cfg = tomllib.loads(raw.decode())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML: {e}", str(path)) from e
    _validate(cfg, _SCHEMA, "")
    for section, fields in _REQUIRED.items():
        if section not in cfg:
            raise ConfigError(f"missing section [{section}]")
        for f in fields:
            if f not in cfg[section]:
                raise ConfigError(f"missing field '{f}'", section)
    for a in cfg.get("analyses", {}).get("run", []):
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis '{a}' (choose from {ANALYSES})", "analyses.run")
    bg = cfg["background"]
    if bg.get("a", 0.0) != 0.0 and not bg.get("flat", False):
        raise ConfigError("evolution requires a = 0; a != 0 backgrounds are geometry-only", "background.a")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def _parse_curve(spec: str):
    spec = spec.replace(" ", "")
    if spec.startswith("t/"):
        k = float(spec[2:])
        return spec, (lambda t, k=k: t / k)
    if spec.startswith("t-"):
        c = float(spec[2:])
        return spec, (lambda t, c=c: t - c)
    raise ConfigError(f"cannot parse curve '{spec}' (use 't/K' or 't-C', tortoise coordinate)",
                      "observers.curves")


# ---------------------------------------------------------------------------
# Pipeline pieces
# ---------------------------------------------------------------------------

def _build_problem(cfg: dict):
    bg = cfg["background"]
    flat = bg.get("flat", False)
    ell = bg.get("ell", 0)
    params = None if flat else BlackHoleParams(M=bg["M"], a=bg.get("a", 0.0))
    potential = None if flat else RadialPotential(ell=ell, params=params)

    g = cfg["grid"]
    grid = GridSpec(rstar_min=g["rstar_min"], rstar_max=g["rstar_max"], h=g["h"],
                    cfl=g["cfl"], t_max=g["t_max"], order=g.get("order", 2),
                    left_boundary=g.get("left_boundary", "reflecting" if flat else "outgoing"),
                    right_boundary=g.get("right_boundary", "causal"))

    d = cfg.get("data", {})
    data = InitialData(profile=d.get("profile", "gaussian"), center=d.get("center", 20.0),
                       width=d.get("width", 2.0), amplitude=d.get("amplitude", 1.0),
                       momentarily_static=d.get("momentarily_static", True),
                       direction=d.get("direction", "ingoing"))

    pert = None
    if "perturbation" in bg:
        p = bg["perturbation"]
        if flat:
            raise ConfigError("perturbation requires a black-hole background", "background.perturbation")
        window, support = photon_sphere_window(params, p.get("window_half_width", 0.5) * params.M)
        pert = PerturbationSpec(epsilon=p["epsilon"], decay_exponent=p["decay_exponent"],
                                window=window, window_support=support, mode=p.get("mode", "potential"))

    obs_r = [float(x) for x in cfg.get("observers", {}).get("r", [])]
    if flat:
        obs_rstar = list(obs_r)
    else:
        obs_rstar = [float(tortoise(params, x)) for x in obs_r]
    curves = [_parse_curve(s) for s in cfg.get("observers", {}).get("curves", [])]
    return params, potential, grid, data, pert, obs_r, obs_rstar, curves


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _u_field_from_snapshots(traj) -> GridField:
    keep = traj.grid_r > 0
    r = traj.grid_r[keep]
    return GridField(t=traj.snapshot_times, r=r,
                     values=traj.snapshot_psi[:, keep] / r[None, :], ell=traj.ell)


def _analysis_tail(cfg, traj, run_id):
    opts = cfg.get("analyses", {}).get("tail", {})
    out = []
    for j, r_obs in enumerate(traj.observers_r):
        t, u = traj.observer_series(j)
        window = tuple(opts["window"]) if "window" in opts else None
        fit = fit_tail(t, u, window=window, method=opts.get("method", "log-derivative"),
                       plateau_tol=opts.get("plateau_tol", 0.25), margin=opts.get("margin", 50.0))
        out.append({"run_id": run_id, "observer": float(r_obs), **fit.to_json_dict()})
    return out


def _analysis_envelope(cfg, traj, run_id):
    t_min = cfg.get("analyses", {}).get("envelope", {}).get("t_min", 300.0)
    cu, cdu = [], []
    for c in traj.curves:
        m = c.t >= t_min
        cu.append(CurveSeries(t=c.t[m], r=c.rstar[m], u=c.u[m], label=c.label))
        cdu.append(CurveSeries(t=c.t[m], r=c.rstar[m], u=c.grad_u[m], label=c.label))
    env = envelope_fit(cu, kind="field")
    envg = envelope_fit(cdu, kind="gradient")
    return {"run_id": run_id, "observer": "curves", "t_min": t_min,
            "field": {"p_t": env.p_t, "p_u": env.p_u, "C": env.C,
                      "residual": env.max_residual, "n_points": env.n_points},
            "gradient": {"p_u": envg.p_u, "C": envg.C,
                         "residual": envg.max_residual, "n_points": envg.n_points}}


def _analysis_norms(cfg, traj, run_id):
    if traj.snapshot_psi is None:
        raise ConfigError("norms analysis requires output.snapshot_stride > 0", "analyses")
    opts = cfg.get("analyses", {}).get("norms", {})
    variants = opts.get("variants", ["LE", "LE1"])
    t_end = float(traj.snapshot_times[-1])
    intervals = [tuple(map(float, iv)) for iv in opts.get("intervals", [[0.0, t_end]])]
    f = _u_field_from_snapshots(traj)
    out = []
    for variant in variants:
        for iv in intervals:
            res = le_norm(f, NormSpec(variant, iv))
            out.append({"run_id": run_id, **res.to_json_dict()})
    return out


def _analysis_commutators(cfg, run_id):
    opts = cfg.get("analyses", {}).get("commutators", {})
    hs = opts.get("resolutions", [0.1, 0.05, 0.025])
    # generic analytic test function; pure functions of t - r degenerate
    # (the leading truncation term cancels, leaving round-off)
    u_fn = lambda T, R: np.exp(-((T - R - 5.0) ** 2)) * (1.0 + 0.3 * np.sin(0.7 * R))
    sups = []
    for h in hs:
        t = np.arange(6.0, 14.0 + h / 2, h)
        r = np.arange(1.0, 9.0 + h / 2, h)
        res, _, _ = commutator_residual_flat(u_fn, t, r, order=2)
        sups.append(float(np.abs(res).max()))
    orders = [math.log2(sups[i] / sups[i + 1]) for i in range(len(sups) - 1)]
    return {"run_id": run_id, "resolutions": list(hs), "residual_sup": sups,
            "observed_orders": orders}


def _analysis_sobolev(cfg, run_id):
    opts = cfg.get("analyses", {}).get("sobolev", {})
    Ts = opts.get("T", [32.0, 64.0, 128.0])
    rows = []
    for T in Ts:
        regions = [reg for reg in cone_partition(T) if reg.kind == "R"]
        reg = regions[len(regions) // 2]

        def w_fn(tt, rr, T=T, reg=reg):
            sc = max(reg.scale, 1.0)
            return (np.exp(-((tt - 1.5 * T) / (0.2 * T)) ** 2)
                    * np.exp(-((rr - 1.4 * sc) / (0.3 * sc)) ** 2))

        t = np.linspace(0.45 * T, 4.2 * T, 160)
        r = np.linspace(1e-3, min(4.2 * reg.scale * 2, 4.2 * T), 160)
        w = GridField.from_function(w_fn, t, r, ell=1)
        res = sobolev_check(w, reg)
        rows.append({"T": T, "kind": reg.kind, "scale": reg.scale,
                     "lhs": res.lhs, "rhs": res.rhs, "ratio": res.ratio})
    return {"run_id": run_id, "rows": rows}


def _plot_tail(traj, tail_reports, path):
    series = []
    extra = []
    for j, rep in enumerate(tail_reports):
        t, u = traj.observer_series(j)
        m = t > 0
        series.append((f"r={rep['observer']:g}", t[m], np.abs(u[m])))
        if rep.get("p_final") is not None:
            w0, w1 = rep["window"]
            i0 = int(np.argmin(np.abs(t - w0)))
            p = rep["p_final"]
            c = abs(u[i0]) / max(t[i0], 1e-300) ** p
            extra.append((f"slope {p:.2f}", w0, c * w0**p, w1, c * w1**p))
    svg_line_plot(series, path, xlabel="t", ylabel="|psi|", title="observer tails",
                  logx=True, logy=True, extra_lines=extra)


def _plot_envelope(traj, env_report, t_min, path):
    fld = env_report["field"]
    series = []
    for c in traj.curves:
        m = (c.t >= t_min) & (np.abs(c.u) > 0)
        if not m.any():
            continue
        tb = np.sqrt(4.0 + c.t[m] ** 2)
        ub = np.sqrt(4.0 + (c.t[m] - c.rstar[m]) ** 2)
        model = fld["C"] * tb ** (-fld["p_t"]) * ub ** (-fld["p_u"])
        series.append((c.label, c.t[m], np.abs(c.u[m]) / model))
    svg_line_plot(series, path, xlabel="t", ylabel="|u| / fitted model",
                  title=f"envelope residuals (p_t={fld['p_t']:.2f}, p_u={fld['p_u']:.2f})",
                  logx=True, logy=False)


# ---------------------------------------------------------------------------
# run / sweep / report / selftest
# ---------------------------------------------------------------------------

def run(config_path, in_place: bool = False, out_dir=None) -> Path:
    """Execute one configured experiment; returns the run directory."""
    cfg = load_config(config_path)
    chash = config_hash(cfg)
    name = cfg.get("name", Path(config_path).stem)
    base = Path(out_dir) if out_dir is not None else Path(cfg["output"].get("directory", "runs"))
    if in_place:
        run_dir = base / name
    else:
        stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
        run_dir = base / f"{name}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "reports").mkdir(exist_ok=True)

    t_start = time.time()
    params, potential, grid, data, pert, obs_r, obs_rstar, curves = _build_problem(cfg)
    out_cfg = cfg.get("output", {})
    stride = out_cfg.get("stride", 10)
    snap = int(out_cfg.get("snapshot_stride", 0)) or None
    formats = out_cfg.get("formats", ["csv", "json", "svg"])

    traj = evolve(grid, potential, data, obs_rstar, perturbation=pert,
                  output_stride=stride, snapshot_stride=snap,
                  observers_r=obs_r, curve_observers=curves)

    files = []
    if "csv" in formats and len(obs_rstar):
        traj.write_csv(run_dir / "trajectory.csv")
        files.append("trajectory.csv")
    if "csv" in formats and traj.curves:
        (run_dir / "curves").mkdir(exist_ok=True)
        for c in traj.curves:
            p = run_dir / "curves" / (c.label.replace("/", "_over_") + ".csv")
            with open(p, "w") as fh:
                fh.write("t,rstar,r,psi,dpsi_dt,dpsi_drstar,u,grad_u\n")
                for i in range(len(c.t)):
                    fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                             % (c.t[i], c.rstar[i], c.r[i], c.psi[i], c.dpsi_dt[i],
                                c.dpsi_drstar[i], c.u[i], c.grad_u[i]))
            files.append(str(p.relative_to(run_dir)))
    if snap is not None and "npz" in formats:
        np.savez_compressed(run_dir / "snapshots.npz", t=traj.snapshot_times,
                            rstar=traj.grid_rstar, r=traj.grid_r,
                            psi=traj.snapshot_psi, pi=traj.snapshot_pi,
                            config_hash=np.array(chash))
        files.append("snapshots.npz")

    summaries = {}
    requested = cfg.get("analyses", {}).get("run", [])
    for a in requested:
        run_id = f"{name}:{chash[:12]}"
        if a == "tail":
            rep = _analysis_tail(cfg, traj, run_id)
            summaries["tail"] = {"p_final": [r["p_final"] for r in rep]}
        elif a == "envelope":
            rep = _analysis_envelope(cfg, traj, run_id)
            summaries["envelope"] = {"p_t": rep["field"]["p_t"], "p_u": rep["field"]["p_u"],
                                     "grad_p_u": rep["gradient"]["p_u"]}
        elif a == "norms":
            rep = _analysis_norms(cfg, traj, run_id)
            summaries["norms"] = {"values": [r["value"] for r in rep]}
        elif a == "commutators":
            rep = _analysis_commutators(cfg, run_id)
            summaries["commutators"] = {"observed_orders": rep["observed_orders"]}
        elif a == "sobolev":
            rep = _analysis_sobolev(cfg, run_id)
            summaries["sobolev"] = {"ratios": [row["ratio"] for row in rep["rows"]]}
        if "json" in formats:
            _write_json(run_dir / "reports" / f"{a}.json", rep)
            files.append(f"reports/{a}.json")

    if "svg" in formats:
        (run_dir / "plots").mkdir(exist_ok=True)
        if "tail" in requested and len(obs_rstar):
            _plot_tail(traj, json.loads((run_dir / "reports" / "tail.json").read_text()),
                       run_dir / "plots" / "tail.svg")
            files.append("plots/tail.svg")
        if "envelope" in requested and traj.curves:
            env_rep = json.loads((run_dir / "reports" / "envelope.json").read_text())
            _plot_envelope(traj, env_rep, env_rep["t_min"], run_dir / "plots" / "envelope.svg")
            files.append("plots/envelope.svg")

    manifest = {
        "config_hash": chash,
        "config": cfg,
        "tool_version": _VERSION,
        "started": _dt.datetime.fromtimestamp(t_start).isoformat(),
        "finished": _dt.datetime.now().isoformat(),
        "wall_seconds": time.time() - t_start,
        "grid_points": len(grid.rstar()),
        "time_steps": int(round(grid.t_max / grid.dt)),
        "scheme": traj.meta["scheme"],
        "summaries": summaries,
        "files": {f: _sha256(run_dir / f) for f in sorted(files)},
    }
    _write_json(run_dir / "manifest.json", manifest)
    return run_dir


def _sweep_cell(args):
    cfg, cell, base = args
    import copy
    c = copy.deepcopy(cfg)
    c.pop("sweep", None)
    label_parts = []
    if "ell" in cell:
        c["background"]["ell"] = cell["ell"]
        label_parts.append(f"ell{cell['ell']}")
    if "epsilon" in cell or "delta" in cell:
        p = c["background"].setdefault("perturbation", {"epsilon": 0.0, "decay_exponent": 0.5})
        if "epsilon" in cell:
            p["epsilon"] = cell["epsilon"]
            label_parts.append(f"eps{cell['epsilon']}")
        if "delta" in cell:
            p["decay_exponent"] = cell["delta"]
            label_parts.append(f"delta{cell['delta']}")
        if p["epsilon"] == 0.0:
            c["background"].pop("perturbation")
    if "resolution" in cell:
        c["grid"]["h"] = cell["resolution"]
        label_parts.append(f"h{cell['resolution']}")
    label = "_".join(label_parts) or "cell"
    c["name"] = f"{cfg.get('name', 'sweep')}-{label}"

    cell_dir = Path(base) / label
    try:
        tmp = Path(base) / f"{label}.json"
        tmp.write_text(json.dumps(c))
        rd = run(tmp, in_place=True, out_dir=cell_dir)
        tmp.unlink()
        manifest = json.loads((Path(rd) / "manifest.json").read_text())
        p_final = None
        tails = manifest["summaries"].get("tail", {}).get("p_final", [])
        if tails:
            p_final = tails[0]
        return {"cell": cell, "label": label, "status": "ok", "run_dir": str(rd),
                "p_final": p_final, "summaries": manifest["summaries"]}
    except Exception as e:  # cell isolation: one failure must not kill the sweep
        return {"cell": cell, "label": label, "status": "failed",
                "error": f"{type(e).__name__}: {e}"}


def sweep(config_path, out_dir=None, workers: int | None = None) -> Path:
    """Run the cross product of the [sweep] ranges; returns the sweep directory."""
    cfg = load_config(config_path)
    sw = cfg.get("sweep")
    if not sw:
        raise ConfigError("sweep requires a [sweep] section with at least one range")
    dims = [(k, v) for k, v in sw.items() if v]
    if not dims:
        raise ConfigError("all [sweep] ranges are empty", "sweep")

    cells = [{}]
    for key, values in dims:
        cells = [{**c, key: v} for c in cells for v in values]

    name = cfg.get("name", Path(config_path).stem)
    base = Path(out_dir) if out_dir is not None else Path(cfg["output"].get("directory", "runs"))
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    sweep_dir = base / f"{name}-sweep-{stamp}"
    sweep_dir.mkdir(parents=True, exist_ok=True)

    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "0")) or min(len(cells), os.cpu_count() or 1)
    args = [(cfg, cell, str(sweep_dir)) for cell in cells]
    results = []
    if workers > 1:
        try:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_cell, args))
        except (OSError, ImportError):  # restricted environments: fall back to serial
            results = [_sweep_cell(a) for a in args]
    else:
        results = [_sweep_cell(a) for a in args]

    results.sort(key=lambda r: r["label"])
    aggregate = {
        "config_hash": config_hash(cfg),
        "tool_version": _VERSION,
        "cells": results,
        "failed_cells": [r["label"] for r in results if r["status"] == "failed"],
    }
    res_values = sw.get("resolution") or []
    if len(res_values) >= 2:
        ok = {r["cell"].get("resolution"): r.get("p_final") for r in results if r["status"] == "ok"}
        hs = sorted((v for v in res_values if v in ok and ok[v] is not None), reverse=True)
        table = [{"h": h, "p_final": ok[h]} for h in hs]
        diffs = [abs(table[i]["p_final"] - table[i + 1]["p_final"]) for i in range(len(table) - 1)]
        aggregate["convergence"] = {"table": table, "diffs": diffs}
    _write_json(sweep_dir / "aggregate.json", aggregate)
    return sweep_dir


def report(run_dir) -> str:
    """Human-readable summary of a run or sweep directory."""
    run_dir = Path(run_dir)
    lines = []
    man = run_dir / "manifest.json"
    agg = run_dir / "aggregate.json"
    if man.exists():
        m = json.loads(man.read_text())
        lines.append(f"run        : {run_dir.name}")
        lines.append(f"config hash: {m['config_hash'][:16]}  tool {m['tool_version']}")
        lines.append(f"grid       : {m['grid_points']} points x {m['time_steps']} steps ({m['scheme']})")
        lines.append(f"wall time  : {m['wall_seconds']:.1f} s")
        for k, v in sorted(m.get("summaries", {}).items()):
            lines.append(f"  {k}: {json.dumps(v, sort_keys=True)}")
        lines.append(f"files      : {len(m['files'])} (checksummed)")
    elif agg.exists():
        a = json.loads(agg.read_text())
        lines.append(f"sweep      : {run_dir.name}  ({len(a['cells'])} cells)")
        for r in a["cells"]:
            if r["status"] == "ok":
                lines.append(f"  {r['label']}: p_final={r.get('p_final')}")
            else:
                lines.append(f"  {r['label']}: FAILED ({r['error']})")
        if a.get("convergence"):
            for row in a["convergence"]["table"]:
                lines.append(f"  h={row['h']}: p_final={row['p_final']}")
        if a["failed_cells"]:
            lines.append(f"failed     : {a['failed_cells']}")
    else:
        raise PricelabError(f"no manifest.json or aggregate.json in {run_dir}")
    return "\n".join(lines)


def selftest(verbose: bool = True) -> bool:
    """Fast built-in checks of the core numerical machinery."""
    from .geometry import TrappedSetQuery, inverse_tortoise, trapped_root
    from .reduction import ReductionSource, oned_reduction

    checks = []

    def check(label, fn):
        try:
            ok = bool(fn())
            checks.append((label, ok, ""))
        except Exception as e:
            checks.append((label, False, f"{type(e).__name__}: {e}"))

    p1 = BlackHoleParams(1.0)
    check("trapped root a=0 is 3M",
          lambda: abs(trapped_root(TrappedSetQuery(1.0, 0.0, p1)) - 3.0) <= 1e-12)
    check("tortoise round trip",
          lambda: all(abs(inverse_tortoise(p1, float(tortoise(p1, r))) - r) <= 1e-10 * r
                      for r in (3.0, 10.0, 100.0)))
    check("rectangle integral closed form",
          lambda: abs(oned_reduction(ReductionSource(H=lambda s, rho: np.ones_like(s)), 10.0, 4.0)
                      - (100.0 - 16.0) / 8.0) <= 1e-6)

    def huygens():
        grid = GridSpec(rstar_min=0.0, rstar_max=80.0, h=0.05, cfl=1.0, t_max=30.0,
                        left_boundary="reflecting", right_boundary="causal")
        data = InitialData(profile="gaussian", center=10.0, width=1.0, amplitude=1.0)
        traj = evolve(grid, None, data, [2.0, 4.0], output_stride=10)
        late = traj.times > 25.0
        return np.abs(traj.psi[late]).max() <= 1e-8

    check("flat Huygens floor", huygens)

    def determinism():
        grid = GridSpec(rstar_min=-30.0, rstar_max=60.0, h=0.1, cfl=0.9, t_max=20.0)
        pot = RadialPotential(ell=0, params=p1)
        data = InitialData(center=20.0, width=2.0)
        a = evolve(grid, pot, data, [12.77], output_stride=5)
        b = evolve(grid, pot, data, [12.77], output_stride=5)
        return np.array_equal(a.psi, b.psi) and np.array_equal(a.dpsi_dt, b.dpsi_dt)

    check("bit-identical rerun", determinism)

    ok_all = all(ok for _, ok, _ in checks)
    if verbose:
        for label, ok, msg in checks:
            print(f"[{'PASS' if ok else 'FAIL'}] {label}{('  ' + msg) if msg else ''}")
    return ok_all
