"""Command-line front end: sweeps, verification, simulations, reports.

Subcommands: f-table, beta-star, verify, simulate, convexity, oracle.
Exit codes: 0 success, 1 check failure, 2 usage error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import analytic, dynamics, geometry, svgplot, velocity
from .analytic import GsqgParams
from .checks import run_checks
from .errors import GsqgError, NoRootError
from .geometry import Contour, CornerSpec
from .velocity import ORACLE_CSV_COLUMNS

_CONFIG_DIR = Path(__file__).parent / "configs"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _write_csv(path: Path, header: str, rows):
    lines = [header]
    lines.extend(rows)
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# f-table


def _f_curve(args):
    alpha, betas, tol = args
    recs = [analytic.eval_F(alpha, float(b), tol) for b in betas]
    return alpha, recs


def cmd_f_table(args) -> int:
    if not args.alpha:
        print("error: need at least one --alpha", file=sys.stderr)
        return 2
    lo, hi, step = args.beta_range
    if step <= 0 or hi < lo:
        print("error: malformed --beta-range", file=sys.stderr)
        return 2
    betas = np.arange(lo, hi + 0.5 * step, step)
    out = Path(args.out)
    jobs = args.jobs or os.cpu_count() or 1
    work = [(a, betas, args.tol) for a in args.alpha]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_f_curve, work))
    else:
        results = [_f_curve(w) for w in work]

    rows = []
    curves = []
    for alpha, recs in results:
        rows.extend(
            f"{_fmt(r.alpha)},{_fmt(r.beta)},{_fmt(r.integral_I)},{_fmt(r.f_value)}"
            for r in recs
        )
        curves.append((f"alpha = {alpha:g}", betas.tolist(), [r.f_value for r in recs]))
    _write_csv(out / "f_table.csv", "alpha,beta,integral_I,f_value", rows)
    _write_text(
        out / "f_table.svg",
        svgplot.line_plot_svg(curves, title="Bending criterion F(alpha, beta)"),
    )
    print(f"wrote {out / 'f_table.csv'} and f_table.svg ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# beta-star


def cmd_beta_star(args) -> int:
    if args.alpha:
        alphas = list(args.alpha)
    else:
        lo, hi, step = args.alpha_range
        alphas = list(np.arange(lo, hi + 0.5 * step, step))
    out = Path(args.out)
    rows = []
    for alpha in alphas:
        bs = analytic.beta_star(float(alpha), args.tol)
        f_lo = analytic.eval_F(float(alpha), bs - 0.01).f_value
        f_hi = analytic.eval_F(float(alpha), bs + 0.01).f_value
        rows.append(f"{_fmt(alpha)},{_fmt(bs)},{_fmt(f_lo)},{_fmt(f_hi)}")
    _write_csv(out / "beta_star.csv", "alpha,beta_star,f_below,f_above", rows)
    print(f"wrote {out / 'beta_star.csv'} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    results = run_checks(level=args.level, seed=args.seed)
    out = Path(args.out)
    payload = {
        "level": args.level,
        "seed": args.seed,
        "all_passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "passed": r.passed, "detail": r.detail, "values": r.values}
            for r in results
        ],
    }
    _write_text(out / "verify_report.json", json.dumps(payload, indent=2, default=float) + "\n")
    lines = []
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"[{mark}] {r.name}: {r.detail}")
    summary = "\n".join(lines)
    _write_text(out / "verify_report.txt", summary + "\n")
    print(summary)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 1


# ---------------------------------------------------------------------------
# simulate / convexity


def _load_config(name_or_path: str) -> dict:
    p = Path(name_or_path)
    if not p.exists():
        candidate = _CONFIG_DIR / f"{name_or_path}.toml"
        if candidate.exists():
            p = candidate
        else:
            raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _build_initial(cfg: dict):
    kind = cfg.get("kind", "corner")
    params = GsqgParams(
        alpha=float(cfg["params"]["alpha"]),
        c_alpha=float(cfg["params"].get("c_alpha", 1.0)),
    )
    if kind == "circle":
        c = cfg.get("circle", {})
        n = int(c.get("n_nodes", 256))
        radius = float(c.get("radius", 1.0))
        t = np.arange(n) * 2.0 * math.pi / n
        nodes = radius * np.column_stack([np.cos(t), np.sin(t)])
        return kind, params, None, Contour(nodes, material=nodes.copy())
    corner = cfg["corner"]
    spec = CornerSpec(
        beta=float(corner["beta"]),
        delta=float(corner["delta"]),
        M=float(corner["em"]),
        target_area=float(corner["target_area"]) if "target_area" in corner else None,
    )
    mesh = cfg.get("mesh", {})
    npu = float(mesh.get("nodes_per_unit", 8.0 / spec.delta))
    far_fraction = float(mesh.get("far_fraction", 256.0))
    geo = geometry.corner_geometry(spec)
    far_spacing = geo.R_far / far_fraction
    if kind == "convexified":
        conv = cfg.get("convexity", {})
        contour = geometry.build_convexified_patch(
            spec,
            epsilon=float(conv.get("epsilon", 0.05)),
            tangency_a=float(conv.get("tangency_a", 0.1)),
            edge=conv.get("edge", "lower" if analytic.eval_F(params.alpha, spec.beta).f_value < 0 else "upper"),
            nodes_per_unit=npu,
            far_spacing=far_spacing,
        )
    else:
        contour = geometry.build_corner_patch(
            spec,
            nodes_per_unit=npu,
            far_spacing=far_spacing,
            junction_refine=bool(mesh.get("junction_refine", False)),
        )
    return kind, params, spec, contour


def _sim_config(cfg: dict, contour: Contour, params: GsqgParams, dt_override=None, steps_override=None):
    sim = cfg.get("sim", {})
    gauge = sim.get("gauge", "normal")
    state = geometry.frame(contour)
    field = velocity.contour_velocity(state, params, gauge=gauge, uniform_tol=math.inf)
    margin = float(sim.get("cfl_margin", 0.7))
    dt_auto = margin * dynamics.cfl_limit(state, params, 0.25, field=field)
    dt = float(dt_override or sim.get("dt", 0.0)) or dt_auto
    horizon = float(sim.get("horizon", 0.0))
    n_steps = int(steps_override or sim.get("steps", 0))
    if n_steps == 0:
        if horizon <= 0:
            raise ValueError("config must set sim.horizon or sim.steps")
        n_steps = max(1, int(math.ceil(horizon / dt)))
        dt = horizon / n_steps
    snapshot_times = tuple(float(t) for t in sim.get("snapshot_times", ()))
    frac = float(sim.get("target_spacing_fraction", 0.0))
    spec_delta = cfg.get("corner", {}).get("delta")
    target_spacing = (float(spec_delta) / frac) if (frac and spec_delta) else None
    return dynamics.SimConfig(
        dt=dt,
        n_steps=n_steps,
        resample_every=int(sim.get("resample_every", 0)),
        target_spacing=target_spacing,
        snapshot_times=snapshot_times,
        gauge=gauge,
        uniform_tol=float(sim.get("uniform_tol", 0.025)),
    )


def _emit_trajectory(out: Path, traj, spec, cfg):
    half = 1.2 * (spec.M if spec is not None else float(np.abs(traj.snapshots[0].nodes).max()))
    frames = []
    ghost = ("t = 0", traj.snapshots[0].nodes)
    for k, st in enumerate(traj.snapshots):
        rows = (f"{_fmt(x)},{_fmt(y)}" for x, y in st.nodes)
        _write_csv(out / f"snapshot_{k:03d}.csv", "x,y", rows)
        _write_text(
            out / f"snapshot_{k:03d}.json",
            json.dumps(
                {
                    "time": st.time,
                    "nodes": [[float(x), float(y)] for x, y in st.nodes],
                    "metadata": {"n_nodes": len(st.nodes), "area": st.contour.area},
                },
                default=float,
            )
            + "\n",
        )
        _write_text(
            out / f"frame_{k:03d}.svg",
            svgplot.contour_frame_svg(
                [ghost, (f"t = {st.time:.3g}", st.nodes)], half, title=f"t = {st.time:.4g}"
            ),
        )
        frames.append((f"t = {st.time:.3g}", st.nodes))
    _write_text(out / "frames_all.svg", svgplot.contour_frame_svg(frames, half))
    manifest = {
        "params": {"alpha": traj.params.alpha, "c_alpha": traj.params.c_alpha},
        "spec": None
        if spec is None
        else {
            "beta": spec.beta,
            "delta": spec.delta,
            "M": spec.M,
            "target_area": spec.target_area,
        },
        "config": {
            "dt": traj.config.dt,
            "n_steps": traj.config.n_steps,
            "resample_every": traj.config.resample_every,
            "target_spacing": traj.config.target_spacing,
            "snapshot_times": list(traj.config.snapshot_times),
            "gauge": traj.config.gauge,
        },
        "source_config": cfg,
        "diagnostics": {k: [float(x) for x in v] for k, v in traj.diagnostics.items()},
    }
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2, default=float) + "\n")


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    kind, params, spec, contour = _build_initial(cfg)
    sim_cfg = _sim_config(cfg, contour, params, args.dt, args.steps)
    out = Path(args.out)
    try:
        traj = dynamics.simulate(contour, params, sim_cfg)
    except GsqgError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 3
    _emit_trajectory(out, traj, spec, cfg)
    print(
        f"simulated {sim_cfg.n_steps} steps of dt={sim_cfg.dt:.3g} "
        f"({len(traj.snapshots)} snapshots) -> {out}"
    )
    return 0


def cmd_convexity(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    kind, params, spec, contour = _build_initial(cfg)
    conv = cfg.get("convexity", {})
    sim_cfg = _sim_config(cfg, contour, params, args.dt, args.steps)
    out = Path(args.out)
    try:
        report = dynamics.convexity_breaking_run(
            spec if spec is not None else CornerSpec(beta=0.0, delta=0.01, M=1.0),
            params,
            epsilon=float(conv.get("epsilon", 0.05)),
            config=sim_cfg,
            tangency_a=float(conv["tangency_a"]) if "tangency_a" in conv else None,
            kappa_threshold=float(conv["kappa_threshold"]) if "kappa_threshold" in conv else None,
            contour=contour if kind == "circle" else None,
            nodes_per_unit=float(cfg.get("mesh", {}).get("nodes_per_unit", 8.0 / (spec.delta if spec else 0.01))),
        )
    except GsqgError as exc:
        print(f"convexity run aborted: {exc}", file=sys.stderr)
        return 3
    payload = {
        "status": "breaking-observed" if report.breaking_observed else "no-breaking-observed",
        "breaking_time": report.breaking_time,
        "breaking_location": list(report.breaking_location),
        "min_kappa_initial": report.min_kappa_initial,
        "kappa_threshold": report.kappa_threshold,
        "snapshot_min_kappa": [[t, k] for t, k in report.snapshot_min_kappa],
        "epsilon": report.epsilon,
    }
    _write_text(out / "convexity_report.json", json.dumps(payload, indent=2, default=float) + "\n")
    print(json.dumps(payload, indent=2, default=float))
    return 0 if report.breaking_observed else 1


# ---------------------------------------------------------------------------
# oracle probes


def cmd_oracle(args) -> int:
    spec = CornerSpec(beta=args.beta, delta=args.delta, M=args.em)
    params = GsqgParams(alpha=args.alpha)
    rows = []
    for a in args.a:
        if args.derivatives:
            rep = velocity.oracle_d2_v2(spec, params, float(a))
            if params.alpha > 0.0:
                d1 = velocity.oracle_d1_v(spec, params, float(a))
                rep = type(rep)(**{**rep.__dict__, "d1_v2": d1})
        else:
            rep = velocity.area_velocity_v2(spec, params, float(a))
        rows.append(rep.csv_row())
    out = Path(args.out)
    _write_csv(out / "oracle.csv", ORACLE_CSV_COLUMNS, rows)
    print("\n".join([ORACLE_CSV_COLUMNS] + rows))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gsqg-corner",
        description="Contour-dynamics laboratory for corner-like gSQG patches",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("f-table", help="tabulate and plot the bending criterion")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.0, 0.5, 1.0, 1.5])
    p.add_argument("--beta-range", type=float, nargs=3, default=[0.0, 4.0, 0.01],
                   metavar=("LO", "HI", "STEP"))
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_f_table)

    p = sub.add_parser("beta-star", help="tabulate the critical slope")
    p.add_argument("--alpha", type=float, nargs="*", default=None)
    p.add_argument("--alpha-range", type=float, nargs=3, default=[0.1, 0.9, 0.1],
                   metavar=("LO", "HI", "STEP"))
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_beta_star)

    p = sub.add_parser("verify", help="run the verification suites")
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="evolve a configured patch")
    p.add_argument("--config", required=True,
                   help="TOML path or bundled name (fig3a, fig3b, circle)")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convexity", help="convexity-breaking run")
    p.add_argument("--config", required=True,
                   help="TOML path or bundled name (convexity_alpha0, convexity_alpha1, convexity_circle)")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_convexity)

    p = sub.add_parser("oracle", help="area-integral oracle probes")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--em", type=float, default=1.0, help="outer scale M")
    p.add_argument("--a", type=float, nargs="+", required=True)
    p.add_argument("--derivatives", action="store_true")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except NoRootError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GsqgError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
