"""Time evolution of patch boundaries and the bending-sign classifier.

The contour moves by classical RK4 with the boundary-integral velocity as
the right-hand side.  Curvature diagnostics follow the evolution identity

    d(kappa)/dt = -2 kappa (ds_v . T) - (ds2_v . N)

at fixed curve label, together with its integrating-factor form
d/dt( exp(2 int ds_v.T) kappa ) = - exp(...) ds2_v.N.  The classifier
reads the curvature sign on the two straight edges inside the validated
annulus (edge membership recovered from the ancestor coordinates carried
by each node) and maps (lower > 0, upper < 0) to a downward verdict and
the reverse to upward, anything mixed or sub-threshold to indeterminate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import Annulus, GsqgParams, annulus as make_annulus, eval_F
from .errors import (
    CflViolationError,
    InvalidParameterError,
    ResolutionTooCoarseError,
    SelfIntersectionError,
)
from .geometry import (
    Contour,
    ContourState,
    CornerSpec,
    build_convexified_patch,
    corner_geometry,
    frame,
    resample,
)
from .velocity import contour_velocity, velocity_of_nodes

__all__ = [
    "SimConfig",
    "BendingVerdict",
    "Trajectory",
    "IntegratingFactorReport",
    "ConvexityBreakingReport",
    "step",
    "simulate",
    "curvature_rate",
    "integrating_factor_check",
    "classify_bending",
    "combined_verdict",
    "convexity_breaking_run",
    "cfl_limit",
]


@dataclass(frozen=True)
class SimConfig:
    """Time-stepping parameters."""

    dt: float
    n_steps: int
    resample_every: int = 0  # 0 disables resampling
    target_spacing: float = None
    snapshot_times: tuple = ()
    cfl_factor: float = 0.25
    uniform_tol: float = 0.025
    gauge: str = "auto"


    def __post_init__(self):
        if not self.dt > 0.0:
            raise InvalidParameterError("dt must be positive")
        if self.n_steps < 0:
            raise InvalidParameterError("n_steps must be nonnegative")
        if self.resample_every and self.target_spacing is None:
            raise InvalidParameterError("resampling requires target_spacing")


@dataclass(frozen=True)
class BendingVerdict:
    edge: str
    annulus: Annulus
    min_kappa: float
    max_kappa: float
    verdict: str
    n_nodes: int


@dataclass(frozen=True)
class IntegratingFactorReport:
    residual: float
    term_scale: float


@dataclass(frozen=True)
class Trajectory:
    snapshots: list
    diagnostics: dict
    params: GsqgParams
    config: SimConfig


@dataclass(frozen=True)
class ConvexityBreakingReport:
    breaking_observed: bool
    breaking_time: float
    breaking_location: tuple
    min_kappa_initial: float
    kappa_threshold: float
    snapshot_min_kappa: tuple
    epsilon: float


def cfl_limit(
    state: ContourState,
    params: GsqgParams,
    cfl_factor: float = 0.25,
    field=None,
) -> float:
    """Largest admissible step.

    Geometric (stiffness) part: cfl * (min spacing)^max(1, alpha).  When a
    velocity field is supplied, the per-node advection limit
    cfl * min_i(spacing_i / |v|_i) is applied as well: no node may sweep
    more than a fraction of its local spacing per step.
    """
    nodes = state.nodes
    seg = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    h_min = float(seg.min())
    limit = cfl_factor * h_min ** max(1.0, params.alpha)
    if field is not None:
        speed = np.hypot(field.v[:, 0], field.v[:, 1])
        local = np.minimum(seg, np.roll(seg, 1))
        with np.errstate(divide="ignore"):
            adv = np.min(np.where(speed > 0, local / speed, np.inf))
        limit = min(limit, cfl_factor * float(adv))
    return limit


def _rk4(nodes: np.ndarray, params: GsqgParams, dt: float, uniform_tol: float = 0.025,
         gauge: str = "auto"):
    k1 = velocity_of_nodes(nodes, params, uniform_tol=uniform_tol, gauge=gauge).v
    k2 = velocity_of_nodes(nodes + 0.5 * dt * k1, params, uniform_tol=uniform_tol, gauge=gauge).v
    k3 = velocity_of_nodes(nodes + 0.5 * dt * k2, params, uniform_tol=uniform_tol, gauge=gauge).v
    k4 = velocity_of_nodes(nodes + dt * k3, params, uniform_tol=uniform_tol, gauge=gauge).v
    new = nodes + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return new, float(np.max(np.hypot(k1[:, 0], k1[:, 1])))


def step(
    state: ContourState,
    params: GsqgParams,
    dt: float,
    cfl_factor: float = 0.25,
    check_simple: bool = True,
    uniform_tol: float = 0.025,
    gauge: str = "auto",
) -> ContourState:
    """One RK4 step of the contour under the boundary-integral velocity."""
    limit = cfl_limit(state, params, cfl_factor)
    if abs(dt) > limit * (1.0 + 1e-12):
        raise CflViolationError(
            f"|dt| = {abs(dt):.3e} exceeds the stability heuristic {limit:.3e}"
        )
    new_nodes, _ = _rk4(state.nodes, params, dt, uniform_tol=uniform_tol, gauge=gauge)
    t_new = state.time + dt
    try:
        contour = Contour(
            new_nodes, material=state.contour.material, check_simple=check_simple
        )
    except SelfIntersectionError as exc:
        raise SelfIntersectionError(
            f"contour self-intersects after step to t={t_new:.6g}", time=t_new
        ) from exc
    return frame(contour, time=t_new)


def simulate(initial: Contour, params: GsqgParams, config: SimConfig) -> Trajectory:
    """Run the evolution, resampling periodically and emitting snapshots.

    Per-step diagnostics: time, enclosed area, perimeter, curvature range,
    and max node speed.  Snapshots are taken at the step boundaries nearest
    the requested times (t = 0 and the final state always included).
    """
    state = frame(initial, 0.0)
    v0_field = contour_velocity(state, params, uniform_tol=config.uniform_tol, gauge=config.gauge)
    limit0 = cfl_limit(state, params, config.cfl_factor, field=v0_field)
    if config.dt > limit0 * (1.0 + 1e-12):
        raise CflViolationError(
            f"dt = {config.dt:.3e} violates the stability heuristic "
            f"{limit0:.3e} for the initial contour"
        )
    want = sorted(set(config.snapshot_times))
    snapshots = [state]
    diag = {k: [] for k in ("time", "area", "perimeter", "kappa_min", "kappa_max", "v_max")}

    def record(st, vmax):
        diag["time"].append(st.time)
        diag["area"].append(st.contour.area)
        diag["perimeter"].append(st.contour.perimeter)
        diag["kappa_min"].append(float(st.curvature.min()))
        diag["kappa_max"].append(float(st.curvature.max()))
        diag["v_max"].append(vmax)

    record(state, float(np.max(np.hypot(v0_field.v[:, 0], v0_field.v[:, 1]))))

    for k in range(1, config.n_steps + 1):
        t_next = k * config.dt
        try:
            new_nodes, vmax = _rk4(state.nodes, params, config.dt,
                                   uniform_tol=config.uniform_tol, gauge=config.gauge)
            contour = Contour(new_nodes, material=state.contour.material, check_simple=False)
        except SelfIntersectionError as exc:
            raise SelfIntersectionError(
                f"evolution aborted at t={t_next:.6g}: {exc}", time=t_next
            ) from exc
        state = frame(contour, time=t_next)
        if config.resample_every and k % config.resample_every == 0 and k < config.n_steps:
            state = frame(resample(state.contour, config.target_spacing), time=t_next)
            if config.dt > cfl_limit(state, params, config.cfl_factor) * (1.0 + 1e-12):
                raise CflViolationError(
                    f"dt violates the stability heuristic after resampling at t={t_next:.6g}"
                )
        record(state, vmax)
        is_snapshot = any(abs(t_next - tw) <= 0.5 * config.dt for tw in want)
        if is_snapshot or k == config.n_steps:
            # full simplicity check at emission points
            Contour(state.nodes, check_simple=True)
            snapshots.append(state)

    diagnostics = {k: np.asarray(v) for k, v in diag.items()}
    return Trajectory(snapshots=snapshots, diagnostics=diagnostics, params=params, config=config)


# ---------------------------------------------------------------------------
# curvature diagnostics


def _ds_nonuniform(values: np.ndarray, s: np.ndarray, total: float):
    """First and second arc-length derivatives on a periodic nonuniform grid."""
    vp = np.roll(values, -1, axis=0)
    vm = np.roll(values, 1, axis=0)
    sp = np.roll(s, -1)
    sm = np.roll(s, 1)
    hp = (sp - s) % total
    hm = (s - sm) % total
    hp = np.where(hp == 0.0, total, hp)
    hm = np.where(hm == 0.0, total, hm)
    if values.ndim == 2:
        hp_ = hp[:, None]
        hm_ = hm[:, None]
    else:
        hp_, hm_ = hp, hm
    denom = hp_ * hm_ * (hp_ + hm_)
    d1 = (vp * hm_**2 - vm * hp_**2 + values * (hp_**2 - hm_**2)) / denom
    d2 = 2.0 * (vp * hm_ + vm * hp_ - values * (hp_ + hm_)) / denom
    return d1, d2


def curvature_rate(state: ContourState, params: GsqgParams, noise_check: bool = True) -> np.ndarray:
    """Right-hand side of the curvature evolution equation at every node."""
    v = contour_velocity(state, params).v
    d1, d2 = _ds_nonuniform(v, state.arc_length, state.total_length)
    dsv_t = np.einsum("ij,ij->i", d1, state.tangent)
    ds2v_n = np.einsum("ij,ij->i", d2, state.normal)
    rate = -2.0 * state.curvature * dsv_t - ds2v_n
    if noise_check:
        kernel = np.ones(5) / 5.0
        smooth = np.convolve(np.concatenate([ds2v_n[-2:], ds2v_n, ds2v_n[:2]]), kernel, mode="valid")
        noise = float(np.median(np.abs(ds2v_n - smooth)))
        signal = float(np.median(np.abs(ds2v_n)))
        if signal > 0 and noise > 3.0 * signal:
            raise ResolutionTooCoarseError(
                f"second-derivative noise ({noise:.3e}) exceeds signal ({signal:.3e}); "
                "refine the contour"
            )
    return rate


def integrating_factor_check(trajectory: Trajectory, node_index: int) -> IntegratingFactorReport:
    """Residual of d/dt(exp(2 int ds_v.T) kappa) + exp(...) ds2_v.N = 0
    along one material node, by discrete time differencing of snapshots.

    Snapshots must have been taken without resampling so node indices are
    material labels.
    """
    states = trajectory.snapshots
    if len(states) < 3:
        raise InvalidParameterError("need at least 3 snapshots")
    params = trajectory.params
    times = np.array([st.time for st in states])
    dsvt = np.empty(len(states))
    ds2vn = np.empty(len(states))
    kappa = np.empty(len(states))
    for k, st in enumerate(states):
        v = contour_velocity(st, params).v
        d1, d2 = _ds_nonuniform(v, st.arc_length, st.total_length)
        dsvt[k] = d1[node_index] @ st.tangent[node_index]
        ds2vn[k] = d2[node_index] @ st.normal[node_index]
        kappa[k] = st.curvature[node_index]
    integ = np.concatenate(([0.0], np.cumsum(0.5 * (dsvt[1:] + dsvt[:-1]) * np.diff(times))))
    efac = np.exp(2.0 * integ)
    y = efac * kappa
    # forward differencing: the residual is first order in the snapshot gap
    resid = np.empty(len(states) - 1)
    for k in range(len(states) - 1):
        dydt = (y[k + 1] - y[k]) / (times[k + 1] - times[k])
        resid[k] = dydt + efac[k] * ds2vn[k]
    scale = float(np.max(np.abs(efac * ds2vn)))
    return IntegratingFactorReport(residual=float(np.max(np.abs(resid))), term_scale=scale)


# ---------------------------------------------------------------------------
# bending classifier


def _edge_masks(state: ContourState, spec: CornerSpec, ann: Annulus, band: float):
    mat = state.contour.material
    if mat is None:
        raise InvalidParameterError("contour carries no ancestor coordinates")
    theta_u = spec.wedge_angle
    u = np.array([math.cos(theta_u), math.sin(theta_u)])
    n_u = np.array([-math.sin(theta_u), math.cos(theta_u)])
    lower = (np.abs(mat[:, 1]) < band) & (mat[:, 0] > ann.inner_radius) & (mat[:, 0] < ann.outer_radius)
    proj = mat @ u
    off = mat @ n_u
    upper = (np.abs(off) < band) & (proj > ann.inner_radius) & (proj < ann.outer_radius)
    return lower, upper


def classify_bending(
    state: ContourState,
    spec: CornerSpec,
    params: GsqgParams,
    ann: Annulus,
    kappa_frac: float = 0.05,
    kappa_floor: float = None,
    band: float = None,
):
    """Curvature-sign verdicts on the two edges inside the annulus.

    Downward means the lower edge has turned convex (kappa above threshold)
    while the upper edge has turned concave (kappa below -threshold);
    upward is the reverse; anything mixed or below threshold is
    indeterminate.  The per-node threshold scales with the predicted
    bending rate c_a |F| t / a^(1+alpha) at the node's ancestor radius,
    with an absolute floor.
    """
    if kappa_floor is None:
        kappa_floor = 1e-3 / spec.delta
    if band is None:
        band = 1e-4 * spec.M
    t = state.time
    f_val = eval_F(params.alpha, spec.beta).f_value
    lower_mask, upper_mask = _edge_masks(state, spec, ann, band)
    mat = state.contour.material
    verdicts = []
    for edge, mask in (("lower", lower_mask), ("upper", upper_mask)):
        if not np.any(mask):
            verdicts.append(
                BendingVerdict(edge=edge, annulus=ann, min_kappa=math.nan,
                               max_kappa=math.nan, verdict="indeterminate", n_nodes=0)
            )
            continue
        if edge == "lower":
            radii = mat[mask, 0]
        else:
            theta_u = spec.wedge_angle
            radii = mat[mask] @ np.array([math.cos(theta_u), math.sin(theta_u)])
        thr = np.maximum(
            kappa_frac * params.c_alpha * abs(f_val) * t / radii ** (1.0 + params.alpha),
            kappa_floor,
        )
        kap = state.curvature[mask]
        if np.all(kap > thr):
            verdicts.append(BendingVerdict(edge, ann, float(kap.min()), float(kap.max()),
                                           "downward" if edge == "lower" else "upward",
                                           int(mask.sum())))
        elif np.all(kap < -thr):
            verdicts.append(BendingVerdict(edge, ann, float(kap.min()), float(kap.max()),
                                           "upward" if edge == "lower" else "downward",
                                           int(mask.sum())))
        else:
            verdicts.append(BendingVerdict(edge, ann, float(kap.min()), float(kap.max()),
                                           "indeterminate", int(mask.sum())))
    return tuple(verdicts)


def combined_verdict(verdict_pair) -> str:
    """Joint verdict: edges must agree (each reports its own bending map)."""
    lower, upper = verdict_pair
    if lower.verdict == upper.verdict and lower.verdict != "indeterminate":
        return lower.verdict
    return "indeterminate"


# ---------------------------------------------------------------------------
# convexity breaking (initially convex patch turning non-convex)


def convexity_breaking_run(
    spec: CornerSpec,
    params: GsqgParams,
    epsilon: float,
    config: SimConfig,
    tangency_a: float = None,
    kappa_threshold: float = None,
    contour: Contour = None,
    nodes_per_unit: float = None,
) -> ConvexityBreakingReport:
    """Build the strictly convex one-flat-point patch, evolve it, and report
    the first snapshot where the minimum curvature drops below threshold.

    The flat point is placed on whichever edge the bending criterion makes
    curvature decrease (lower for F < 0, upper for F > 0).  Passing an
    explicit ``contour`` (e.g. a circle) runs the same scan on it instead.
    """
    if kappa_threshold is None:
        kappa_threshold = 1e-3 / spec.delta
    if contour is None:
        f_val = eval_F(params.alpha, spec.beta).f_value
        if abs(f_val) < 1e-8:
            raise InvalidParameterError(
                "F vanishes; neither edge has a definite curvature trend"
            )
        edge = "lower" if f_val < 0 else "upper"
        if tangency_a is None:
            ann = make_annulus(params.alpha, spec.beta, spec.delta, spec.M)
            tangency_a = ann.mid_radius
        contour = build_convexified_patch(
            spec, epsilon, tangency_a, edge=edge, nodes_per_unit=nodes_per_unit
        )
    if config.resample_every and config.target_spacing:
        contour = resample(contour, config.target_spacing)
    min_k0 = float(frame(contour).curvature.min())
    traj = simulate(contour, params, config)
    mins = [(st.time, float(st.curvature.min()), st) for st in traj.snapshots]
    breaking = [(t, mk, st) for t, mk, st in mins if t > 0 and mk < -kappa_threshold]
    if breaking:
        t_b, mk, st = breaking[0]
        loc = st.nodes[int(np.argmin(st.curvature))]
        return ConvexityBreakingReport(
            breaking_observed=True,
            breaking_time=t_b,
            breaking_location=(float(loc[0]), float(loc[1])),
            min_kappa_initial=min_k0,
            kappa_threshold=kappa_threshold,
            snapshot_min_kappa=tuple((t, mk) for t, mk, _ in mins),
            epsilon=epsilon,
        )
    return ConvexityBreakingReport(
        breaking_observed=False,
        breaking_time=math.nan,
        breaking_location=(math.nan, math.nan),
        min_kappa_initial=min_k0,
        kappa_threshold=kappa_threshold,
        snapshot_min_kappa=tuple((t, mk) for t, mk, _ in mins),
        epsilon=epsilon,
    )
