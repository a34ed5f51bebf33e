"""Self-contained verification checks orchestrated by the CLI.

Each check returns a CheckResult; the quick level covers the analytic
identities, oracle decomposition, and circle steadiness in under a couple
of minutes, while the full level adds the asymptotic decay fits, the
steady-corner ladder, and the contour/oracle curvature cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic, geometry, velocity
from .analytic import GsqgParams
from .errors import NoRootError
from .geometry import CornerSpec

__all__ = ["CheckResult", "run_checks", "QUICK_CHECKS", "FULL_CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)


def _closed_forms(rng):
    worst = 0.0
    f01 = analytic.eval_F(0.0, 1.0).f_value
    f10 = analytic.eval_F(1.0, 0.0).f_value
    worst = max(abs(f01 - 0.5), abs(f10 + 1.0))
    for b in (0.0, 0.5, 1.0, 2.0, 4.0):
        worst = max(
            worst,
            abs(analytic.eval_F(1.0, b).f_value + 1.0 / math.sqrt(1.0 + b * b)),
        )
    return CheckResult(
        "analytic-closed-forms",
        worst < 1e-8,
        f"max deviation {worst:.2e} (tol 1e-8)",
        {"max_abs_error": worst},
    )


def _monotonicity_identity(rng):
    worst = 0.0
    for alpha in (0.0, 0.3, 0.7, 1.2):
        for beta in (0.1, 1.0, 3.0):
            h = 1e-5

            def g(b):
                return (b * b + 1.0) ** (1.0 - alpha / 2.0) * analytic.eval_F(
                    alpha, b, 1e-13
                ).f_value

            fd = (g(beta + h) - g(beta - h)) / (2.0 * h)
            worst = max(worst, abs(fd - analytic.scaled_F_derivative(alpha, beta)))
    return CheckResult(
        "monotonicity-identity",
        worst < 1e-6,
        f"max |finite difference - closed form| = {worst:.2e} (tol 1e-6)",
        {"max_abs_error": worst},
    )


def _beta_star_roots(rng):
    ok = True
    details = []
    for alpha in np.arange(0.1, 1.0, 0.1):
        bs = analytic.beta_star(float(alpha))
        lo = analytic.eval_F(float(alpha), bs - 0.01).f_value
        hi = analytic.eval_F(float(alpha), bs + 0.01).f_value
        if not (lo < 0.0 < hi):
            ok = False
            details.append(f"no sign change at alpha={alpha:.1f}")
    for alpha in (1.0, 1.5):
        try:
            analytic.beta_star(alpha)
            ok = False
            details.append(f"unexpected root at alpha={alpha}")
        except NoRootError:
            pass
        grid = np.arange(0.0, 30.0, 0.25)
        if any(analytic.eval_F(alpha, float(b)).f_value >= 0.0 for b in grid):
            ok = False
            details.append(f"F not negative everywhere at alpha={alpha}")
    return CheckResult(
        "beta-star-roots", ok, "; ".join(details) or "sign changes as predicted", {}
    )


def _quadrature_identity(rng):
    from scipy.integrate import quad

    worst = 0.0
    for alpha in (0.3, 1.0, 1.5):
        for _ in range(6):
            s, t = sorted(rng.uniform(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3, size=2))
            lhs1, _ = quad(lambda x: math.cos(2 * x) * math.cos(x) ** alpha, s, t, epsabs=1e-12)
            lhs2, _ = quad(lambda x: math.cos(x) ** alpha, s, t, epsabs=1e-12)
            lhs = (alpha + 2.0) * lhs1 - alpha * lhs2
            rhs = 2.0 * math.sin(t) * math.cos(t) ** (alpha + 1.0) - 2.0 * math.sin(
                s
            ) * math.cos(s) ** (alpha + 1.0)
            worst = max(worst, abs(lhs - rhs))
    return CheckResult(
        "cos-power-quadrature-identity",
        worst < 1e-8,
        f"max residual {worst:.2e} (tol 1e-8)",
        {"max_abs_error": worst},
    )


def _a3_closed_form(rng):
    worst = 0.0
    for alpha, beta, a in ((0.3, 1.0, 0.5), (1.0, 0.0, 1.0), (1.5, 2.7, 0.5)):
        a3, _ = velocity._wedge_A3(alpha, a, beta)
        expect = analytic.eval_F(alpha, beta).f_value / a ** (1.0 + alpha)
        worst = max(worst, abs(a3 - expect) / abs(expect))
    return CheckResult(
        "a3-vs-bending-criterion",
        worst < 1e-6,
        f"max relative deviation {worst:.2e} (tol 1e-6)",
        {"max_rel_error": worst},
    )


def _decomposition(rng):
    worst = 0.0
    spec = CornerSpec(beta=1.0, delta=1e-2, M=1.0)
    for alpha in (0.0, 0.5, 1.5):
        rep = velocity.area_velocity_v2(spec, GsqgParams(alpha), 0.25)
        direct = velocity.direct_v2(spec, GsqgParams(alpha), 0.25)
        worst = max(worst, abs(rep.v2 - direct) / abs(direct))
    return CheckResult(
        "oracle-recombination",
        worst < 1e-6,
        f"max |(A+B+C) - direct|/|direct| = {worst:.2e} (tol 1e-6)",
        {"max_rel_error": worst},
    )


def _a2_split(rng):
    worst = 0.0
    for alpha, beta in ((0.5, 1.0), (1.2, 0.5)):
        spec = CornerSpec(beta=beta, delta=1e-4, M=1.0)
        a2, _ = velocity._wedge_A2_direct(spec, alpha, 0.25)
        a3, _ = velocity._wedge_A3(alpha, 0.25, beta)
        a4, _ = velocity._wedge_A4(spec, alpha, 0.25)
        worst = max(worst, abs(a2 - (a3 - a4)) / max(abs(a2), 1e-30))
    return CheckResult(
        "a2-equals-a3-minus-a4",
        worst < 1e-7,
        f"max relative deviation {worst:.2e} (tol 1e-7)",
        {"max_rel_error": worst},
    )


def _sign_theorem(rng):
    ok = True
    details = []
    for alpha, beta in ((0.0, 1.0), (0.3, 0.0), (0.3, 2.7), (1.0, 0.0), (1.5, 1.0)):
        spec = CornerSpec(beta=beta, delta=1e-3, M=1.0)
        f_val = analytic.eval_F(alpha, beta).f_value
        ann = analytic.annulus(alpha, beta, spec.delta, spec.M)
        a = min(max(ann.mid_radius, 2 * spec.delta), spec.M / 2)
        rep = velocity.oracle_d2_v2(spec, GsqgParams(alpha), a)
        if math.copysign(1.0, rep.d2_v2) != math.copysign(1.0, f_val):
            ok = False
            details.append(f"(alpha={alpha}, beta={beta}): d2={rep.d2_v2:.3g} vs F={f_val:.3g}")
    return CheckResult(
        "bending-sign-theorem", ok, "; ".join(details) or "signs agree on all five pairs", {}
    )


def _circle_steadiness(rng):
    t = np.arange(128) * 2.0 * math.pi / 128
    circ = geometry.frame(geometry.Contour(np.column_stack([np.cos(t), np.sin(t)])))
    worst = 0.0
    for alpha in (0.0, 0.5, 1.0, 1.5):
        # measure against the full (tangential-bearing) field so the ratio
        # compares the normal leak with the physical velocity scale
        gauge = "auto" if alpha == 0.0 else "lambda"
        f = velocity.contour_velocity(circ, GsqgParams(alpha), gauge=gauge)
        ratio = np.abs(f.normal_component(circ)).max() / np.abs(f.v).max()
        worst = max(worst, float(ratio))
    return CheckResult(
        "circle-steadiness",
        worst < 1e-3,
        f"max |v.N|/max|v| = {worst:.2e} (tol 1e-3)",
        {"max_ratio": worst},
    )


def _wedge_membership(rng):
    spec = CornerSpec(beta=1.0, delta=0.01, M=1.0)
    contour = geometry.build_corner_patch(spec, nodes_per_unit=800)
    pts = rng.uniform(-spec.M, spec.M, size=(10_000, 2))
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > spec.delta]
    inside = geometry.points_in_polygon(pts, contour.nodes)
    wedge = (pts[:, 0] > 0) & (pts[:, 1] > 0) & (spec.beta * pts[:, 1] < pts[:, 0])
    mismatched = pts[inside != wedge]
    if len(mismatched):
        d = np.min(
            np.linalg.norm(mismatched[:, None, :] - contour.nodes[None, :, :], axis=2), axis=1
        )
        seg = np.linalg.norm(np.roll(contour.nodes, -1, axis=0) - contour.nodes, axis=1)
        ok = bool(np.all(d < 2.0 * seg.max()))
        detail = f"{len(mismatched)} mismatches, all within 2 spacings: {ok}"
    else:
        ok = True
        detail = "no mismatches among the probes"
    return CheckResult("wedge-set-identity", ok, detail, {"n_mismatch": len(mismatched)})


# ---- full-level checks -----------------------------------------------------


def _decay_fit_M(rng):
    alpha, beta, a = 0.5, 1.0, 0.1
    pred = analytic.eval_F(alpha, beta).f_value / a ** (1.0 + alpha)
    res = []
    for M in (1.0, 2.0, 4.0):
        spec = CornerSpec(beta=beta, delta=1e-5, M=M)
        rep = velocity.oracle_d2_v2(spec, GsqgParams(alpha), a)
        res.append(abs(rep.d2_v2 - pred))
    slope = -float(np.polyfit(np.log([1, 2, 4]), np.log(res), 1)[0])
    fitted_c = res[0]
    ok = abs(slope - (1.0 + alpha)) < 0.3
    return CheckResult(
        "eq24-M-decay",
        ok,
        f"fitted exponent {slope:.3f} vs {1 + alpha} (tol 0.3); fitted constant {fitted_c:.3g}",
        {"exponent": slope, "fitted_constant": fitted_c},
    )


def _decay_fit_delta(rng):
    alpha, beta, a, M = 0.5, 1.0, 0.1, 4.0
    pred = analytic.eval_F(alpha, beta).f_value / a ** (1.0 + alpha)

    def signed_resid(d):
        spec = CornerSpec(beta=beta, delta=d, M=M)
        return velocity.oracle_d2_v2(spec, GsqgParams(alpha), a).d2_v2 - pred

    deltas = [1e-2, 5e-3, 2.5e-3]
    ref = signed_resid(2.5e-3 / 8.0)
    diffs = [abs(signed_resid(d) - ref) for d in deltas]
    slope = float(np.polyfit(np.log(deltas), np.log(diffs), 1)[0])
    fitted_c = diffs[0] / deltas[0] ** 2
    ok = abs(slope - 2.0) < 0.3
    return CheckResult(
        "eq24-delta-decay",
        ok,
        f"fitted exponent {slope:.3f} vs 2 (tol 0.3); fitted constant {fitted_c:.3g}",
        {"exponent": slope, "fitted_constant": fitted_c},
    )


def _steady_corner_ladder(rng):
    bs = analytic.beta_star(0.5)
    vals = []
    M, d = 2.0, 1e-2
    while M <= 256.0:
        spec = CornerSpec(beta=bs, delta=d, M=M)
        vals.append(abs(velocity.oracle_d1_v(spec, GsqgParams(0.5), 1.0)))
        M *= 2.0
        d /= 2.0
    monotone = all(b < a for a, b in zip(vals, vals[1:]))
    ratio = vals[-1] / vals[0]
    ok = monotone and ratio < 0.1
    return CheckResult(
        "steady-corner-ladder",
        ok,
        f"monotone={monotone}, final/first={ratio:.3f} (tol < 0.1)",
        {"ratio": ratio, "values": [float(v) for v in vals]},
    )


def _curvature_rate_cross_check(rng):
    from . import dynamics

    spec = CornerSpec(beta=1.0, delta=0.01, M=1.0)
    geo = geometry.corner_geometry(spec)
    contour = geometry.build_corner_patch(
        spec, nodes_per_unit=1600, far_spacing=geo.R_far / 512, lower_edge_nodes_at=(0.25,)
    )
    state = geometry.frame(contour)
    params = GsqgParams(0.5)
    rate = dynamics.curvature_rate(state, params, noise_check=False)
    i = int(np.argmin(np.hypot(contour.nodes[:, 0] - 0.25, contour.nodes[:, 1])))
    rep = velocity.oracle_d2_v2(spec, params, 0.25)
    rel = abs(rate[i] - rep.d2_v2) / abs(rep.d2_v2)
    return CheckResult(
        "curvature-rate-vs-oracle",
        rel < 0.10,
        f"relative deviation {rel:.2%} at (0.25, 0) (tol 10%)",
        {"rel_error": float(rel)},
    )


QUICK_CHECKS = [
    _closed_forms,
    _monotonicity_identity,
    _beta_star_roots,
    _quadrature_identity,
    _a3_closed_form,
    _decomposition,
    _a2_split,
    _sign_theorem,
    _circle_steadiness,
    _wedge_membership,
]

FULL_CHECKS = QUICK_CHECKS + [
    _decay_fit_M,
    _decay_fit_delta,
    _steady_corner_ladder,
    _curvature_rate_cross_check,
]


def run_checks(level: str = "quick", seed: int = 0):
    """Run the named check suite; returns a list of CheckResult."""
    rng = np.random.default_rng(seed)
    suite = QUICK_CHECKS if level == "quick" else FULL_CHECKS
    return [chk(rng) for chk in suite]
