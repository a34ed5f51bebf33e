"""Patch-boundary construction and discrete differential geometry.

A corner-like patch occupies the planar wedge ``{beta*x2 < x1} ∩ (0,inf)^2``
between an inner smoothing scale ``delta`` and an outer scale ``M``:  inside
the square ``[-M, M]^2`` and outside radius ``delta`` the boundary lies
exactly on the two rays (the lower edge on ``{x2 = 0}`` and the upper edge
on ``{x1 = beta*x2}``).  The corner is rounded by the circular fillet
tangent to both rays with tangency feet at distance ``delta`` from the
origin, the edges extend along the rays past the square, and the far
closure is a circular arc joined tangentially through two vertex fillets,
so the discrete boundary is C^1 everywhere and the patch is convex.

Orientation is counterclockwise throughout: signed (shoelace) area is
positive, the outward normal is ``N = -T_perp``, and the signed curvature
``kappa = -dT/ds . N`` is ``+1/R`` on a counterclockwise circle, so
convexity is exactly ``kappa >= 0`` at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    DegenerateNodesError,
    InfeasibleAreaError,
    InfeasibleEpsilonError,
    InvalidParameterError,
    ResolutionTooCoarseError,
    SelfIntersectionError,
)

__all__ = [
    "CornerSpec",
    "Contour",
    "ContourState",
    "CornerGeometry",
    "build_corner_patch",
    "build_convexified_patch",
    "frame",
    "resample",
    "signed_area",
    "perimeter",
    "points_in_polygon",
]


# ---------------------------------------------------------------------------
# basic polygon helpers


def signed_area(nodes: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise orientation."""
    x, y = nodes[:, 0], nodes[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def perimeter(nodes: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)))


def points_in_polygon(points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Even-odd ray-casting membership test, vectorized over ``points``."""
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    x0, y0 = nodes[:, 0][None, :], nodes[:, 1][None, :]
    x1 = np.roll(nodes[:, 0], -1)[None, :]
    y1 = np.roll(nodes[:, 1], -1)[None, :]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (px < xcross)
    return np.sum(hits, axis=1) % 2 == 1


def _segments_cross(nodes: np.ndarray, chunk: int = 192) -> bool:
    """Proper-crossing test over all non-adjacent segment pairs (chunked)."""
    n = len(nodes)
    a = nodes
    b = np.roll(nodes, -1, axis=0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    idx = np.arange(n)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        ii = idx[sl][:, None]
        jj = idx[None, :]
        gap = np.abs(ii - jj)
        adjacent = (gap <= 1) | (gap >= n - 1)
        boxes = (
            (lo[sl, 0][:, None] <= hi[None, :, 0])
            & (lo[None, :, 0] <= hi[sl, 0][:, None])
            & (lo[sl, 1][:, None] <= hi[None, :, 1])
            & (lo[None, :, 1] <= hi[sl, 1][:, None])
        )
        cand = boxes & ~adjacent & (jj > ii)
        if not cand.any():
            continue
        ci, cj = np.nonzero(cand)
        ci = ci + start
        p1, p2 = a[ci], b[ci]
        q1, q2 = a[cj], b[cj]

        def cross(u, v):
            return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

        d1 = cross(q2 - q1, p1 - q1)
        d2 = cross(q2 - q1, p2 - q1)
        d3 = cross(p2 - p1, q1 - p1)
        d4 = cross(p2 - p1, q2 - p1)
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class CornerSpec:
    """Corner geometry: edge slope, smoothing scale, outer scale, area."""

    beta: float
    delta: float
    M: float
    target_area: float = None  # defaults to 2*M^2

    def __post_init__(self):
        if self.target_area is None:
            object.__setattr__(self, "target_area", 2.0 * self.M**2)
        if self.beta < 0.0:
            raise InvalidParameterError(f"beta must be nonnegative, got {self.beta}")
        if not (self.delta > 0.0 and self.M > 0.0):
            raise InvalidParameterError("delta and M must be positive")
        if self.delta > self.M / 100.0:
            raise InvalidParameterError(
                f"delta must not exceed M/100 (delta={self.delta}, M={self.M})"
            )
        if not (0.0 < self.target_area <= 100.0 * self.M**2):
            raise InvalidParameterError(
                f"target_area must lie in (0, 100*M^2], got {self.target_area}"
            )

    @property
    def wedge_angle(self) -> float:
        """Opening angle of the wedge: arctan(1/beta), pi/2 at beta = 0."""
        return math.atan2(1.0, self.beta)


@dataclass(frozen=True)
class Contour:
    """Closed simple counterclockwise polyline.

    ``material`` carries each node's ancestor position on the initial
    boundary (equal to ``nodes`` at construction time); it survives
    resampling by interpolation so edge membership can be recovered after
    the curve has deformed.
    """

    nodes: np.ndarray
    material: np.ndarray = None
    check_simple: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise InvalidParameterError("nodes must be an (N, 2) array")
        if len(nodes) < 16:
            raise InvalidParameterError(f"need at least 16 nodes, got {len(nodes)}")
        gaps = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        scale = float(np.max(np.abs(nodes))) or 1.0
        if np.any(gaps < 1e-14 * scale):
            raise DegenerateNodesError("consecutive nodes coincide")
        if signed_area(nodes) <= 0.0:
            raise InvalidParameterError("contour must be counterclockwise (area > 0)")
        if self.check_simple and _segments_cross(nodes):
            raise SelfIntersectionError("contour is not simple")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        if self.material is not None:
            mat = np.ascontiguousarray(np.asarray(self.material, dtype=float))
            if mat.shape != nodes.shape:
                raise InvalidParameterError("material must match nodes shape")
            mat.flags.writeable = False
            object.__setattr__(self, "material", mat)

    def __len__(self):
        return len(self.nodes)

    @property
    def area(self) -> float:
        return signed_area(self.nodes)

    @property
    def perimeter(self) -> float:
        return perimeter(self.nodes)


@dataclass(frozen=True)
class ContourState:
    """Contour plus derived frame quantities at a time instant."""

    contour: Contour
    time: float
    arc_length: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return self.contour.nodes

    @property
    def total_length(self) -> float:
        return self.contour.perimeter


def frame(contour: Contour, time: float = 0.0) -> ContourState:
    """Arc length, unit tangent/outward normal, and signed curvature.

    Curvature is the circumscribed-circle (Menger) value through three
    consecutive nodes, signed by the cross product of successive chords;
    a counterclockwise circle of radius R gets kappa = +1/R.
    """
    nodes = contour.nodes
    fwd = np.roll(nodes, -1, axis=0) - nodes
    seg = np.linalg.norm(fwd, axis=1)
    if np.any(seg == 0.0):
        raise DegenerateNodesError("consecutive nodes coincide")
    s = np.concatenate(([0.0], np.cumsum(seg[:-1])))

    chord = np.roll(nodes, -1, axis=0) - np.roll(nodes, 1, axis=0)
    tangent = chord / np.linalg.norm(chord, axis=1)[:, None]
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])

    back = nodes - np.roll(nodes, 1, axis=0)
    lb = np.linalg.norm(back, axis=1)
    lf = seg
    crossp = back[:, 0] * fwd[:, 1] - back[:, 1] * fwd[:, 0]
    lc = np.linalg.norm(chord, axis=1)
    curvature = 2.0 * crossp / (lb * lf * lc)
    return ContourState(
        contour=contour,
        time=float(time),
        arc_length=s,
        tangent=tangent,
        normal=normal,
        curvature=curvature,
    )


def tangent_curvature(state: ContourState) -> np.ndarray:
    """Direct discretization kappa = -dT/ds . N via centered differences.

    Unlike the circumscribed-circle value (exact on any circle), this
    carries a genuine O(h^2) truncation error everywhere, which makes it
    the right probe for convergence-order studies.
    """
    t_next = np.roll(state.tangent, -1, axis=0)
    t_prev = np.roll(state.tangent, 1, axis=0)
    s = state.arc_length
    total = state.total_length
    ds = (np.roll(s, -1) - np.roll(s, 1)) % total
    ds = np.where(ds == 0.0, total, ds)
    dT = (t_next - t_prev) / ds[:, None]
    return -np.einsum("ij,ij->i", dT, state.normal)


def resample(contour: Contour, target_spacing: float, check_simple: bool = True) -> Contour:
    """Redistribute nodes at uniform arc length via periodic cubic splines."""
    if not target_spacing > 0.0:
        raise InvalidParameterError("target_spacing must be positive")
    nodes = contour.nodes
    length = perimeter(nodes)
    if target_spacing > length / 16.0:
        raise ResolutionTooCoarseError(
            f"spacing {target_spacing:.4g} too coarse for perimeter {length:.4g}"
        )
    seg = np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg)))
    closed = np.vstack([nodes, nodes[:1]])
    spline = CubicSpline(s, closed, bc_type="periodic")
    n_new = max(16, int(round(length / target_spacing)))
    s_new = np.arange(n_new) * (length / n_new)
    new_nodes = spline(s_new)
    new_material = None
    if contour.material is not None:
        mat_closed = np.vstack([contour.material, contour.material[:1]])
        # Ancestor coordinates are smooth along the curve except at the seam,
        # where strict periodicity may fail; natural bc is accurate enough.
        mat_spline = CubicSpline(s, mat_closed, bc_type="natural")
        new_material = mat_spline(s_new)
    return Contour(new_nodes, material=new_material, check_simple=check_simple)


# ---------------------------------------------------------------------------
# exact corner-patch geometry


def _ray_exit_radius(beta: float, M: float) -> float:
    """Largest origin-distance at which the wedge boundary meets [-M, M]^2."""
    theta_u = math.atan2(1.0, beta)
    # lower edge exits at (M, 0); upper ray exits through x=M or y=M.
    upper = M * math.sqrt(beta * beta + 1.0) / max(beta, 1.0)
    return max(M, upper, M / max(math.cos(theta_u), math.sin(theta_u)))


@dataclass(frozen=True)
class CornerGeometry:
    """Exact piecewise description of the corner-patch boundary.

    Segments in counterclockwise order, starting at the lower fillet foot
    (delta, 0):  lower edge, lower vertex fillet, far arc, upper vertex
    fillet, upper edge, origin fillet.
    """

    spec: CornerSpec
    theta_u: float
    theta_b: float
    r_fillet: float
    fillet_center: np.ndarray
    R_far: float
    r_vertex: float
    x_tangent: float
    psi1: float
    seg_lengths: np.ndarray
    area: float

    @property
    def upper_unit(self) -> np.ndarray:
        return np.array([math.cos(self.theta_u), math.sin(self.theta_u)])

    @property
    def seg_breaks(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.seg_lengths)))

    @property
    def total_length(self) -> float:
        return float(np.sum(self.seg_lengths))

    @property
    def junction_points(self) -> np.ndarray:
        """The six arc-junction vertices, in traversal order from (delta, 0)."""
        u = self.upper_unit
        cv1 = np.array([self.x_tangent, self.r_vertex])
        p1 = cv1 * self.R_far / (self.R_far - self.r_vertex)
        refl = np.array(
            [
                [math.cos(2 * self.theta_b), math.sin(2 * self.theta_b)],
                [math.sin(2 * self.theta_b), -math.cos(2 * self.theta_b)],
            ]
        )
        p2 = refl @ p1
        return np.array(
            [
                [self.x_tangent, 0.0],
                p1,
                p2,
                self.x_tangent * u,
                self.spec.delta * u,
                [self.spec.delta, 0.0],
            ]
        )

    # -- radial description about the origin (the patch is convex and the
    #    origin fillet / far pieces are single-valued in the wedge angle) --

    def r_inner(self, theta):
        """Origin-distance of the fillet arc along direction theta."""
        theta = np.asarray(theta, dtype=float)
        rho = self.spec.delta / math.cos(self.theta_b)
        proj = rho * np.cos(theta - self.theta_b)
        return proj - np.sqrt(np.maximum(proj**2 - self.spec.delta**2, 0.0))

    def r_outer(self, theta):
        """Origin-distance of the outer boundary along direction theta."""
        theta = np.asarray(theta, dtype=float)
        th = np.where(theta > self.theta_b, self.theta_u - theta, theta)
        r = np.full_like(th, self.R_far)
        in_vertex = th < self.psi1
        if np.any(in_vertex):
            cv = np.array([self.x_tangent, self.r_vertex])
            e = np.stack([np.cos(th[in_vertex]), np.sin(th[in_vertex])], axis=-1)
            proj = e @ cv
            r[in_vertex] = proj + np.sqrt(
                np.maximum(proj**2 - self.x_tangent**2, 0.0)
            )
        return r

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        r = np.hypot(pts[:, 0], pts[:, 1])
        inside_angle = (theta > 0.0) & (theta < self.theta_u)
        out = np.zeros(len(pts), dtype=bool)
        if np.any(inside_angle):
            th = theta[inside_angle]
            out[inside_angle] = (r[inside_angle] > self.r_inner(th)) & (
                r[inside_angle] < self.r_outer(th)
            )
        return out


def _arc_area_term(center, r, ang0, ang1):
    """Green's-theorem contribution of a CCW circular arc to the area."""
    e0 = np.array([math.cos(ang0), math.sin(ang0)])
    e1 = np.array([math.cos(ang1), math.sin(ang1)])
    d = e1 - e0
    return 0.5 * (r * (center[0] * d[1] - center[1] * d[0]) + r * r * (ang1 - ang0))


def _segment_area_term(p, q):
    return 0.5 * (p[0] * q[1] - p[1] * q[0])


def _corner_geometry(spec: CornerSpec, R_far: float, vertex_frac: float) -> CornerGeometry:
    theta_u = spec.wedge_angle
    theta_b = 0.5 * theta_u
    r_f = spec.delta * math.tan(theta_b)
    q_f = (spec.delta / math.cos(theta_b)) * np.array(
        [math.cos(theta_b), math.sin(theta_b)]
    )
    r_v = vertex_frac * R_far
    x_c = math.sqrt(R_far**2 - 2.0 * R_far * r_v)
    psi1 = math.atan2(r_v, x_c)

    lengths = np.array(
        [
            x_c - spec.delta,                      # lower edge
            r_v * (psi1 + math.pi / 2.0),          # lower vertex fillet
            R_far * (theta_u - 2.0 * psi1),        # far arc
            r_v * (psi1 + math.pi / 2.0),          # upper vertex fillet
            x_c - spec.delta,                      # upper edge
            r_f * (math.pi - theta_u),             # origin fillet
        ]
    )

    # exact enclosed area via piecewise Green's theorem
    u = np.array([math.cos(theta_u), math.sin(theta_u)])
    cv1 = np.array([x_c, r_v])
    refl = np.array(
        [
            [math.cos(2 * theta_b), math.sin(2 * theta_b)],
            [math.sin(2 * theta_b), -math.cos(2 * theta_b)],
        ]
    )
    cv2 = refl @ cv1
    phi1 = math.atan2(r_v, x_c)  # angle of tangency point about cv1
    area = 0.0
    area += _segment_area_term(np.array([spec.delta, 0.0]), np.array([x_c, 0.0]))
    area += _arc_area_term(cv1, r_v, -math.pi / 2.0, phi1)
    area += _arc_area_term(np.zeros(2), R_far, psi1, theta_u - psi1)
    area += _arc_area_term(cv2, r_v, 2 * theta_b - phi1, 2 * theta_b + math.pi / 2.0)
    area += _segment_area_term(x_c * u, spec.delta * u)
    area += _arc_area_term(q_f, r_f, theta_u + math.pi / 2.0, 3.0 * math.pi / 2.0)

    return CornerGeometry(
        spec=spec,
        theta_u=theta_u,
        theta_b=theta_b,
        r_fillet=r_f,
        fillet_center=q_f,
        R_far=R_far,
        r_vertex=r_v,
        x_tangent=x_c,
        psi1=psi1,
        seg_lengths=lengths,
        area=area,
    )


def corner_geometry(spec: CornerSpec, vertex_frac: float = None) -> CornerGeometry:
    """Solve for the far radius that hits the target area exactly."""
    theta_u = spec.wedge_angle
    if vertex_frac is None:
        vertex_frac = min(0.10, 0.18 * math.sin(theta_u / 2.0))
    r_exit = _ray_exit_radius(spec.beta, spec.M)
    R_min = 1.03 * r_exit / math.sqrt(1.0 - 2.0 * vertex_frac)

    def area_of(R):
        return _corner_geometry(spec, R, vertex_frac).area

    if area_of(R_min) > spec.target_area:
        raise InfeasibleAreaError(
            f"target_area {spec.target_area:.4g} below the minimum "
            f"{area_of(R_min):.4g} required to cover the wedge inside the square"
        )
    R_hi = max(2.0 * R_min, 2.0 * math.sqrt(2.0 * spec.target_area / theta_u))
    while area_of(R_hi) < spec.target_area:
        R_hi *= 2.0
        if R_hi > 1e6 * spec.M:
            raise InfeasibleAreaError("no far radius reaches the target area")
    R = brentq(lambda r: area_of(r) - spec.target_area, R_min, R_hi, xtol=1e-12 * spec.M)
    geo = _corner_geometry(spec, R, vertex_frac)
    if geo.theta_u - 2.0 * geo.psi1 <= 0.05 * geo.theta_u:
        raise InfeasibleAreaError("vertex fillets collide; reduce vertex_frac")
    return geo


# ---------------------------------------------------------------------------
# node sampling along the exact boundary


def _sample_positions(length: float, spacing_of, h_floor: float) -> np.ndarray:
    """Node arc positions in [0, length) following a target spacing field.

    Integrates the density 1/h on a fine grid and places nodes at equal
    density increments, so local spacing tracks ``spacing_of(s)``.
    """
    m = max(64, int(8 * length / max(h_floor, 1e-12)))
    m = min(m, 4_000_000)
    grid = np.linspace(0.0, length, m + 1)
    dens = 1.0 / np.maximum(spacing_of(grid), 1e-15)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))))
    total = cum[-1]
    n = max(1, int(math.ceil(total)))
    targets = np.arange(n) * (total / n)
    return np.interp(targets, cum, grid)


def _junction_spacing(base, s, s_junction, h_junction, ramp=0.5):
    out = np.asarray(base, dtype=float).copy()
    for sj, hj in zip(s_junction, h_junction):
        out = np.minimum(out, hj + ramp * np.abs(np.asarray(s) - sj))
    return out


def build_corner_patch(
    spec: CornerSpec,
    nodes_per_unit: float,
    far_spacing: float = None,
    junction_refine: bool = True,
    lower_edge_nodes_at: tuple = (),
    vertex_frac: float = None,
) -> Contour:
    """Discretize the corner patch with grading finest near the fillet.

    ``nodes_per_unit`` sets the node density at the smoothing scale
    (spacing ``1/nodes_per_unit`` near the origin fillet); spacing grows
    linearly with origin distance and caps at ``far_spacing``.  With
    ``junction_refine`` the mesh is additionally squeezed at the six arc
    junctions so the discrete tangent turn per node stays below 1e-3 rad
    there.  ``lower_edge_nodes_at`` forces exact nodes at the given
    abscissas on the lower edge (probe anchors for cross-validation).
    """
    if nodes_per_unit * spec.delta < 8.0:
        raise ResolutionTooCoarseError(
            f"nodes_per_unit*delta = {nodes_per_unit * spec.delta:.3g} < 8; "
            "the fillet would be unresolved"
        )
    geo = corner_geometry(spec, vertex_frac=vertex_frac)
    if far_spacing is None:
        far_spacing = geo.R_far / 256.0
    h0 = 1.0 / nodes_per_unit
    delta = spec.delta

    kappa = {
        "edge": 0.0,
        "vertex": 1.0 / geo.r_vertex,
        "far": 1.0 / geo.R_far,
        "fillet": 1.0 / geo.r_fillet,
    }

    def junction_h(k1, k2):
        km = max(k1, k2)
        return 2.5e-4 / km if (junction_refine and km > 0) else far_spacing

    L1, L2, L3, L4, L5, L6 = geo.seg_lengths
    u = geo.upper_unit

    # --- lower edge: graded in origin distance, plus junction squeezes
    def h_edge_lower(s):
        r = delta + s
        base = np.minimum(far_spacing, np.maximum(h0, (h0 / delta) * r))
        return _junction_spacing(
            base,
            s,
            [0.0, L1],
            [junction_h(kappa["edge"], kappa["fillet"]), junction_h(kappa["edge"], kappa["vertex"])],
        )

    s1 = _sample_positions(L1, h_edge_lower, h0 if not junction_refine else junction_h(0, kappa["fillet"]))
    if lower_edge_nodes_at:
        want = np.array(sorted(lower_edge_nodes_at), dtype=float) - delta
        if np.any((want <= 0) | (want >= L1)):
            raise InvalidParameterError("requested lower-edge nodes outside the edge")
        for w in want:
            s1[np.argmin(np.abs(s1 - w))] = w
        s1 = np.unique(s1)
    lower_nodes = np.column_stack([delta + s1, np.zeros_like(s1)])

    # --- lower vertex fillet
    cv1 = np.array([geo.x_tangent, geo.r_vertex])
    phi1 = math.atan2(geo.r_vertex, geo.x_tangent)

    def h_vert(s):
        base = np.full_like(np.asarray(s, dtype=float), min(far_spacing, L2 / 10.0))
        hj = junction_h(kappa["vertex"], kappa["far"])
        hj0 = junction_h(kappa["vertex"], kappa["edge"])
        return _junction_spacing(base, s, [0.0, L2], [hj0, hj])

    s2 = _sample_positions(L2, h_vert, junction_h(kappa["vertex"], 0) if junction_refine else far_spacing)
    ang2 = -math.pi / 2.0 + s2 / geo.r_vertex
    vert1_nodes = cv1[None, :] + geo.r_vertex * np.column_stack([np.cos(ang2), np.sin(ang2)])

    # --- far arc
    def h_far(s):
        base = np.full_like(np.asarray(s, dtype=float), min(far_spacing, L3 / 16.0))
        hj = junction_h(kappa["far"], kappa["vertex"])
        return _junction_spacing(base, s, [0.0, L3], [hj, hj])

    s3 = _sample_positions(L3, h_far, junction_h(kappa["far"], kappa["vertex"]) if junction_refine else far_spacing)
    ang3 = geo.psi1 + s3 / geo.R_far
    far_nodes = geo.R_far * np.column_stack([np.cos(ang3), np.sin(ang3)])

    # --- upper vertex fillet (mirror of the lower one, reversed)
    refl = np.array(
        [
            [math.cos(2 * geo.theta_b), math.sin(2 * geo.theta_b)],
            [math.sin(2 * geo.theta_b), -math.cos(2 * geo.theta_b)],
        ]
    )
    s4 = _sample_positions(L4, h_vert, junction_h(kappa["vertex"], 0) if junction_refine else far_spacing)
    ang4 = -math.pi / 2.0 + (L4 - s4) / geo.r_vertex
    vert2_src = cv1[None, :] + geo.r_vertex * np.column_stack([np.cos(ang4), np.sin(ang4)])
    vert2_nodes = vert2_src @ refl.T

    # --- upper edge: mirror of the lower grading, traversed inward
    def h_edge_upper(s):
        return h_edge_lower(L5 - np.asarray(s, dtype=float))

    s5 = _sample_positions(L5, h_edge_upper, h0 if not junction_refine else junction_h(0, kappa["fillet"]))
    r5 = delta + (L5 - s5)
    upper_nodes = r5[:, None] * u[None, :]

    # --- origin fillet, from delta*u back to (delta, 0)
    def h_fil(s):
        base = np.full_like(np.asarray(s, dtype=float), min(h0, L6 / 10.0))
        hj = junction_h(kappa["fillet"], kappa["edge"])
        return _junction_spacing(base, s, [0.0, L6], [hj, hj])

    s6 = _sample_positions(L6, h_fil, junction_h(kappa["fillet"], 0) if junction_refine else h0)
    ang6 = geo.theta_u + math.pi / 2.0 + s6 / geo.r_fillet
    fil_nodes = geo.fillet_center[None, :] + geo.r_fillet * np.column_stack(
        [np.cos(ang6), np.sin(ang6)]
    )

    nodes = np.vstack([lower_nodes, vert1_nodes, far_nodes, vert2_nodes, upper_nodes, fil_nodes])
    return Contour(nodes, material=nodes.copy())


# ---------------------------------------------------------------------------
# convexified patch (strictly convex, one flat point, epsilon-close)


def _periodic_gaussian_smooth(values: np.ndarray, sigma: float, dx: float) -> np.ndarray:
    n = len(values)
    freqs = np.fft.rfftfreq(n, d=dx) * 2.0 * math.pi
    return np.fft.irfft(np.fft.rfft(values) * np.exp(-0.5 * (sigma * freqs) ** 2), n=n)


def _radial_profile(nodes: np.ndarray, anchor: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """Ray lengths from an interior anchor to a convex polygon boundary."""
    p = nodes - anchor[None, :]
    q = np.roll(nodes, -1, axis=0) - anchor[None, :]
    d = np.column_stack([np.cos(phis), np.sin(phis)])
    out = np.full(len(phis), np.nan)
    edge_v = q - p
    for start in range(0, len(phis), 256):
        sl = slice(start, min(start + 256, len(phis)))
        dd = d[sl]
        denom = dd[:, None, 0] * (-edge_v[None, :, 1]) - dd[:, None, 1] * (-edge_v[None, :, 0])
        rhs0 = p[None, :, 0]
        rhs1 = p[None, :, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rhs0 * (-edge_v[None, :, 1]) - rhs1 * (-edge_v[None, :, 0])) / denom
            s = (dd[:, None, 0] * rhs1 - dd[:, None, 1] * rhs0) / denom
        valid = (s >= -1e-12) & (s <= 1.0 + 1e-12) & (t > 0)
        t = np.where(valid, t, np.inf)
        out[sl] = t.min(axis=1)
    return out


def symmetric_difference_area(nodes_a: np.ndarray, nodes_b: np.ndarray, n_phi: int = 8192) -> float:
    """Area of the symmetric difference of two convex star-shaped polygons.

    Uses radial profiles about a common interior anchor:
    0.5 * integral of |R_a^2 - R_b^2| d(phi).
    """
    anchor = nodes_a.mean(axis=0)
    phis = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    ra = _radial_profile(nodes_a, anchor, phis)
    rb = _radial_profile(nodes_b, anchor, phis)
    return 0.5 * float(np.sum(np.abs(ra**2 - rb**2))) * (2.0 * math.pi / n_phi)


def build_convexified_patch(
    spec: CornerSpec,
    epsilon: float,
    tangency_a: float,
    edge: str = "lower",
    nodes_per_unit: float = None,
    far_spacing: float = None,
    return_corner: bool = False,
):
    """Strictly convex smooth patch, epsilon-close to the corner patch,
    with curvature vanishing at exactly one node.

    The corner patch's piecewise-constant curvature profile is mollified,
    scaled, and augmented with a single-zero positive bump
    ``sin^2(pi (s - s_a)/L)`` so kappa > 0 everywhere except at the node
    tangent to the chosen edge at abscissa ``tangency_a``; three localized
    corrections on the far arc restore exact closure (Newton).  The bump
    size is tuned until the symmetric-difference area fits inside
    ``epsilon``.  ``edge='upper'`` mirrors the construction across the
    wedge bisector so the flat node sits on the upper edge.
    """
    if not epsilon > 0.0:
        raise InvalidParameterError("epsilon must be positive")
    if edge not in ("lower", "upper"):
        raise InvalidParameterError(f"edge must be 'lower' or 'upper', got {edge!r}")
    geo = corner_geometry(spec)
    if nodes_per_unit is None:
        nodes_per_unit = 8.0 / spec.delta
    if far_spacing is None:
        far_spacing = geo.R_far / 256.0

    L1, L2, L3, L4, L5, L6 = geo.seg_lengths
    L = geo.total_length
    breaks = geo.seg_breaks
    sigma0 = 0.3 * min(L2, L6)
    s_a = tangency_a - spec.delta
    if not (max(8.0 * sigma0, 0.01 * L1) < s_a < 0.95 * L1):
        raise InvalidParameterError(
            f"tangency_a={tangency_a} not safely inside the straight edge"
        )

    n_master = 1 << 15
    ds = L / n_master
    s_grid = np.arange(n_master) * ds
    kappa0 = np.zeros(n_master)
    seg_kappa = [0.0, 1.0 / geo.r_vertex, 1.0 / geo.R_far, 1.0 / geo.r_vertex, 0.0, 1.0 / geo.r_fillet]
    for k, kap in enumerate(seg_kappa):
        mask = (s_grid >= breaks[k]) & (s_grid < breaks[k + 1])
        kappa0[mask] = kap
    # grid snapping misplaces the jump locations; rescale so the discrete
    # total turn is exactly 2*pi without touching the zero set
    kappa0 *= 2.0 * math.pi / (kappa0.sum() * ds)

    base_eps2 = 0.8 * epsilon * 6.0 / max(L1, L5) ** 3
    psi = np.sin(math.pi * (s_grid - s_a) / L) ** 2
    i_a = int(round(s_a / ds)) % n_master

    corner_nodes = None
    scale = 1.0
    for _attempt in range(12):
        eps2 = base_eps2 * scale
        sigma = max(sigma0 * min(1.0, scale) ** 0.5, 4.0 * ds)
        if eps2 < 1e-9:
            raise InfeasibleEpsilonError(
                f"epsilon={epsilon:.3g} requires a curvature bump below the "
                "resolvable floor"
            )
        kappa_s = _periodic_gaussian_smooth(kappa0, sigma, ds)
        eps3 = eps2 * (psi.sum() * ds) / (2.0 * math.pi)
        kappa_c = kappa_s * (1.0 - eps3) + eps2 * psi

        # close the total turn exactly with a uniform curvature shift, then
        # integrate the tangent angle and positions
        theta = np.concatenate(
            ([0.0], np.cumsum(0.5 * (kappa_c[1:] + kappa_c[:-1]) * ds))
        )
        turn_total = theta[-1] + 0.5 * (kappa_c[-1] + kappa_c[0]) * ds
        theta = theta + (2.0 * math.pi - turn_total) * s_grid / L
        cosq, sinq = np.cos(theta), np.sin(theta)
        pos_x = np.concatenate(([0.0], np.cumsum(0.5 * (cosq[1:] + cosq[:-1]) * ds)))
        pos_y = np.concatenate(([0.0], np.cumsum(0.5 * (sinq[1:] + sinq[:-1]) * ds)))
        # position closure: subtract the linear endpoint drift.  This keeps the
        # curvature zero-set (it rescales curvature by 1 + O(|gap|/L) > 0 and
        # leaves kappa = 0 points at zero), unlike any curvature-space fix.
        gap_x = pos_x[-1] + 0.5 * (cosq[-1] + cosq[0]) * ds
        gap_y = pos_y[-1] + 0.5 * (sinq[-1] + sinq[0]) * ds
        if math.hypot(gap_x, gap_y) > 0.05 * L:
            raise InfeasibleEpsilonError("closure drift too large; construction invalid")
        pos_x = pos_x - s_grid * (gap_x / L)
        pos_y = pos_y - s_grid * (gap_y / L)

        # rigid alignment: flat node at (tangency_a, 0) with horizontal tangent
        drift_angle = math.atan2(sinq[i_a] - gap_y / L, cosq[i_a] - gap_x / L)
        rot = -drift_angle
        cr, sr = math.cos(rot), math.sin(rot)
        px = cr * pos_x - sr * pos_y
        py = sr * pos_x + cr * pos_y
        px = px - px[i_a] + tangency_a
        py = py - py[i_a]

        # subsample: spacing follows curvature (kappa * h <= 0.06), forced
        # node at s_a
        def h_of(sv):
            kap = np.interp(sv, s_grid, kappa_c, period=L)
            return np.minimum(
                far_spacing,
                np.maximum(0.06 / np.maximum(kap, 0.06 / far_spacing), 1.0 / nodes_per_unit),
            )

        s_samples = _sample_positions(L, h_of, 1.0 / nodes_per_unit)
        s_samples[np.argmin(np.abs(s_samples - s_grid[i_a]))] = s_grid[i_a]
        s_samples = np.unique(s_samples)
        nx = np.interp(s_samples, s_grid, px)
        ny = np.interp(s_samples, s_grid, py)
        nodes = np.column_stack([nx, ny])

        if corner_nodes is None:
            corner_nodes = build_corner_patch(
                spec, nodes_per_unit=nodes_per_unit, far_spacing=far_spacing
            ).nodes
        d_area = symmetric_difference_area(nodes, corner_nodes)
        if d_area < 0.95 * epsilon:
            break
        scale *= min(0.7, 0.6 * epsilon / d_area)
    else:
        raise InfeasibleEpsilonError(
            f"could not fit symmetric difference inside epsilon={epsilon:.3g}"
        )

    if edge == "upper":
        refl = np.array(
            [
                [math.cos(2 * geo.theta_b), math.sin(2 * geo.theta_b)],
                [math.sin(2 * geo.theta_b), -math.cos(2 * geo.theta_b)],
            ]
        )
        nodes = (nodes @ refl.T)[::-1].copy()

    contour = Contour(nodes, material=nodes.copy())
    if return_corner:
        return contour, Contour(corner_nodes, material=corner_nodes.copy())
    return contour
