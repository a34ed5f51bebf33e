"""Closed-form and quadrature evaluation of the corner bending criterion.

The central object is

    F(alpha, beta) = beta/(beta^2+1)
                     - alpha/(beta^2+1)^(1-alpha/2) * I(alpha, beta),
    I(alpha, beta) = integral of cos(t)^alpha over [-arctan(beta), pi/2],

whose sign decides which way a corner-like patch boundary bends under the
gSQG contour dynamics with kernel order ``alpha``.  The map
``beta -> (beta^2+1)^(1-alpha/2) * F(alpha, beta)`` is strictly monotone
with slope ``-(alpha-1)/(beta^2+1)^(alpha/2)``, which makes the unique
zero beta*(alpha) (for 0 < alpha < 1) a safe bisection target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .errors import (
    AlphaZeroUnsupportedError,
    DegenerateAnnulusError,
    InvalidParameterError,
    NoRootError,
)

__all__ = [
    "GsqgParams",
    "FRecord",
    "Annulus",
    "cos_power_integral",
    "eval_F",
    "scaled_F_derivative",
    "beta_star",
    "annulus",
    "predicted_d2s_v2",
    "predicted_ds_v",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class GsqgParams:
    """Kernel order alpha in [0, 2) and the positive kernel constant."""

    alpha: float
    c_alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 2.0:
            raise InvalidParameterError(f"alpha must lie in [0, 2), got {self.alpha}")
        if not self.c_alpha > 0.0:
            raise InvalidParameterError(f"c_alpha must be positive, got {self.c_alpha}")


@dataclass(frozen=True)
class FRecord:
    """One evaluation of the bending criterion."""

    alpha: float
    beta: float
    integral_I: float
    f_value: float


@dataclass(frozen=True)
class Annulus:
    """Radial window where the leading-order bending asymptotics dominate."""

    inner_radius: float
    outer_radius: float
    c_constant: float

    def __post_init__(self):
        if self.inner_radius >= self.outer_radius:
            raise DegenerateAnnulusError(
                f"annulus degenerate: inner {self.inner_radius:.6g} >= "
                f"outer {self.outer_radius:.6g}; enlarge the M/delta separation "
                "or adjust c_constant"
            )

    @property
    def mid_radius(self) -> float:
        return math.sqrt(self.inner_radius * self.outer_radius)

    def contains(self, r: float) -> bool:
        return self.inner_radius < r < self.outer_radius


def _check_alpha_beta(alpha: float, beta: float, *, alpha_max_inclusive: bool = False):
    hi_ok = alpha <= 2.0 if alpha_max_inclusive else alpha < 2.0
    if not (0.0 <= alpha and hi_ok):
        hi = "2]" if alpha_max_inclusive else "2)"
        raise InvalidParameterError(f"alpha must lie in [0, {hi}, got {alpha}")
    if beta < 0.0:
        raise InvalidParameterError(f"beta must be nonnegative, got {beta}")


def cos_power_integral(alpha: float, beta: float, tol: float = DEFAULT_TOL) -> float:
    """Integral of cos(t)^alpha over [-arctan(beta), pi/2].

    alpha = 2 is accepted purely as a quadrature sanity point (closed form
    pi/4 + arctan(beta)/2 + sin(2 arctan beta)/4); the model range is [0, 2).
    """
    _check_alpha_beta(alpha, beta, alpha_max_inclusive=True)
    if not tol > 0.0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    lo = -math.atan(beta)
    hi = math.pi / 2.0
    val, _err = quad(
        lambda t: math.cos(t) ** alpha, lo, hi, epsabs=tol * 0.1, epsrel=1e-13, limit=200
    )
    return val


def eval_F(alpha: float, beta: float, tol: float = DEFAULT_TOL) -> FRecord:
    """Evaluate the bending criterion F(alpha, beta)."""
    _check_alpha_beta(alpha, beta)
    integral = cos_power_integral(alpha, beta, tol)
    b2p1 = beta * beta + 1.0
    f = beta / b2p1 - alpha * integral / b2p1 ** (1.0 - alpha / 2.0)
    return FRecord(alpha=alpha, beta=beta, integral_I=integral, f_value=f)


def scaled_F_derivative(alpha: float, beta: float) -> float:
    """d/dbeta of (beta^2+1)^(1-alpha/2) F(alpha, beta), in closed form.

    Equals -(alpha - 1)/(beta^2 + 1)^(alpha/2); positive for alpha < 1,
    zero at alpha = 1, negative beyond.
    """
    _check_alpha_beta(alpha, beta)
    return -(alpha - 1.0) / (beta * beta + 1.0) ** (alpha / 2.0)


def _scaled_F(alpha: float, beta: float, tol: float) -> float:
    """(beta^2+1)^(1-alpha/2) * F = beta (beta^2+1)^(-alpha/2) - alpha I."""
    integral = cos_power_integral(alpha, beta, tol)
    return beta * (beta * beta + 1.0) ** (-alpha / 2.0) - alpha * integral


def beta_star(alpha: float, tol: float = DEFAULT_TOL) -> float:
    """Unique zero of F(alpha, .) for 0 < alpha < 1, by bisection.

    Bisection runs on the strictly increasing scaled map
    (beta^2+1)^(1-alpha/2) F(alpha, beta); the initial bracket [0, 1] is
    doubled until the sign changes.  Raises NoRootError outside (0, 1):
    F < 0 everywhere for alpha >= 1 and F > 0 on beta > 0 for alpha = 0.
    """
    if not 0.0 < alpha < 1.0:
        raise NoRootError(
            f"F(alpha, .) has a zero only for 0 < alpha < 1; got alpha={alpha}"
        )
    if not tol > 0.0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")

    quad_tol = min(tol * 1e-2, 1e-12)
    lo, hi = 0.0, 1.0
    g_lo = _scaled_F(alpha, lo, quad_tol)
    g_hi = _scaled_F(alpha, hi, quad_tol)
    # G(0) = -alpha*I < 0 always; expand upward until G flips.
    while g_hi < 0.0:
        lo, g_lo = hi, g_hi
        hi *= 2.0
        if hi > 1e6:
            raise NoRootError(f"no sign change located for alpha={alpha}")
        g_hi = _scaled_F(alpha, hi, quad_tol)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = _scaled_F(alpha, mid, quad_tol)
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid
        f_mid = g_mid / (mid * mid + 1.0) ** (1.0 - alpha / 2.0)
        if abs(f_mid) <= tol and (hi - lo) <= 1e-12 * max(1.0, mid):
            return mid
    return 0.5 * (lo + hi)


def annulus(
    alpha: float,
    beta: float,
    delta: float,
    M: float,
    c_constant: float = 1.0,
    tol: float = DEFAULT_TOL,
) -> Annulus:
    """Radial window [c^-1 |F|^-1/2 delta, c |F|^(1/(1+alpha)) M].

    Raises DegenerateAnnulusError when the window is empty (|F| too small
    or delta/M separation too narrow for the chosen c_constant).
    """
    _check_alpha_beta(alpha, beta)
    if not (delta > 0.0 and M > 0.0 and delta < M):
        raise InvalidParameterError(f"need 0 < delta < M, got delta={delta}, M={M}")
    if not c_constant > 0.0:
        raise InvalidParameterError(f"c_constant must be positive, got {c_constant}")
    f = eval_F(alpha, beta, tol).f_value
    if abs(f) <= tol:
        raise DegenerateAnnulusError(
            f"F({alpha}, {beta}) = {f:.3e} vanishes to tolerance; annulus empty"
        )
    inner = delta / (c_constant * math.sqrt(abs(f)))
    outer = c_constant * abs(f) ** (1.0 / (1.0 + alpha)) * M
    return Annulus(inner_radius=inner, outer_radius=outer, c_constant=c_constant)


def predicted_d2s_v2(params: GsqgParams, beta: float, a: float, tol: float = DEFAULT_TOL) -> float:
    """Leading term of the second tangential derivative of the vertical
    velocity on the lower edge: c_alpha F(alpha, beta) / a^(1+alpha)."""
    if not a > 0.0:
        raise InvalidParameterError(f"probe abscissa must be positive, got {a}")
    f = eval_F(params.alpha, beta, tol).f_value
    return params.c_alpha * f / a ** (1.0 + params.alpha)


def predicted_ds_v(params: GsqgParams, beta: float, a: float, tol: float = DEFAULT_TOL) -> float:
    """Leading term of the first tangential derivative of the vertical
    velocity on the lower edge.

    The asymptotic statement bounds ds_v + c_alpha F/(alpha a^alpha), so the
    prediction itself is the negation -c_alpha F/(alpha a^alpha).  Rejects
    alpha = 0, where the antiderivative turns logarithmic and no closed
    leading term of this form exists.
    """
    if not a > 0.0:
        raise InvalidParameterError(f"probe abscissa must be positive, got {a}")
    if params.alpha == 0.0:
        raise AlphaZeroUnsupportedError(
            "first-derivative prediction divides by alpha; alpha = 0 unsupported"
        )
    f = eval_F(params.alpha, beta, tol).f_value
    return -params.c_alpha * f / (params.alpha * a**params.alpha)
