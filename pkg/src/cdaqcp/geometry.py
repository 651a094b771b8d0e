"""Planar geometry behind the disjunctive approximation of y = x**2.

The curve y = x**2 is embedded as the points (x, (y - 1)/2) whose norm is
(y + 1)/2.  Every point of the curve over [l, u] then sits at an angle in
[theta_min, theta_max], and the lifted encoding repeatedly rotates and folds
that angular sector in half.

Angles live in (-3*pi/2, pi/2]: the two ends of that window both point along
the recession direction of the epigraph of x**2, so no curve point ever needs
wrap-around arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

ANGLE_TOL = 1e-10
LOWER_ANGLE = -1.5 * math.pi
UPPER_ANGLE = 0.5 * math.pi


class Vec2(NamedTuple):
    v: float
    w: float


@dataclass(frozen=True)
class AngleSpan:
    theta_min: float
    theta_max: float
    theta_mid: float
    theta_d: float


@dataclass(frozen=True)
class Triangle:
    """Region between the tangents at two knots and the secant through them.

    ``halfplanes`` holds rows ``(a_x, a_y, rhs)`` read with ``senses``: the
    two tangent rows are ``<=`` and the secant row is ``>=``.
    """

    alpha: float
    beta: float
    halfplanes: np.ndarray
    senses: tuple[str, str, str] = ("<=", "<=", ">=")

    def violation(self, x, y):
        """Largest signed violation over the three rows, in distance units.

        Negative values mean strictly inside.  Works elementwise on arrays.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        worst = np.full(np.broadcast(x, y).shape, -np.inf)
        for (ax, ay, rhs), sense in zip(self.halfplanes, self.senses):
            lhs = ax * x + ay * y
            gap = lhs - rhs if sense == "<=" else rhs - lhs
            worst = np.maximum(worst, gap / math.hypot(ax, ay))
        return worst if worst.ndim else float(worst)

    def contains(self, x, y, tol: float = 1e-9):
        return self.violation(x, y) <= tol

    def vertices(self) -> np.ndarray:
        """The two knots on the curve and the intersection of the tangents."""
        xa, xb = knot(self.alpha), knot(self.beta)
        return np.array([[xa, xa * xa], [xb, xb * xb], [0.5 * (xa + xb), xa * xb]])


def rot(p: Sequence[float], theta: float) -> Vec2:
    """Rotate ``p`` clockwise by ``theta``."""
    v, w = p
    c, s = math.cos(theta), math.sin(theta)
    return Vec2(c * v + s * w, -s * v + c * w)


def fold(p: Sequence[float]) -> Vec2:
    v, w = p
    return Vec2(v, abs(w))


def arc_tan(p: Sequence[float]) -> float:
    """Angle of a nonzero vector, as the representative in (-3pi/2, pi/2]."""
    v, w = p
    if v == 0 and w == 0:
        raise ValueError("arc_tan is undefined for the zero vector")
    if v > 0:
        return math.atan(w / v)
    if v < 0:
        return math.atan(w / v) - math.pi
    return 0.5 * math.pi if w > 0 else -0.5 * math.pi


def curve_angle(x: float) -> float:
    """Angle of the embedded curve point (x, (x**2 - 1)/2)."""
    return arc_tan((x, 0.5 * (x * x - 1.0)))


def angle_span(l: float, u: float) -> AngleSpan:
    if not (math.isfinite(l) and math.isfinite(u)):
        raise ValueError("bounds must be finite")
    if l > u:
        raise ValueError(f"lower bound {l} exceeds upper bound {u}")
    lo, hi = curve_angle(l), curve_angle(u)
    return AngleSpan(lo, hi, 0.5 * (lo + hi), hi - lo)


def knot(alpha: float) -> float:
    """x-coordinate where the ray at angle ``alpha`` meets the embedded curve."""
    if not (LOWER_ANGLE < alpha < UPPER_ANGLE):
        raise ValueError(f"angle {alpha} outside (-3pi/2, pi/2)")
    # tan + sec equals tan(alpha/2 + pi/4), which stays accurate near alpha = -pi/2
    return math.tan(0.5 * alpha + 0.25 * math.pi)


def sector_angles(z: Sequence[int], span: AngleSpan) -> tuple[float, float]:
    """Angles (phi, beta) of the sector selected by the fold pattern ``z``.

    ``z[j] == 1`` means the j-th fold left the vector untouched.  The end
    ``beta`` lies below ``phi`` when an odd number of folds were active.
    """
    nu = len(z)
    if nu < 1:
        raise ValueError("need at least one binary")
    phi = span.theta_min
    flips = 0
    for i in range(nu):
        phi += (-1) ** flips * span.theta_d / 2 ** (i + 1)
        flips += 1 - int(z[i])
    beta = phi + (-1) ** flips * span.theta_d / 2**nu
    return phi, beta


def _tangent_row(a: float) -> tuple[float, float, float]:
    return (math.cos(a), 0.5 * (math.sin(a) - 1.0), 0.5 * (math.sin(a) + 1.0))


def _secant_row(alpha: float, beta: float) -> tuple[float, float, float]:
    s = math.sin(0.5 * (alpha + beta))
    c = math.cos(0.5 * (alpha - beta))
    return (math.cos(0.5 * (alpha + beta)), 0.5 * (s - c), 0.5 * (s + c))


def triangle(alpha: float, beta: float) -> Triangle:
    for a in (alpha, beta):
        if not (LOWER_ANGLE < a < UPPER_ANGLE):
            raise ValueError(f"angle {a} outside (-3pi/2, pi/2)")
    if abs(alpha - beta) < 1e-12:
        raise ValueError("degenerate triangle: alpha == beta")
    rows = np.array([_tangent_row(alpha), _tangent_row(beta), _secant_row(alpha, beta)])
    return Triangle(alpha, beta, rows)


def member_plus(point: Sequence[float], alpha: float, beta: float, tol: float = 1e-9) -> bool:
    """Membership in the region between the curve y = x**2 and the secant."""
    x, y = point
    tri = triangle(alpha, beta)
    ax, ay, rhs = tri.halfplanes[2]
    secant_ok = ax * x + ay * y >= rhs - tol * math.hypot(ax, ay)
    return bool(secant_ok and y >= x * x - tol)


def error_bounds(l: float, u: float, nu: int) -> tuple[float, float]:
    """Worst-case |sqrt(y) - |x|| and |y - x**2| over the level-nu set."""
    if nu < 2:
        raise ValueError("error bounds need nu >= 2")
    if l > u:
        raise ValueError(f"lower bound {l} exceeds upper bound {u}")
    m = max(l * l, u * u) + 1.0
    return m / 2 ** (nu - 1), m * m / 2 ** (2 * nu - 2)


def nasty_identities(alpha: float, beta: float) -> tuple[float, float]:
    """Residuals of the two trig identities equating the secant forms.

    Both residuals vanish for any alpha, beta with nonzero cosines; they are
    what makes the scaled secant row of a triangle match the chord through
    its two knots.
    """
    half_diff = math.cos(0.5 * (alpha - beta))
    half_sum = math.sin(0.5 * (alpha + beta))
    scale = 0.5 * (half_diff - half_sum)
    ka = (math.sin(alpha) + 1.0) / math.cos(alpha)
    kb = (math.sin(beta) + 1.0) / math.cos(beta)
    r1 = (ka + kb) * scale - math.cos(0.5 * (alpha + beta))
    r2 = ka * kb * scale - 0.5 * (half_sum + half_diff)
    return r1, r2
