"""Counting, location and classification of equilibria of the refuge model.

Interior equilibria are the roots X = x - m of the cubic

    R(X) = X^3 + alpha2*X^2 + alpha1*X + alpha0

in (0, 1-m), paired with y = k2 + X.  The count is predicted by Routh's
sign-change scheme combined with Tong's three-real-roots criterion; the
located roots must agree with that prediction.  Classification uses the
negative trace s, determinant p and discriminant s^2 - 4p of the Jacobian,
with documented fallbacks for the semi-hyperbolic and nilpotent cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import (
    NoHopf,
    NonHyperbolicPresent,
    NotAnEquilibrium,
    NumericalFailure,
)
from .model import ModelParams, vector_field

# Taxonomy labels (the strings that appear in JSON reports).
SADDLE = "Saddle"
STABLE_NODE = "StableNode"
STABLE_FOCUS = "StableFocus"
STABLE_DEGENERATE_NODE = "StableDegenerateNode"
UNSTABLE_NODE = "UnstableNode"
UNSTABLE_FOCUS = "UnstableFocus"
UNSTABLE_DEGENERATE_NODE = "UnstableDegenerateNode"
LINEAR_CENTER = "LinearCenter"
SADDLE_NODE = "SaddleNode"
CUSP = "Cusp"
TOPOLOGICAL_SADDLE = "TopologicalSaddle"
ATTRACTING_TOPOLOGICAL_NODE = "AttractingTopologicalNode"

HYPERBOLIC_EPS = 1e-9

_INDEX = {
    SADDLE: -1,
    STABLE_NODE: 1, STABLE_FOCUS: 1, STABLE_DEGENERATE_NODE: 1,
    UNSTABLE_NODE: 1, UNSTABLE_FOCUS: 1, UNSTABLE_DEGENERATE_NODE: 1,
    LINEAR_CENTER: 1,
    SADDLE_NODE: 0, CUSP: 0,
    TOPOLOGICAL_SADDLE: -1, ATTRACTING_TOPOLOGICAL_NODE: 1,
}


@dataclass(frozen=True)
class CubicCoeffs:
    """Coefficients of R(X) = X^3 + alpha2 X^2 + alpha1 X + alpha0."""

    alpha2: float
    alpha1: float
    alpha0: float

    def value(self, X):
        return ((X + self.alpha2) * X + self.alpha1) * X + self.alpha0

    def derivative(self, X):
        return (3.0 * X + 2.0 * self.alpha2) * X + self.alpha1


@dataclass(frozen=True)
class CountReport:
    n_predicted: int
    routh_sign_changes: int
    tong_delta: float
    tong_product: float | None
    branch: str


@dataclass(frozen=True)
class Equilibrium:
    x: float
    y: float
    s: float = math.nan
    p_det: float = math.nan
    delta_c: float = math.nan
    taxonomy: str | None = None
    index: int | None = None
    multiplicity: int = 1
    hyperbolic: bool = True

    def to_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "s": self.s, "p": self.p_det,
            "delta": self.delta_c, "taxonomy": self.taxonomy,
            "index": self.index, "multiplicity": self.multiplicity,
        }


@dataclass(frozen=True)
class IndexReport:
    total: int
    expected: int | None
    passed: bool


@dataclass(frozen=True)
class HopfData:
    b0: float
    lam: float
    subcritical: bool


def cubic_coefficients(p: ModelParams) -> CubicCoeffs:
    """Coefficients of the interior-equilibrium cubic in X = x - m."""
    return CubicCoeffs(
        alpha2=p.a + p.k1 - 1.0 + 2.0 * p.m,
        alpha1=p.m ** 2 + p.m * (2.0 * p.k1 - 1.0) + p.a * p.k2 - p.k1,
        alpha0=-p.k1 * p.m * (1.0 - p.m),
    )


def _sign_changes(seq):
    signs = [s for s in (np.sign(v) for v in seq) if s != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if u != v)


def count_interior_equilibria(p: ModelParams) -> CountReport:
    """Predict the number of distinct interior equilibria without root finding.

    For m > 0 the Routh scheme gives the number of roots of R with positive
    real part and Tong's criterion decides how many are real; the boundary
    case R(x'min)*R(x'max) = 0 yields a double root (2 distinct equilibria).
    For m = 0 the cubic degenerates to X times a quadratic and the count
    follows from its discriminant and Vieta signs.
    """
    c = cubic_coefficients(p)
    a2, a1, a0 = c.alpha2, c.alpha1, c.alpha0
    tong_delta = a2 * a2 - 3.0 * a1

    if a2 != 0.0:
        routh = _sign_changes((1.0, a2, a1 - a0 / a2, a0))
    else:
        routh = _sign_changes((1.0, a1, a0))

    if p.m > 0:
        tong_product = None
        if tong_delta > 0.0:
            r = math.sqrt(tong_delta)
            tong_product = c.value((-a2 - r) / 3.0) * c.value((-a2 + r) / 3.0)
        if a2 < 0.0 and a1 * a2 < a0 and tong_delta > 0.0 and tong_product < 0.0:
            return CountReport(3, routh, tong_delta, tong_product, "m_pos_case_a")
        if a2 < 0.0 and a1 * a2 < a0 and tong_delta > 0.0 and tong_product == 0.0:
            return CountReport(2, routh, tong_delta, tong_product, "m_pos_case_b")
        return CountReport(1, routh, tong_delta, tong_product, "m_pos_case_c")

    # m = 0: interior equilibria are the positive roots of X^2 + a2 X + a1.
    disc_q = a2 * a2 - 4.0 * a1
    if disc_q > 0.0 and a1 > 0.0 and a2 < 0.0:
        return CountReport(2, routh, tong_delta, None, "m_zero_case_a")
    if (disc_q > 0.0 and (a1 < 0.0 or (a1 == 0.0 and a2 < 0.0))) or (
        disc_q == 0.0 and a2 < 0.0
    ):
        return CountReport(1, routh, tong_delta, None, "m_zero_case_b")
    return CountReport(0, routh, tong_delta, None, "m_zero_case_c")


def _z(p: ModelParams, x: float) -> float:
    return p.k1 + x - p.m


def _trace_det(p: ModelParams, x: float, y: float):
    """s = -trace and p = det of the Jacobian at an interior equilibrium."""
    z = _z(p, x)
    core = -1.0 + 2.0 * x + p.a * y * p.k1 / z ** 2
    s = core + p.b
    det = p.b * (core + p.a * (x - p.m) / z)
    return s, det


def _polish(c: CubicCoeffs, X: float, lo: float, hi: float) -> float:
    # a few Newton steps inside the bracket; bisection already got us close
    for _ in range(5):
        f = c.value(X)
        fp = c.derivative(X)
        if fp == 0.0:
            break
        step = f / fp
        Xn = X - step
        if not lo <= Xn <= hi:
            break
        X = Xn
        if abs(step) < 1e-16 * max(1.0, abs(X)):
            break
    return X


def find_interior_equilibria(p: ModelParams) -> list[Equilibrium]:
    """Locate all interior equilibria by bracketing the cubic's sign changes.

    Real roots of R in (0, 1-m) are isolated using the critical points of R',
    solved by bisection and polished by Newton; a root sitting exactly at a
    critical point is reported once with multiplicity 2.  Results are sorted
    by x and carry s, p and the discriminant (taxonomy is left to classify).
    """
    c = cubic_coefficients(p)
    scale = max(1.0, abs(c.alpha2), abs(c.alpha1), abs(c.alpha0))
    res_tol = 1e-12 * scale
    lo, hi = 0.0, 1.0 - p.m

    breakpoints = [lo, hi]
    tong_delta = c.alpha2 ** 2 - 3.0 * c.alpha1
    if tong_delta > 0.0:
        r = math.sqrt(tong_delta)
        for Xc in ((-c.alpha2 - r) / 3.0, (-c.alpha2 + r) / 3.0):
            if lo < Xc < hi:
                breakpoints.append(Xc)
    breakpoints = sorted(set(breakpoints))

    roots: list[tuple[float, int]] = []
    # double (or triple) roots sit exactly at critical points of R
    for Xc in breakpoints[1:-1]:
        if abs(c.value(Xc)) <= res_tol:
            roots.append((Xc, 2))
    for left, right in zip(breakpoints, breakpoints[1:]):
        fl, fr = c.value(left), c.value(right)
        if fl == 0.0 and left > lo:
            continue  # already caught as a critical-point root
        if fl * fr < 0.0:
            try:
                X = brentq(c.value, left, right, xtol=1e-15, rtol=8.9e-16,
                           maxiter=200)
            except RuntimeError as exc:
                raise NumericalFailure(f"root polishing failed in [{left}, {right}]") from exc
            X = _polish(c, X, left, right)
            roots.append((X, 1))

    # a critical-point root may coincide with a bracketed root; dedup
    deduped: list[tuple[float, int]] = []
    for X, mult in sorted(roots):
        if deduped and abs(X - deduped[-1][0]) < 1e-10:
            continue
        deduped.append((X, mult))

    # within rounding distance of a tangency the residual test can accept
    # a critical point that the sign-based count rejects (the cubic grazes
    # zero without or while also crossing); the count is the authority, so
    # shed surplus critical-point roots, worst residual first
    n_predicted = count_interior_equilibria(p).n_predicted
    while len(deduped) > n_predicted:
        doubles = [(abs(c.value(X)), i) for i, (X, mult) in enumerate(deduped)
                   if mult == 2]
        if not doubles:
            break
        deduped.pop(max(doubles)[1])

    out = []
    for X, mult in deduped:
        if not lo < X < hi:
            continue
        if abs(c.value(X)) > max(res_tol, 1e-10):
            raise NumericalFailure(f"residual too large at X={X}")
        x, y = p.m + X, p.k2 + X
        s, det = _trace_det(p, x, y)
        out.append(Equilibrium(x=x, y=y, s=s, p_det=det, delta_c=s * s - 4.0 * det,
                               multiplicity=mult))
    return out


def trivial_equilibria(p: ModelParams) -> list[Equilibrium]:
    """The three axis equilibria E0=(0,0), E1=(1,0), E2=(0,k2), classified.

    E0 is an unstable node and E1 a hyperbolic saddle for all parameters.
    E2 is a saddle when m > 0 or a*k2 < k1, a stable node when m = 0 with
    a*k2 > k1, and semi-hyperbolic on the boundary m = 0, a*k2 = k1, where
    the sign of 1 - k1 - a separates an attracting topological node from a
    topological saddle.
    """
    b = p.b
    e0 = Equilibrium(0.0, 0.0, s=-(1.0 + b), p_det=b, delta_c=(1.0 - b) ** 2,
                     taxonomy=UNSTABLE_NODE, index=1)
    e1 = Equilibrium(1.0, 0.0, s=1.0 - b, p_det=-b,
                     delta_c=(1.0 - b) ** 2 + 4.0 * b,
                     taxonomy=SADDLE, index=-1)

    if p.m > 0 or p.a * p.k2 < p.k1:
        j11 = 1.0 if p.m > 0 else 1.0 - p.a * p.k2 / p.k1
        tax, hyp = SADDLE, True
    elif p.a * p.k2 > p.k1:
        j11 = 1.0 - p.a * p.k2 / p.k1
        tax, hyp = STABLE_NODE, True
    else:
        j11 = 0.0
        tax = TOPOLOGICAL_SADDLE if 1.0 - p.k1 - p.a > 0 else ATTRACTING_TOPOLOGICAL_NODE
        hyp = False
    s2 = -(j11 - b)
    p2 = -j11 * b
    e2 = Equilibrium(0.0, p.k2, s=s2, p_det=p2, delta_c=s2 * s2 - 4.0 * p2,
                     taxonomy=tax, index=_INDEX[tax], hyperbolic=hyp)
    return [e0, e1, e2]


def classify(p: ModelParams, e: Equilibrium) -> Equilibrium:
    """Fill taxonomy, index and hyperbolicity of an interior equilibrium.

    Hyperbolic cases follow the sign table on (s, p, s^2-4p) with absolute
    tolerance HYPERBOLIC_EPS.  When p vanishes the semi-hyperbolic decision
    quantity is z^3 - a*k1*y + a*k1*z (z = k1 + x - m): nonzero gives a
    saddle-node, zero an unstable node (k1 > k2) or saddle (k1 < k2).  When
    s and p both vanish the nilpotent quantity 1 - a*y*k1/z^3 + a*k1/z^2
    separates a cusp from a saddle.
    """
    v1, v2 = vector_field(p, (e.x, e.y))
    if math.hypot(v1, v2) > 1e-9:
        raise NotAnEquilibrium(f"field residual {math.hypot(v1, v2):.3g} at ({e.x}, {e.y})")

    s, det = _trace_det(p, e.x, e.y)
    delta = s * s - 4.0 * det
    eps = HYPERBOLIC_EPS
    hyperbolic = True

    if det < -eps:
        tax = SADDLE
    elif det > eps and abs(s) > eps:
        if s > 0:
            stable = (STABLE_NODE, STABLE_FOCUS, STABLE_DEGENERATE_NODE)
        else:
            stable = (UNSTABLE_NODE, UNSTABLE_FOCUS, UNSTABLE_DEGENERATE_NODE)
        if delta > eps:
            tax = stable[0]
        elif delta < -eps:
            tax = stable[1]
        else:
            tax = stable[2]
    elif det > eps:
        tax = LINEAR_CENTER
        hyperbolic = False
    elif abs(s) > eps:
        # semi-hyperbolic: one zero eigenvalue
        z = _z(p, e.x)
        w = z ** 3 - p.k1 * e.y * p.a + p.a * p.k1 * z
        if abs(w) > eps:
            tax = SADDLE_NODE
        else:
            tax = UNSTABLE_NODE if p.k1 > p.k2 else SADDLE
        hyperbolic = False
    else:
        # nilpotent: both eigenvalues zero, linear part nonzero
        z = _z(p, e.x)
        q = 1.0 - p.a * e.y * p.k1 / z ** 3 + p.a * p.k1 / z ** 2
        tax = CUSP if abs(q) > eps else SADDLE
        hyperbolic = False

    return replace(e, s=s, p_det=det, delta_c=delta, taxonomy=tax,
                   index=_INDEX[tax], hyperbolic=hyperbolic)


def index_sum_check(p: ModelParams, eqs: list[Equilibrium]) -> IndexReport:
    """Check the Poincare index sum of classified interior equilibria.

    The inward-pointing field on the attracting region forces the sum to 1
    when m > 0, and likewise when m = 0 with a*k2 < k1; for m = 0 with
    a*k2 > k1 the trivial node E2 absorbs one index and the interior sum
    must be 0.  The boundary a*k2 = k1 has no predicted sum.
    """
    for e in eqs:
        if e.taxonomy is None:
            raise NonHyperbolicPresent("unclassified equilibrium in index check")
        if not e.hyperbolic:
            raise NonHyperbolicPresent(f"non-hyperbolic equilibrium {e.taxonomy}")
    total = sum(e.index for e in eqs)
    if p.m > 0 or p.a * p.k2 < p.k1:
        expected = 1
    elif p.a * p.k2 > p.k1:
        expected = 0
    else:
        expected = None
    return IndexReport(total=total, expected=expected,
                       passed=(expected is None or total == expected))


def _transformed_field_partials(p: ModelParams, x0: float, y0: float,
                                b0: float, theta: float):
    """Analytic partials (orders 2-3) of the field in the Hopf eigenbasis.

    Coordinates (u, v) with x = x0 + u - theta*v, y = y0 + u put the linear
    part at b = b0 into rotation form.  Returns two dicts of partial
    derivatives of the transformed components, keyed like 'uv', 'uuv'.
    """
    import sympy as sp

    u, v = sp.symbols("u v")
    x = x0 + u - theta * v
    y = y0 + u
    v1 = x * (1 - x) - p.a * y * (x - p.m) / (p.k1 + x - p.m)
    v2 = b0 * y * (1 - y / (p.k2 + x - p.m))
    fa = v2
    fb = (v2 - v1) / theta

    keys = ["uu", "uv", "vv", "uuu", "uuv", "uvv", "vvv"]
    out = []
    for expr in (fa, fb):
        d = {}
        for key in keys:
            deriv = expr
            for sym in key:
                deriv = sp.diff(deriv, u if sym == "u" else v)
            d[key] = float(deriv.subs({u: 0, v: 0}))
        out.append(d)
    return out


def hopf_point(p: ModelParams, e: Equilibrium) -> HopfData:
    """Critical b and first Lyapunov coefficient at an interior equilibrium.

    s is affine in b with slope 1, so the eigenvalue real parts cross zero
    at b0 = 1 - 2x - a*y*k1/z^2; purely imaginary eigenvalues require
    0 < b0 < a*(x-m)/z.  The Lyapunov coefficient is the Guckenheimer-Holmes
    combination of second and third partials of the field transformed to the
    eigenbasis at b = b0; lam > 0 means the bifurcating orbits are repelling.
    """
    z = _z(p, e.x)
    b0 = 1.0 - 2.0 * e.x - p.a * e.y * p.k1 / z ** 2
    kc = p.a * (e.x - p.m) / z
    if not 0.0 < b0 < kc:
        raise NoHopf(f"b0={b0:.6g} outside (0, a*c)= (0, {kc:.6g})")

    omega0 = math.sqrt(b0 * (kc - b0))
    theta = math.sqrt((kc - b0) / b0)
    A, B = _transformed_field_partials(p, e.x, e.y, b0, theta)

    lam = (
        A["uuu"] + A["uvv"] + B["uuv"] + B["vvv"]
        + (A["uv"] * (A["uu"] + A["vv"]) - B["uv"] * (B["uu"] + B["vv"])
           - A["uu"] * B["uu"] + A["vv"] * B["vv"]) / omega0
    ) / 16.0
    return HopfData(b0=b0, lam=lam, subcritical=lam > 0)
