"""Closed-form Gumbel algebra and the discount-mismatch KL bound.

The three algebra rules: an affine map k*X + c of a Gumbel stays Gumbel; the
max of independent equal-scale Gumbels is Gumbel with a log-sum-exp location;
the difference of two independent equal-scale Gumbels is Logistic.  On top of
those sit upper bounds for E[exp(-X)] and E[X exp(-X)] under Gumbel(a, 1), and
a closed-form bound on KL(Gumbel(g*a, g*b) || Gumbel(a, b)) for a discount
g in (0, 1), checked against an adaptive-Simpson evaluation of the exact KL.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .distributions import EULER_MASCHERONI, DistSpec, Family
from .errors import DomainError, QuadratureError, ScaleMismatchError

# Constant from bounding int exp(-(2x+e^-x)) dx piecewise over
# (-inf,-5], [-5,0], [0,inf):  20/e^2 + 10*exp(-sqrt(e)) + 1/2 - 1/(2e).
EXP_MOMENT_CONST = (
    20.0 / math.e**2 + 10.0 * math.exp(-math.exp(0.5)) + 0.5 - 0.5 / math.e
)


def gumbel_shift_scale(d: DistSpec, c: float, k: float) -> DistSpec:
    """Law of k*X + c for X ~ d (Gumbel); requires k > 0."""
    _require_gumbel(d, "gumbel_shift_scale")
    if not k > 0:
        raise DomainError(f"scale factor must be positive, got {k}")
    return DistSpec(Family.GUMBEL, k * d.location + c, k * d.scale)


def gumbel_max(locations, beta: float) -> DistSpec:
    """Law of max_i X_i for independent X_i ~ Gumbel(locations[i], beta).

    The location is beta * logsumexp(locations / beta), computed with
    max-subtraction so large location/beta ratios cannot overflow.
    """
    locs = np.asarray(locations, dtype=float)
    if locs.size == 0:
        raise DomainError("gumbel_max requires at least one location")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return DistSpec(Family.GUMBEL, beta * float(logsumexp(locs / beta)), beta)


def gumbel_difference(x: DistSpec, y: DistSpec, rel_tol: float = 1e-12) -> DistSpec:
    """Law of X - Y for independent Gumbels with equal scales.

    The closure into the Logistic family is exact only for equal scales (the
    sum X + Y is *not* Logistic), so unequal scales are an error; the relative
    tolerance admits inputs that differ by floating-point round-off only.
    """
    _require_gumbel(x, "gumbel_difference")
    _require_gumbel(y, "gumbel_difference")
    if abs(x.scale - y.scale) > rel_tol * max(abs(x.scale), abs(y.scale)):
        raise ScaleMismatchError(
            f"gumbel_difference requires equal scales, got {x.scale} and {y.scale}"
        )
    return DistSpec(Family.LOGISTIC, x.location - y.location, x.scale)


def gumbel_exp_moment_bounds(a: float) -> tuple[float, float]:
    """Upper bounds for E[exp(-X)] and E[X exp(-X)] when X ~ Gumbel(a, 1).

    Returns ``(bound_exp, bound_xexp)``.  Both are strict upper bounds, not
    suprema:  the exact moments are exp(-a) and (a + v - 1) exp(-a), with v
    the Euler-Mascheroni constant.
    """
    bound_exp = EXP_MOMENT_CONST * math.exp(-a)
    if a > 0:
        bound_xexp = (0.15 + a * EXP_MOMENT_CONST) * math.exp(-a)
    else:
        bound_xexp = 0.15 * math.exp(-a)
    return bound_exp, bound_xexp


class KlBranch(str, Enum):
    A_POSITIVE = "APositive"
    A_NONPOSITIVE = "ANonpositive"


@dataclass(frozen=True)
class KlBoundReport:
    """Closed-form KL bound next to the numerically evaluated KL."""

    a_star: float
    gamma: float
    bound: float
    numeric_kl: float
    branch: KlBranch

    @property
    def dominated(self) -> bool:
        return self.numeric_kl <= self.bound

    def to_json(self) -> str:
        return json.dumps(
            {
                "a_star": self.a_star,
                "gamma": self.gamma,
                "bound": self.bound,
                "numeric_kl": self.numeric_kl,
                "branch": self.branch.value,
                "dominated": self.dominated,
            },
            sort_keys=True,
        )


def _adaptive_simpson(f, lo, hi, tol, max_depth=48):
    """Recursive adaptive Simpson with a Richardson acceptance test.

    The per-side tolerance halves with depth (so local errors sum below the
    global target) but is floored near machine epsilon: once the residual is
    round-off relative to the local integral, further splitting only churns.
    """

    def simpson(a, b, fa, fm, fb):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, eps, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(a, m, fa, flm, fm)
        right = simpson(m, b, fm, frm, fb)
        resid = left + right - whole
        noise = 2e-16 * (abs(left) + abs(right)) + 1e-300
        if abs(resid) <= 15.0 * eps or abs(resid) <= noise:
            return left + right + resid / 15.0
        if depth <= 0:
            raise QuadratureError(
                f"adaptive Simpson failed to converge on [{a}, {b}] "
                f"(residual {abs(resid):.3e}, tol {eps:.3e})"
            )
        child_eps = max(0.5 * eps, 1e-18)
        return recurse(a, m, fa, flm, fm, left, child_eps, depth - 1) + recurse(
            m, b, fm, frm, fb, right, child_eps, depth - 1
        )

    fa, fb, fm = f(lo), f(hi), f(0.5 * (lo + hi))
    whole = simpson(lo, hi, fa, fm, fb)
    return recurse(lo, hi, fa, fm, fb, whole, tol, max_depth)


def kl_numeric(a: float, b: float, gamma: float) -> float:
    """KL(Gumbel(gamma*a, gamma*b) || Gumbel(a, b)) by adaptive quadrature.

    Substituting u = (x - gamma*a)/(gamma*b) reduces the integral to one over
    a standard Gumbel weight that depends on (a/b, gamma) only, so the result
    is invariant under (a, b) -> (c*a, c*b) for c > 0.  The window
    u in [-15, 40] loses less than 1e-16 of standard-Gumbel mass.
    """
    if not b > 0:
        raise DomainError(f"scale b must be positive, got {b}")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    a_star = a / b
    shift = (1.0 - gamma) * a_star

    def integrand(u):
        weight = math.exp(-(u + math.exp(-u)))
        if weight == 0.0:
            return 0.0
        log_ratio = (
            -math.log(gamma)
            - (1.0 - gamma) * (u + a_star)
            - math.exp(-u)
            + math.exp(shift - gamma * u)
        )
        return weight * log_ratio

    # 1e-12 on the integrand keeps the *result* inside 1e-9 even when the KL
    # is a small difference of O(0.1) pieces.
    val = _adaptive_simpson(integrand, -15.0, 40.0, 1e-12)
    if val < -1e-9:
        raise QuadratureError(f"KL quadrature returned {val} < 0 beyond tolerance")
    return max(val, 0.0)


def kl_bound(a_star: float, gamma: float) -> KlBoundReport:
    """Closed-form upper bound for the discount-mismatch KL at ratio a_star.

    For a_star > 0 the bound is
        log(1/g) + (1-g) * [a_star*(EXP_MOMENT_CONST - 1) + 3/20 - v],
    and for a_star <= 0
        log(1/g) + (1-g) * [3/20 - a_star - v].
    The report also carries the quadrature value of the exact KL; the bound
    genuinely dominates only when (1-g)*a_star is small (the regime the
    derivation assumes), which is why the report exposes both numbers instead
    of asserting the comparison.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    v = EULER_MASCHERONI
    if a_star > 0:
        branch = KlBranch.A_POSITIVE
        bound = math.log(1.0 / gamma) + (1.0 - gamma) * (
            a_star * (EXP_MOMENT_CONST - 1.0) + 0.15 - v
        )
    else:
        branch = KlBranch.A_NONPOSITIVE
        bound = math.log(1.0 / gamma) + (1.0 - gamma) * (0.15 - a_star - v)
    numeric = kl_numeric(a_star, 1.0, gamma)
    return KlBoundReport(a_star=a_star, gamma=gamma, bound=bound, numeric_kl=numeric, branch=branch)


def _require_gumbel(d: DistSpec, op: str) -> None:
    if d.family is not Family.GUMBEL:
        raise DomainError(f"{op} requires a Gumbel input, got {d.family.value}")
