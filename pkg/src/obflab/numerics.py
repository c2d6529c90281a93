"""Special functions and adaptive quadrature shared by the analytic modules.

The analytic SINR distributions are built almost entirely out of upper
incomplete gamma functions of integer order (positive and non-positive)
and low-dimensional adaptive quadrature.  Everything here is a pure
function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureSpec",
    "QuadratureError",
    "exp_integral_e1",
    "upper_incomplete_gamma",
    "upper_incomplete_gamma_array",
    "integrate_1d",
    "integrate_semi_infinite",
    "integrate_nested",
    "gauss_legendre_nodes",
]

_EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and subdivision budget for adaptive quadrature."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tightened(self, decades: int = 1) -> "QuadratureSpec":
        """Same budget with tolerances shrunk by a factor 10**decades."""
        return QuadratureSpec(
            self.rel_tol * 10.0 ** (-decades),
            self.abs_tol * 10.0 ** (-decades),
            self.max_subdivisions,
        )


class QuadratureError(RuntimeError):
    """Raised when adaptive subdivision fails to meet the tolerances.

    Carries the best estimate and its error bound so callers can decide
    whether to accept a degraded result.
    """

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (estimate={estimate!r}, error_bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) = int_x^inf e^-t / t dt for x > 0.

    Power series below x = 1, modified-Lentz continued fraction above;
    the split keeps both branches free of cancellation.
    """
    if x <= 0:
        raise ValueError("exp_integral_e1 requires x > 0")
    if x <= 1.0:
        # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
        total = -_EULER_GAMMA - math.log(x)
        term = 1.0
        for k in range(1, 60):
            term *= -x / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-17 * abs(total):
                break
        return total
    if x > 700.0:
        return 0.0
    # Continued fraction: E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for k in range(1, 200):
        a = -(k * k)
        b += 2.0
        d = b + a * d
        if abs(d) < tiny:
            d = tiny
        c = b + a / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return math.exp(-x) * h


@lru_cache(maxsize=1 << 16)
def upper_incomplete_gamma(s: int, x: float) -> float:
    """Upper incomplete gamma Gamma(s, x) for integer s, x > 0.

    Positive order uses the terminating expansion
    Gamma(s, x) = (s-1)! e^-x sum_{i<s} x^i / i!, evaluated in log space
    so large x or s cannot overflow the intermediate terms.  Non-positive
    order descends the recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x)/s
    from the anchor Gamma(0, x) = E1(x); each step divides by s, so the
    relative error stays bounded on the way down.
    """
    s = int(s)
    if x < 0 or (x <= 0 and s <= 0):
        raise ValueError(f"Gamma({s}, {x}) outside the supported domain")
    if s >= 1:
        if x == 0.0:
            return math.gamma(s)
        if x < 650.0 and (s - 1) * math.log(max(x, 1.0)) < 650.0:
            term = 1.0
            acc = 1.0
            for i in range(1, s):
                term *= x / i
                acc += term
            return math.gamma(s) * math.exp(-x) * acc
        # log-space fallback: ln (s-1)! - x + i ln x - ln i!
        lg = math.lgamma(s)
        logs = [lg - x + i * math.log(x) - math.lgamma(i + 1) for i in range(s)]
        m = max(logs)
        if m < -745.0:
            return 0.0
        acc = math.fsum(math.exp(v - m) for v in logs)
        return math.exp(m) * acc
    g = exp_integral_e1(x)  # Gamma(0, x)
    order = 0
    log_x = math.log(x)
    while order > s:
        order -= 1
        g = (g - math.exp(order * log_x - x)) / order
    return g


def upper_incomplete_gamma_array(s: int, x: np.ndarray) -> np.ndarray:
    """Vectorised Gamma(s, x) for integer s over an array of x > 0.

    Positive order delegates to the regularised routine in scipy; the
    non-positive orders descend the same recurrence as the scalar
    version, anchored at Gamma(0, x) = E1(x).
    """
    from scipy import special

    s = int(s)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or (s <= 0 and np.any(x <= 0)):
        raise ValueError("x must be positive (nonnegative for s >= 1)")
    if s >= 1:
        return special.gammaincc(s, x) * math.gamma(s)
    g = special.exp1(x)
    order = 0
    log_x = np.log(x)
    while order > s:
        order -= 1
        g = (g - np.exp(order * log_x - x)) / order
    return g


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Adaptive quadrature of f over the finite interval [a, b]."""
    if a > b:
        raise ValueError("integrate_1d requires a <= b")
    if a == b:
        return 0.0
    out = integrate.quad(
        f,
        a,
        b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    value, err = out[0], out[1]
    if len(out) > 3:  # warning slot populated -> tolerance not met
        raise QuadratureError("integrate_1d did not converge", value, err)
    return value


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float = 0.0,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Integrate f over [a, inf) via the substitution y = a + u/(1-u).

    The substitution maps [0, 1) onto the half line and concentrates
    nodes near a, which suits the exponentially decaying integrands used
    throughout this package.
    """
    if a < 0:
        raise ValueError("integrate_semi_infinite requires a >= 0")

    def g(u: float) -> float:
        w = 1.0 - u
        return f(a + u / w) / (w * w)

    return integrate_1d(g, 0.0, 1.0, spec)


def integrate_nested(
    f: Callable[..., float],
    bounds: Sequence[tuple],
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Nested adaptive quadrature over up to three levels.

    ``bounds`` lists (lower, upper) pairs from the outermost variable
    inward; either bound may be a callable receiving the outer variables
    accumulated so far.  ``f`` receives the variables in the same order.
    Inner tolerances are tightened by one decade per level so the outer
    estimate is not polluted by inner noise.
    """
    if not 1 <= len(bounds) <= 3:
        raise ValueError("integrate_nested supports 1 to 3 levels")

    def _resolve(bound, outer):
        return bound(*outer) if callable(bound) else float(bound)

    def _level(idx: int, outer: tuple) -> float:
        lo = _resolve(bounds[idx][0], outer)
        hi = _resolve(bounds[idx][1], outer)
        if hi <= lo:
            return 0.0
        level_spec = spec.tightened(idx)
        if idx == len(bounds) - 1:
            return integrate_1d(lambda v: f(*outer, v), lo, hi, level_spec)
        return integrate_1d(lambda v: _level(idx + 1, outer + (v,)), lo, hi, level_spec)

    return _level(0, ())


def gauss_legendre_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w
