"""Laplace-domain primitives and numerical inverse-Laplace engines.

Everything downstream funnels through here: the per-receiver absorption
transforms are inverted numerically (Gaver-Stehfest on the real axis by
default, fixed-Talbot contour as an independent cross-check), and eventual
absorption fractions come from the final-value limit s*F(s) as s -> 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import mpmath
import numpy as np

from .errors import ConfigError, ConvergenceError, InversionError

__all__ = [
    "LaplaceFn",
    "InversionConfig",
    "p_bar_laplace",
    "stehfest_weights",
    "invert",
    "final_value",
]

# A Laplace-domain scalar function. Gaver-Stehfest evaluates it on the
# positive real axis only; the Talbot contour feeds it complex s with
# nonzero imaginary part (possibly negative real part), so implementations
# must accept both.
Scalar = Union[float, complex]
LaplaceFn = Callable[[Scalar], Scalar]

_METHODS = ("gaver-stehfest", "talbot")

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class InversionConfig:
    """How to invert: method, term/node count, and the accuracy target.

    ``abs_tol`` is the absolute accuracy the caller wants; it drives the
    final-value refinement loop and the CLI comparison gates. The fixed-order
    quadratures themselves do not iterate on it.
    """

    method: str = "gaver-stehfest"
    order: int = 14
    abs_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown inversion method {self.method!r}; choose from {_METHODS}")
        if not isinstance(self.order, int) or isinstance(self.order, bool):
            raise ConfigError(f"inversion order must be an integer, got {self.order!r}")
        if self.method == "gaver-stehfest":
            # Double precision: below 8 the result is crude, above 18 the
            # weight cancellation eats all the accuracy gained.
            if self.order % 2 != 0 or not 8 <= self.order <= 18:
                raise ConfigError(
                    f"gaver-stehfest order must be even and within [8, 18], got {self.order}"
                )
        elif self.order < 2:
            raise ConfigError(f"talbot node count must be at least 2, got {self.order}")
        if not (self.abs_tol > 0):
            raise ConfigError(f"abs_tol must be positive, got {self.abs_tol}")


def p_bar_laplace(s: Scalar, x: float, a: float, d_coeff: float) -> Scalar:
    """Laplace transform of the single-sphere absorption CDF.

    Returns (a/(s*x)) * exp(-(x-a)*sqrt(s/D)) for a target point at distance
    ``x`` from the center of a single absorbing sphere of radius ``a``.
    Real positive ``s`` returns a float; complex ``s`` (needed by the Talbot
    contour) is evaluated on the principal branch of the square root.
    """
    if not (a > 0) or not (d_coeff > 0):
        raise ValueError(f"need a > 0 and D > 0, got a={a}, D={d_coeff}")
    if x < a:
        raise ValueError(f"x must be at least a, got x={x} < a={a}")
    if s == 0:
        raise ValueError("s=0 is a pole of the transform; use final_value for the t->inf limit")
    if isinstance(s, complex):
        return (a / (s * x)) * cmath.exp(-(x - a) * cmath.sqrt(s / d_coeff))
    if s < 0:
        raise ValueError(f"real s must be positive, got {s}")
    return (a / (s * x)) * math.exp(-(x - a) * math.sqrt(s / d_coeff))


@lru_cache(maxsize=None)
def stehfest_weights(order: int) -> np.ndarray:
    """Gaver-Stehfest summation weights V_1..V_order.

    Computed once per order in 60-digit arithmetic: the alternating binomial
    sums cancel catastrophically in double precision from order ~16 up.
    The exact weights satisfy sum(V_k / k) = 1 (the transform pair 1/s <-> 1).
    """
    if order % 2 != 0 or order < 2:
        raise ConfigError(f"gaver-stehfest order must be a positive even integer, got {order}")
    half = order // 2
    with mpmath.workdps(60):
        weights = []
        for k in range(1, order + 1):
            total = mpmath.mpf(0)
            for j in range((k + 1) // 2, min(k, half) + 1):
                total += (
                    mpmath.mpf(j) ** half
                    * mpmath.factorial(2 * j)
                    / (
                        mpmath.factorial(half - j)
                        * mpmath.factorial(j)
                        * mpmath.factorial(j - 1)
                        * mpmath.factorial(k - j)
                        * mpmath.factorial(2 * j - k)
                    )
                )
            sign = -1 if (k + half) % 2 else 1
            weights.append(float(sign * total))
    out = np.array(weights)
    out.setflags(write=False)
    return out


def _eval_node(f: LaplaceFn, s: Scalar) -> Scalar:
    try:
        val = f(s)
    except OverflowError as exc:
        raise InversionError(f"transform evaluation overflowed at s={s}") from exc
    if isinstance(val, complex):
        if not (math.isfinite(val.real) and math.isfinite(val.imag)):
            raise InversionError(f"transform evaluated to a non-finite value at s={s}: {val}")
        return val
    val = float(val)
    if not math.isfinite(val):
        raise InversionError(f"transform evaluated to a non-finite value at s={s}: {val}")
    return val


def _invert_stehfest(f: LaplaceFn, t: float, order: int) -> float:
    ln2_t = math.log(2.0) / t
    weights = stehfest_weights(order)
    terms = []
    for k in range(1, order + 1):
        val = _eval_node(f, k * ln2_t)
        if isinstance(val, complex):
            # Transforms of real time functions are real on the real axis;
            # a residual imaginary part is representation noise.
            val = val.real
        terms.append(weights[k - 1] * val)
    # fsum: the terms cancel by design, often over several orders of magnitude.
    return ln2_t * math.fsum(terms)


def _invert_talbot(f: LaplaceFn, t: float, order: int) -> float:
    # Fixed-Talbot rule: one real node at r plus order-1 nodes on the
    # cotangent contour s(theta) = r*theta*(cot(theta) + i).
    r = 2.0 * order / (5.0 * t)
    val0 = _eval_node(f, r)
    if isinstance(val0, complex):
        val0 = val0.real
    total = 0.5 * math.exp(r * t) * val0
    for k in range(1, order):
        theta = k * math.pi / order
        cot = math.cos(theta) / math.sin(theta)
        s = r * theta * complex(cot, 1.0)
        sigma = theta + (theta * cot - 1.0) * cot
        val = complex(_eval_node(f, s))
        try:
            total += (cmath.exp(t * s) * val * complex(1.0, sigma)).real
        except OverflowError as exc:
            raise InversionError(f"talbot node term overflowed at s={s}") from exc
    result = (r / order) * total
    if not math.isfinite(result):
        raise InversionError(f"talbot summation produced a non-finite value at t={t}")
    return result


def invert(f: LaplaceFn, t: float, cfg: InversionConfig | None = None) -> float:
    """Numerically invert the Laplace transform ``f`` at time ``t``."""
    if cfg is None:
        cfg = InversionConfig()
    if not (t > 0):
        raise ValueError(f"inversion time must be positive, got t={t}")
    if cfg.method == "gaver-stehfest":
        result = _invert_stehfest(f, t, cfg.order)
    else:
        result = _invert_talbot(f, t, cfg.order)
    if not math.isfinite(result):
        raise InversionError(f"inversion produced a non-finite value at t={t}")
    return result


def final_value(
    f: LaplaceFn,
    abs_tol: float = 1e-10,
    s0: float = 1e-3,
    max_refine: int = 40,
) -> float:
    """Limit of s*f(s) as s -> 0+, i.e. the t -> infinity value of f's inverse.

    The absorption transforms behave like L + c*sqrt(s) + O(s) near s = 0, so
    each halving of s shrinks the leading error by sqrt(2); one Richardson
    step per level removes it. Stops when successive extrapolants agree
    within ``abs_tol``.
    """
    if not (abs_tol > 0) or not (s0 > 0):
        raise ValueError(f"abs_tol and s0 must be positive, got {abs_tol}, {s0}")

    def g(s: float) -> float:
        val = _eval_node(f, s)
        if isinstance(val, complex):
            val = val.real
        return s * val

    s = s0
    g_prev = g(s)
    extrap_prev = None
    for _ in range(max_refine):
        s *= 0.5
        g_cur = g(s)
        extrap = g_cur + (g_cur - g_prev) / (_SQRT2 - 1.0)
        if extrap_prev is not None and abs(extrap - extrap_prev) < abs_tol:
            return extrap
        g_prev = g_cur
        extrap_prev = extrap
    raise ConvergenceError(
        f"final value did not settle within {max_refine} refinements "
        f"(last estimate {extrap_prev})",
        partial=extrap_prev,
    )
