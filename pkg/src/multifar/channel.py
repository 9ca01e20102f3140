"""Hitting-probability models for absorbing spherical receivers.

Five analytical routes, from most special to most general:

- ``hit_single``: one receiver, exact closed form.
- ``hit_two``: two receivers, closed-form series built on the closest-point
  coupling approximation.
- ``hit_three``: three receivers, Laplace-domain rational solution inverted
  numerically.
- ``hit_symmetric``: three receivers in the equidistant (circular-array)
  arrangement, closed-form alternating series.
- ``hit_n``: any N, dense linear system in the Laplace domain inverted
  numerically; plus its t -> infinity limit ``hit_n_asymptotic``.

All multi-receiver models share one approximation: a molecule absorbed by a
competitor is assumed to have been absorbed at the competitor's surface point
nearest the transmitter, which couples receivers through the distances R_ij.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, SingularSystemError
from .geometry import SystemGeometry, proxy_distance, radial_distance
from .laplace import InversionConfig, LaplaceFn, Scalar, final_value, invert, p_bar_laplace

__all__ = [
    "MODELS",
    "SeriesConfig",
    "HittingCurve",
    "SeriesResult",
    "hit_single",
    "hit_two",
    "three_far_transform",
    "hit_three",
    "symmetric_series",
    "hit_symmetric",
    "hit_symmetric_asymptotic",
    "n_far_transforms",
    "n_far_transform",
    "hit_n",
    "hit_n_asymptotic",
    "is_uca",
    "resolve_model",
    "hitting_curve",
]

MODELS = ("single", "two", "three", "symmetric", "n-general", "simulation")


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation policy for the closed-form series models."""

    rel_tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0):
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if not isinstance(self.max_terms, int) or self.max_terms < 1:
            raise ConfigError(f"max_terms must be a positive integer, got {self.max_terms}")


class SeriesResult(NamedTuple):
    """A truncated series value with its remainder bound and term count."""

    value: float
    error_bound: float
    terms: int


@dataclass(frozen=True, eq=False)
class HittingCurve:
    """Per-receiver absorption probability sampled on an ascending time grid.

    ``probs[i]`` is the curve for receiver i+1. Probabilities must lie in
    [0, 1] and be nondecreasing in time, both within ``slack``. The default
    slack suits the closed-form series and the talbot inverter; curves from
    the default gaver-stehfest inverter need the looser value that
    hitting_curve passes for them, because that method's truncation error
    near curve onset reaches a few 1e-7 regardless of configuration.
    """

    times: np.ndarray
    probs: np.ndarray
    model: str
    slack: float = 1e-9

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        probs = np.atleast_2d(np.asarray(self.probs, dtype=float))
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if not 0.0 < self.slack <= 1e-3:
            raise ValueError(f"slack must be in (0, 1e-3], got {self.slack}")
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly ascending")
        if probs.shape[1] != times.size:
            raise ValueError(f"probs shape {probs.shape} does not match {times.size} time points")
        if np.any(probs < -self.slack) or np.any(probs > 1.0 + self.slack):
            raise ValueError("probabilities out of [0, 1]")
        if probs.shape[1] > 1 and np.any(np.diff(probs, axis=1) < -self.slack):
            raise ValueError("probabilities must be nondecreasing in time")
        times.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)


def _check_time(t: float) -> None:
    # math.inf is a valid query: every model has a well-defined limit.
    if not (t > 0):
        raise ValueError(f"time must be positive, got t={t}")


def hit_single(t: float, r: float, a: float, d_coeff: float) -> float:
    """Probability that a lone sphere at distance ``r`` absorbs by time ``t``.

    (a/r) * erfc((r-a)/sqrt(4*D*t)); tends to the escape-complement a/r as
    t -> infinity (math.inf is accepted).
    """
    if not (a > 0) or not (d_coeff > 0):
        raise ValueError(f"need a > 0 and D > 0, got a={a}, D={d_coeff}")
    if r <= a:
        raise ValueError(f"transmitter distance must exceed the radius, got r={r} <= a={a}")
    _check_time(t)
    if math.isinf(t):
        return a / r
    return (a / r) * math.erfc((r - a) / math.sqrt(4.0 * d_coeff * t))


def hit_two(
    t: float,
    geom: SystemGeometry,
    target: int,
    cfg: SeriesConfig | None = None,
) -> float:
    """Absorption probability at ``target`` in a two-receiver scene.

    Closed-form series in powers of rho = a^2/(R_12*R_21); rho < 1 for every
    non-overlapping geometry, so the tail is geometrically bounded and the
    series is truncated once the rho^n prefactor drops below rel_tol.
    """
    if cfg is None:
        cfg = SeriesConfig()
    if geom.n != 2:
        raise ValueError(f"hit_two needs exactly two receivers, got {geom.n}")
    if target not in (1, 2):
        raise ValueError(f"target must be 1 or 2, got {target}")
    _check_time(t)
    other = 2 if target == 1 else 1
    a = geom.radius_a
    r1 = radial_distance(geom, target)
    r2 = radial_distance(geom, other)
    r12 = proxy_distance(geom, target, other)
    r21 = proxy_distance(geom, other, target)
    rho = a * a / (r12 * r21)
    if not rho < 1.0:
        raise ConvergenceError(f"series ratio a^2/(R_12*R_21) = {rho} is not below 1")
    den = math.sqrt(4.0 * geom.diffusion_d * t)

    def erfc_at(dist: float) -> float:
        return 1.0 if math.isinf(t) else math.erfc(dist / den)

    total = 0.0
    prefactor = 1.0
    for n in range(cfg.max_terms):
        gain = (a / r1) * erfc_at(r1 - a + n * (r21 - a) + n * (r12 - a))
        loss = (a * a / (r2 * r21)) * erfc_at(r2 - a + (n + 1) * (r21 - a) + n * (r12 - a))
        total += prefactor * (gain - loss)
        prefactor *= rho
        if prefactor < cfg.rel_tol:
            return total
    raise ConvergenceError(
        f"two-receiver series did not converge within {cfg.max_terms} terms "
        f"(rho={rho:.6g})",
        partial=total,
    )


def _relabel_three(geom: SystemGeometry, target: int) -> tuple[list[float], dict[tuple[int, int], float]]:
    """Radial and coupling distances under the cyclic relabeling target -> 1."""
    if geom.n != 3:
        raise ValueError(f"need exactly three receivers, got {geom.n}")
    if target not in (1, 2, 3):
        raise ValueError(f"target must be 1, 2 or 3, got {target}")
    order = [(target - 1 + k) % 3 + 1 for k in range(3)]
    r = [radial_distance(geom, i) for i in order]
    cpl = {}
    for p in range(3):
        for q in range(3):
            if p != q:
                cpl[(p + 1, q + 1)] = proxy_distance(geom, order[p], order[q])
    return r, cpl


def three_far_transform(geom: SystemGeometry, target: int) -> LaplaceFn:
    """Laplace transform of the target's absorption CDF among three receivers.

    Closed-form solution of the 3x3 coupling system; the competing receivers
    enter through first- and second-order correction terms in the numerator
    and the pair/cycle products in the denominator.
    """
    (r1, r2, r3), cpl = _relabel_three(geom, target)
    a = geom.radius_a
    dd = geom.diffusion_d

    def transform(s: Scalar) -> Scalar:
        p_r1 = p_bar_laplace(s, r1, a, dd)
        p_r2 = p_bar_laplace(s, r2, a, dd)
        p_r3 = p_bar_laplace(s, r3, a, dd)
        p12 = p_bar_laplace(s, cpl[(1, 2)], a, dd)
        p13 = p_bar_laplace(s, cpl[(1, 3)], a, dd)
        p21 = p_bar_laplace(s, cpl[(2, 1)], a, dd)
        p23 = p_bar_laplace(s, cpl[(2, 3)], a, dd)
        p31 = p_bar_laplace(s, cpl[(3, 1)], a, dd)
        p32 = p_bar_laplace(s, cpl[(3, 2)], a, dd)
        alpha = p_r2 * p21 + p_r3 * p31
        beta = -p_r1 * p23 * p32 + p_r2 * p23 * p31 + p_r3 * p32 * p21
        gamma = p12 * p21 + p32 * p23 + p13 * p31
        delta = p12 * p23 * p31 + p13 * p32 * p21
        return (p_r1 - s * alpha + s * s * beta) / (1.0 - s * s * gamma + s**3 * delta)

    return transform


def hit_three(
    t: float,
    geom: SystemGeometry,
    target: int,
    inv_cfg: InversionConfig | None = None,
) -> float:
    """Absorption probability at ``target`` among three receivers by time ``t``."""
    transform = three_far_transform(geom, target)
    if math.isinf(t):
        tol = inv_cfg.abs_tol if inv_cfg is not None else 1e-10
        return final_value(transform, abs_tol=tol)
    _check_time(t)
    return invert(transform, t, inv_cfg)


def symmetric_series(
    t: float,
    r: float,
    big_r: float,
    a: float,
    d_coeff: float,
    cfg: SeriesConfig | None = None,
) -> SeriesResult:
    """Equidistant three-receiver series with its alternating remainder bound.

    (a/r) * sum_n (-2a/R)^n * erfc((r - a + n*(R - a)) / sqrt(4*D*t)).
    The terms alternate with strictly decreasing magnitude (erfc arguments
    grow with n because R > a), so the first omitted term bounds the error.
    Requires 2a/R < 1, which every non-overlapping arrangement satisfies.
    """
    if cfg is None:
        cfg = SeriesConfig()
    if not (a > 0) or not (d_coeff > 0):
        raise ValueError(f"need a > 0 and D > 0, got a={a}, D={d_coeff}")
    if r <= a:
        raise ValueError(f"transmitter distance must exceed the radius, got r={r} <= a={a}")
    if big_r <= a:
        raise ValueError(f"coupling distance must exceed the radius, got R={big_r} <= a={a}")
    _check_time(t)
    q = 2.0 * a / big_r
    if not q < 1.0:
        raise ConvergenceError(f"series ratio 2a/R = {q} is not below 1; receivers too close")
    den = math.sqrt(4.0 * d_coeff * t)

    def term(n: int) -> float:
        arg = 0.0 if math.isinf(t) else (r - a + n * (big_r - a)) / den
        return (a / r) * (-q) ** n * math.erfc(arg)

    total = 0.0
    for n in range(cfg.max_terms):
        cur = term(n)
        total += cur
        nxt = abs(term(n + 1))
        if nxt < cfg.rel_tol * abs(total) or nxt == 0.0:
            return SeriesResult(value=total, error_bound=nxt, terms=n + 1)
    raise ConvergenceError(
        f"symmetric series did not converge within {cfg.max_terms} terms (2a/R={q:.6g})",
        partial=total,
    )


def hit_symmetric(
    t: float,
    r: float,
    big_r: float,
    a: float,
    d_coeff: float,
    cfg: SeriesConfig | None = None,
) -> float:
    """Absorption probability for one of three equidistant receivers."""
    return symmetric_series(t, r, big_r, a, d_coeff, cfg).value


def hit_symmetric_asymptotic(r: float, big_r: float, a: float) -> float:
    """Eventual absorption fraction per receiver in the equidistant arrangement."""
    if not (a > 0):
        raise ValueError(f"radius must be positive, got {a}")
    if r <= a:
        raise ValueError(f"transmitter distance must exceed the radius, got r={r} <= a={a}")
    if big_r <= 0:
        raise ValueError(f"coupling distance must be positive, got {big_r}")
    return (a / r) / (1.0 + 2.0 * a / big_r)


def n_far_transforms(geom: SystemGeometry, s: Scalar) -> np.ndarray:
    """All N absorption transforms at one Laplace variable ``s``.

    Solves the coupling system H_i + sum_{j != i} s*Pbar(s, R_ji)*H_j =
    Pbar(s, r_i). Returns a length-N vector (complex when ``s`` is complex).
    """
    n = geom.n
    a = geom.radius_a
    dd = geom.diffusion_d
    dtype = complex if isinstance(s, complex) else float
    mat = np.eye(n, dtype=dtype)
    rhs = np.empty(n, dtype=dtype)
    for i in range(1, n + 1):
        rhs[i - 1] = p_bar_laplace(s, radial_distance(geom, i), a, dd)
        for j in range(1, n + 1):
            if j != i:
                mat[i - 1, j - 1] = s * p_bar_laplace(s, proxy_distance(geom, j, i), a, dd)
    try:
        return np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"coupling system is singular at s={s} "
            f"(condition estimate {np.linalg.cond(mat):.3e})"
        ) from exc


def n_far_transform(geom: SystemGeometry, target: int) -> LaplaceFn:
    """One receiver's transform as a scalar function of s (for inversion)."""
    if not 1 <= target <= geom.n:
        raise ValueError(f"unknown receiver index {target}; valid labels are 1..{geom.n}")

    def transform(s: Scalar) -> Scalar:
        val = n_far_transforms(geom, s)[target - 1]
        return complex(val) if isinstance(s, complex) else float(val)

    return transform


def hit_n(
    t: float,
    geom: SystemGeometry,
    target: int,
    inv_cfg: InversionConfig | None = None,
) -> float:
    """Absorption probability at ``target`` among N receivers by time ``t``."""
    if math.isinf(t):
        return float(hit_n_asymptotic(geom)[target - 1])
    _check_time(t)
    return invert(n_far_transform(geom, target), t, inv_cfg)


def hit_n_asymptotic(geom: SystemGeometry) -> np.ndarray:
    """Eventual absorption fraction of every receiver.

    The s -> 0 limit turns the coupling system into
    h_i + sum_{j != i} (a/R_ji)*h_j = a/r_i, solved directly.
    """
    n = geom.n
    a = geom.radius_a
    mat = np.eye(n)
    rhs = np.empty(n)
    for i in range(1, n + 1):
        rhs[i - 1] = a / radial_distance(geom, i)
        for j in range(1, n + 1):
            if j != i:
                mat[i - 1, j - 1] = a / proxy_distance(geom, j, i)
    try:
        return np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"limiting coupling system is singular "
            f"(condition estimate {np.linalg.cond(mat):.3e})"
        ) from exc


def is_uca(geom: SystemGeometry, rel_tol: float = 1e-9) -> bool:
    """Whether three receivers are equidistant from the origin and each other."""
    if geom.n != 3:
        return False
    r = [radial_distance(geom, i) for i in (1, 2, 3)]
    couplings = [proxy_distance(geom, i, j) for i in (1, 2, 3) for j in (1, 2, 3) if i != j]
    r_ref = r[0]
    c_ref = couplings[0]
    return all(abs(v - r_ref) <= rel_tol * r_ref for v in r) and all(
        abs(v - c_ref) <= rel_tol * c_ref for v in couplings
    )


def resolve_model(geom: SystemGeometry, model: str = "auto") -> str:
    """Pick the most specific analytical model for a geometry.

    "auto" resolves to: symmetric when the equidistant arrangement is
    detected (1e-9 relative), else the exact-N closed form (single, two,
    three), else the general linear-system model. An explicit model is
    checked for compatibility with the receiver count.
    """
    if model == "auto":
        if geom.n == 1:
            return "single"
        if geom.n == 2:
            return "two"
        if geom.n == 3:
            return "symmetric" if is_uca(geom) else "three"
        return "n-general"
    if model == "simulation" or model not in MODELS:
        raise ConfigError(f"unknown analytical model {model!r}")
    required = {"single": 1, "two": 2, "three": 3, "symmetric": 3}
    if model in required and geom.n != required[model]:
        raise ConfigError(
            f"model {model!r} needs exactly {required[model]} receiver(s), geometry has {geom.n}"
        )
    if model == "symmetric" and not is_uca(geom):
        raise ConfigError(
            "model 'symmetric' needs receivers equidistant from the origin and from each other"
        )
    return model


def hitting_curve(
    geom: SystemGeometry,
    times: Sequence[float],
    model: str = "auto",
    inv_cfg: InversionConfig | None = None,
    series_cfg: SeriesConfig | None = None,
) -> HittingCurve:
    """Evaluate the chosen model for every receiver over a time grid."""
    resolved = resolve_model(geom, model)
    times_arr = np.asarray(list(times), dtype=float)
    probs = np.empty((geom.n, times_arr.size))
    a = geom.radius_a
    dd = geom.diffusion_d
    for i in range(1, geom.n + 1):
        for k, t in enumerate(times_arr):
            if resolved == "single":
                val = hit_single(t, radial_distance(geom, i), a, dd)
            elif resolved == "two":
                val = hit_two(t, geom, i, series_cfg)
            elif resolved == "three":
                val = hit_three(t, geom, i, inv_cfg)
            elif resolved == "symmetric":
                val = hit_symmetric(
                    t, radial_distance(geom, i), proxy_distance(geom, i, i % 3 + 1), a, dd, series_cfg
                )
            else:
                val = hit_n(t, geom, i, inv_cfg)
            probs[i - 1, k] = val
    # Clamp within the route's noise floor only; anything worse is a real bug
    # and must fail HittingCurve validation. The gaver-stehfest floor is the
    # measured onset truncation error (worst -1.6e-7 over the tested scene
    # family) with margin; talbot and the closed-form series sit below 1e-9.
    slack = 1e-9
    if resolved in ("three", "n-general"):
        method = inv_cfg.method if inv_cfg is not None else "gaver-stehfest"
        if method == "gaver-stehfest":
            slack = 1e-6
    probs[(probs < 0.0) & (probs >= -slack)] = 0.0
    probs[(probs > 1.0) & (probs <= 1.0 + slack)] = 1.0
    return HittingCurve(times=times_arr, probs=probs, model=resolved, slack=slack)
