"""Security and cooperation figures of merit built on the channel models.

Two scenarios for one intended receiver among N:

- the other receivers are eavesdroppers: ``malicious_influence`` is the
  relative loss of the intended receiver's absorption probability;
- the other receivers cooperate: ``array_gain`` is the total absorption
  across all receivers normalized by a lone receiver's eventual fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError, MetricUndefinedError
from .channel import hit_n, hit_n_asymptotic, hit_single
from .geometry import Receiver, SystemGeometry, radial_distance
from .laplace import InversionConfig

__all__ = [
    "InfluenceResult",
    "ArrayGainResult",
    "malicious_influence",
    "malicious_influence_asymptotic_symmetric",
    "array_gain",
    "array_gain_asymptotic_symmetric",
    "mirrored_pair_geometry",
    "influence_vs_angle",
]

# Numerical inversion leaves ~1e-10 noise on probabilities; a nominally zero
# influence can come out at -1e-12. Anything beyond this is a real violation.
_NOISE = 1e-6


@dataclass(frozen=True)
class InfluenceResult:
    """Relative absorption loss q of one intended receiver at time t (or inf)."""

    t: float
    q: float
    target: int

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"influence must lie in [0, 1], got {self.q}")


@dataclass(frozen=True)
class ArrayGainResult:
    """Cooperative gain s of n_receivers receivers at time t (or inf)."""

    t: float
    s_gain: float
    n_receivers: int

    def __post_init__(self):
        if not self.s_gain >= 0.0:
            raise ValueError(f"array gain must be nonnegative, got {self.s_gain}")


def _clamp_unit(value: float, what: str) -> float:
    if -_NOISE < value < 0.0:
        return 0.0
    if 1.0 < value < 1.0 + _NOISE:
        return 1.0
    if not 0.0 <= value <= 1.0:
        raise MetricUndefinedError(f"{what} = {value} falls outside [0, 1] beyond noise level")
    return value


def malicious_influence(
    t: float,
    geom: SystemGeometry,
    target: int,
    inv_cfg: InversionConfig | None = None,
) -> InfluenceResult:
    """Fraction of the target's would-be absorptions lost to the other receivers.

    q = (p_alone - p_with_competitors) / p_alone at time ``t``; pass
    ``math.inf`` for the eventual fractions (computed from the s -> 0 limit
    rather than a large-t inversion).
    """
    r = radial_distance(geom, target)
    a = geom.radius_a
    if math.isinf(t):
        alone = a / r
        competing = float(hit_n_asymptotic(geom)[target - 1])
    else:
        alone = hit_single(t, r, a, geom.diffusion_d)
        if alone == 0.0:
            raise MetricUndefinedError(
                f"single-receiver probability underflows to 0 at t={t}; "
                "the relative influence is undefined this early"
            )
        competing = hit_n(t, geom, target, inv_cfg)
    q = _clamp_unit((alone - competing) / alone, "malicious influence")
    return InfluenceResult(t=t, q=q, target=target)


def malicious_influence_asymptotic_symmetric(a: float, big_r: float) -> InfluenceResult:
    """Eventual influence in the equidistant arrangement: 1/(1 + R/(2a))."""
    if not (a > 0) or not (big_r > 0):
        raise ValueError(f"need a > 0 and R > 0, got a={a}, R={big_r}")
    return InfluenceResult(t=math.inf, q=1.0 / (1.0 + big_r / (2.0 * a)), target=1)


def array_gain(
    t: float,
    geom: SystemGeometry,
    inv_cfg: InversionConfig | None = None,
) -> ArrayGainResult:
    """Total absorption across all receivers over the lone receiver 1's a/r_1.

    The denominator is the eventual single-receiver fraction (not the time-t
    value), so the gain starts near 0 and grows toward its limit.
    """
    a = geom.radius_a
    denom = a / radial_distance(geom, 1)
    if math.isinf(t):
        total = float(hit_n_asymptotic(geom).sum())
    else:
        total = math.fsum(hit_n(t, geom, i, inv_cfg) for i in range(1, geom.n + 1))
        total = max(total, 0.0)
    return ArrayGainResult(t=t, s_gain=total / denom, n_receivers=geom.n)


def array_gain_asymptotic_symmetric(a: float, big_r: float) -> ArrayGainResult:
    """Eventual gain of three equidistant receivers: 3/(1 + 2a/R), always < 3."""
    if not (a > 0) or not (big_r > 0):
        raise ValueError(f"need a > 0 and R > 0, got a={a}, R={big_r}")
    return ArrayGainResult(t=math.inf, s_gain=3.0 / (1.0 + 2.0 * a / big_r), n_receivers=3)


def mirrored_pair_geometry(
    r: float,
    theta: float,
    a: float,
    diffusion_d: float,
) -> SystemGeometry:
    """Intended receiver on the +x axis plus two receivers mirrored at +-theta.

    All three centers sit at distance ``r`` in the z = 0 plane: the intended
    receiver at [r, 0, 0] and the pair at angles +theta and -theta. At
    theta = pi the pair coincides at the antipode; the coupled equations then
    reduce exactly to a single receiver there (coincident absorbers split a
    single receiver's flux), so this builder returns the merged two-receiver
    scene. Angles where the pair overlaps without coinciding have no valid
    scene and raise GeometryError.
    """
    if not 0.0 < theta <= math.pi:
        raise GeometryError(f"mirror angle must lie in (0, pi], got {theta}")
    intended = Receiver(center=(r, 0.0, 0.0), index=1)
    x = r * math.cos(theta)
    y = r * math.sin(theta)
    # sin(pi) evaluates to ~1e-16, never exactly 0; coincidence needs a
    # relative threshold. Overlapping-but-distinct pairs fall through to the
    # constructor, which rejects them.
    if abs(y) < 1e-12 * r:
        return SystemGeometry(
            receivers=(intended, Receiver(center=(x, 0.0, 0.0), index=2)),
            radius_a=a,
            diffusion_d=diffusion_d,
        )
    return SystemGeometry(
        receivers=(
            intended,
            Receiver(center=(x, y, 0.0), index=2),
            Receiver(center=(x, -y, 0.0), index=3),
        ),
        radius_a=a,
        diffusion_d=diffusion_d,
    )


def influence_vs_angle(
    r: float,
    a: float,
    diffusion_d: float,
    t: float,
    thetas,
    inv_cfg: InversionConfig | None = None,
) -> list[tuple[float, InfluenceResult | None]]:
    """Influence on the intended receiver as the mirrored pair swings by theta.

    Returns one (theta, result) pair per requested angle; angles whose scene
    is geometrically infeasible (the mirrored receivers overlap each other or
    the intended one) yield None.
    """
    out: list[tuple[float, InfluenceResult | None]] = []
    for theta in thetas:
        try:
            geom = mirrored_pair_geometry(r, theta, a, diffusion_d)
        except GeometryError:
            out.append((theta, None))
            continue
        out.append((theta, malicious_influence(t, geom, target=1, inv_cfg=inv_cfg)))
    return out
