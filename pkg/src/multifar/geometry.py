"""Transmitter/receiver scene description and the distances the channel models consume.

Units are fixed package-wide: micrometers for lengths, seconds for times and
micrometers^2/second for the diffusion coefficient. The transmitter always
sits at the origin; every receiver is a sphere of the common radius
``radius_a`` that absorbs on first contact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GeometryError, InputError

__all__ = [
    "Receiver",
    "SystemGeometry",
    "GeometryReport",
    "radial_distance",
    "angle_between",
    "proxy_distance",
    "uca_geometry",
    "validate",
    "subset",
    "geometry_from_dict",
    "geometry_to_dict",
    "load_geometry",
]


def _as_point(value, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise GeometryError(f"{what} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{what} must be finite, got {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Receiver:
    """One absorbing sphere, identified by its 1-based index label.

    The center is stored as a read-only float64 3-vector in micrometers.
    """

    center: np.ndarray
    index: int

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center, f"receiver {self.index} center"))
        if int(self.index) < 1:
            raise GeometryError(f"receiver index must be a positive integer, got {self.index}")
        object.__setattr__(self, "index", int(self.index))

    @property
    def radial(self) -> float:
        """Distance from the transmitter at the origin to this center."""
        return float(np.linalg.norm(self.center))


@dataclass(frozen=True, eq=False)
class SystemGeometry:
    """A complete scene: receivers, common radius and diffusion coefficient.

    Immutable after construction; construction enforces the hard invariants:
    positive radius and diffusion coefficient, transmitter strictly outside
    every sphere, and no pair of receivers overlapping or touching.
    """

    receivers: tuple[Receiver, ...]
    radius_a: float
    diffusion_d: float

    def __post_init__(self):
        recs = tuple(self.receivers)
        object.__setattr__(self, "receivers", recs)
        object.__setattr__(self, "radius_a", float(self.radius_a))
        object.__setattr__(self, "diffusion_d", float(self.diffusion_d))
        _check_invariants(recs, self.radius_a, self.diffusion_d)

    @property
    def n(self) -> int:
        return len(self.receivers)

    def centers(self) -> np.ndarray:
        """All receiver centers as an (N, 3) array (a fresh, writable copy)."""
        return np.array([r.center for r in self.receivers], dtype=float)

    def receiver(self, index: int) -> Receiver:
        """Look up a receiver by its 1-based label."""
        if not 1 <= index <= self.n:
            raise ValueError(f"unknown receiver index {index}; valid labels are 1..{self.n}")
        return self.receivers[index - 1]


@dataclass(frozen=True, eq=False)
class GeometryReport:
    """Distances and angles of a validated scene.

    ``phi`` and ``proxy_r`` are N x N with NaN on the diagonal (the quantities
    are only defined for pairs of distinct receivers). ``proxy_r[i][j]`` is
    the distance from the point of receiver i+1 nearest the transmitter to the
    center of receiver j+1; it is not symmetric in general.
    """

    r: np.ndarray
    phi: np.ndarray
    proxy_r: np.ndarray
    warnings: tuple[str, ...]

    def __post_init__(self):
        for name in ("r", "phi", "proxy_r"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "warnings", tuple(self.warnings))


def _check_invariants(receivers: Sequence[Receiver], radius_a: float, diffusion_d: float) -> None:
    if not receivers:
        raise GeometryError("geometry needs at least one receiver")
    if not (radius_a > 0) or not math.isfinite(radius_a):
        raise GeometryError(f"radius_a must be positive, got {radius_a}")
    if not (diffusion_d > 0) or not math.isfinite(diffusion_d):
        raise GeometryError(f"diffusion_d must be positive, got {diffusion_d}")
    labels = [rec.index for rec in receivers]
    if labels != list(range(1, len(receivers) + 1)):
        raise GeometryError(f"receiver labels must be consecutive 1..N in order, got {labels}")
    for rec in receivers:
        # Strict: a transmitter sitting exactly on a sphere surface is rejected.
        if rec.radial <= radius_a:
            raise GeometryError(
                f"transmitter lies inside or on receiver {rec.index} "
                f"(r={rec.radial:.6g} <= a={radius_a:.6g})"
            )
    for i, ri in enumerate(receivers):
        for rj in receivers[i + 1 :]:
            gap = float(np.linalg.norm(ri.center - rj.center))
            # Strict inequality: tangent spheres are rejected too.
            if gap <= 2.0 * radius_a:
                raise GeometryError(
                    f"receivers {ri.index} and {rj.index} overlap or touch "
                    f"(center distance {gap:.6g} <= 2a={2.0 * radius_a:.6g})"
                )


def radial_distance(geom: SystemGeometry, i: int) -> float:
    """Distance r_i from the transmitter to the center of receiver ``i``."""
    return geom.receiver(i).radial


def angle_between(geom: SystemGeometry, i: int, j: int) -> float:
    """Angle phi_ij between the directions to receivers ``i`` and ``j``, in [0, pi]."""
    if i == j:
        raise ValueError("angle_between needs two distinct receivers")
    a = geom.receiver(i)
    b = geom.receiver(j)
    cosang = float(np.dot(a.center, b.center)) / (a.radial * b.radial)
    return math.acos(min(1.0, max(-1.0, cosang)))


def proxy_distance(geom: SystemGeometry, i: int, j: int) -> float:
    """Distance R_ij from receiver i's nearest surface point to the center of receiver j.

    The nearest surface point is the point of sphere i closest to the
    transmitter, at distance r_i - a along the direction to A_i. Note
    R_ij != R_ji in general.
    """
    if i == j:
        raise ValueError("proxy_distance needs two distinct receivers")
    a = geom.radius_a
    ri = radial_distance(geom, i)
    rj = radial_distance(geom, j)
    phi = angle_between(geom, i, j)
    sq = (ri - a) ** 2 + rj**2 - 2.0 * (ri - a) * rj * math.cos(phi)
    return math.sqrt(max(sq, 0.0))


def uca_geometry(w: float, d: float, a: float, diffusion_d: float) -> SystemGeometry:
    """Three receivers on a circle of radius ``d`` centered at [w, 0, 0].

    The circle lies in the plane x = w, so all receivers share the radial
    distance sqrt(w^2 + d^2) and all mutual center distances are equal; every
    pairwise coupling distance comes out identical by symmetry.
    """
    receivers = []
    for i in (1, 2, 3):
        ang = 2.0 * math.pi * (i - 1) / 3.0
        receivers.append(Receiver(center=(w, d * math.cos(ang), d * math.sin(ang)), index=i))
    return SystemGeometry(receivers=tuple(receivers), radius_a=a, diffusion_d=diffusion_d)


def validate(geom: SystemGeometry) -> GeometryReport:
    """Compute the full r / phi / R report plus accuracy warnings.

    Pure and idempotent. Warnings flag configurations where the closest-point
    coupling model is known to degrade: receiver pairs closer than 4a, and a
    receiver sitting inside the transmitter's line-of-sight cone to another
    (cone half-width arcsin(a / r_blocker)). Warnings never block computation.
    """
    _check_invariants(geom.receivers, geom.radius_a, geom.diffusion_d)
    n = geom.n
    a = geom.radius_a
    r = np.array([rec.radial for rec in geom.receivers])
    phi = np.full((n, n), np.nan)
    proxy = np.full((n, n), np.nan)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            phi[i - 1, j - 1] = angle_between(geom, i, j)
            proxy[i - 1, j - 1] = proxy_distance(geom, i, j)

    warnings: list[str] = []
    for i in range(n):
        for j in range(i + 1, n):
            gap = float(np.linalg.norm(geom.receivers[i].center - geom.receivers[j].center))
            if gap < 4.0 * a:
                warnings.append(
                    f"receivers {i + 1} and {j + 1} are close (center distance "
                    f"{gap:.4g} < 4a = {4.0 * a:.4g}); model accuracy degrades at close range"
                )
    for i in range(n):
        for j in range(n):
            if i == j or not r[i] < r[j]:
                continue
            if phi[i, j] < math.asin(a / r[i]):
                warnings.append(
                    f"receiver {i + 1} shadows receiver {j + 1} from the transmitter's "
                    f"line of sight (phi={phi[i, j]:.4g} rad)"
                )
    return GeometryReport(r=r, phi=phi, proxy_r=proxy, warnings=tuple(warnings))


def subset(geom: SystemGeometry, labels: Iterable[int]) -> SystemGeometry:
    """A new geometry keeping only ``labels`` (in the given order), relabeled 1..k."""
    picked = [geom.receiver(i) for i in labels]
    if not picked:
        raise GeometryError("subset needs at least one receiver")
    recs = tuple(Receiver(center=rec.center, index=k + 1) for k, rec in enumerate(picked))
    return SystemGeometry(receivers=recs, radius_a=geom.radius_a, diffusion_d=geom.diffusion_d)


def geometry_from_dict(doc: dict) -> SystemGeometry:
    """Build a geometry from the JSON document schema.

    Expected fields: ``receivers`` (list of [x, y, z]), ``radius_a`` and
    ``diffusion_d``. Raises InputError for structural problems and
    GeometryError for invariant violations.
    """
    if not isinstance(doc, dict):
        raise InputError(f"geometry document must be a JSON object, got {type(doc).__name__}")
    missing = {"receivers", "radius_a", "diffusion_d"} - doc.keys()
    if missing:
        raise InputError(f"geometry document is missing fields: {sorted(missing)}")
    raw = doc["receivers"]
    if not isinstance(raw, list) or not raw:
        raise InputError("'receivers' must be a non-empty list of [x, y, z] centers")
    receivers = []
    for k, center in enumerate(raw):
        if not isinstance(center, (list, tuple)) or len(center) != 3:
            raise InputError(f"receiver {k + 1} center must be a 3-element list, got {center!r}")
        try:
            vals = tuple(float(c) for c in center)
        except (TypeError, ValueError) as exc:
            raise InputError(f"receiver {k + 1} center has a non-numeric entry: {center!r}") from exc
        receivers.append(Receiver(center=vals, index=k + 1))
    try:
        radius_a = float(doc["radius_a"])
        diffusion_d = float(doc["diffusion_d"])
    except (TypeError, ValueError) as exc:
        raise InputError("'radius_a' and 'diffusion_d' must be numbers") from exc
    return SystemGeometry(receivers=tuple(receivers), radius_a=radius_a, diffusion_d=diffusion_d)


def geometry_to_dict(geom: SystemGeometry) -> dict:
    """Inverse of :func:`geometry_from_dict`."""
    return {
        "receivers": [[float(c) for c in rec.center] for rec in geom.receivers],
        "radius_a": geom.radius_a,
        "diffusion_d": geom.diffusion_d,
    }


def load_geometry(path: str) -> SystemGeometry:
    """Load a geometry JSON file. InputError on parse problems."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read geometry file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"geometry file {path} is not valid JSON: {exc}") from exc
    return geometry_from_dict(doc)
