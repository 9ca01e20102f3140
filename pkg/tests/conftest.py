import numpy as np
import pytest

from multifar import geometry_from_dict, uca_geometry


@pytest.fixture()
def demo_geometry():
    """Three deliberately asymmetric receivers around an origin transmitter.

    Receivers 1 and 3 sit close enough to trip the proximity warning, which
    keeps the awkward regime represented in the suite.
    """
    return geometry_from_dict(
        {
            "receivers": [[25.0, 0.0, 0.0], [-25.0, 5.0, 0.0], [20.0, -15.0, 10.0]],
            "radius_a": 5.0,
            "diffusion_d": 100.0,
        }
    )


@pytest.fixture()
def uca_a5():
    return uca_geometry(10.0, 20.0, 5.0, 100.0)


def make_random_geometry(rng: np.random.Generator, n: int, a: float | None = None):
    """Rejection-sample a valid scene: n receivers, no overlap, outside the TX.

    Centers are drawn in a shell [3a, 25a] so the invariants hold with margin
    and the coupling series/solves stay well conditioned.
    """
    if a is None:
        a = float(rng.uniform(1.0, 5.0))
    centers: list[np.ndarray] = []
    while len(centers) < n:
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        candidate = direction * rng.uniform(3.0 * a, 25.0 * a)
        if all(np.linalg.norm(candidate - c) > 2.05 * a for c in centers):
            centers.append(candidate)
    return geometry_from_dict(
        {
            "receivers": [list(map(float, c)) for c in centers],
            "radius_a": a,
            "diffusion_d": 100.0,
        }
    )


@pytest.fixture()
def random_geometry_factory():
    return make_random_geometry
