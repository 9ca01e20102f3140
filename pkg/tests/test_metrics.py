import math

import numpy as np
import pytest

from multifar import (
    GeometryError,
    InversionConfig,
    MetricUndefinedError,
    array_gain,
    array_gain_asymptotic_symmetric,
    hit_n_asymptotic,
    influence_vs_angle,
    malicious_influence,
    malicious_influence_asymptotic_symmetric,
    mirrored_pair_geometry,
    subset,
)
from multifar.geometry import proxy_distance, radial_distance

TALBOT = InversionConfig(method="talbot", order=24)


def test_influence_asymptotic_matches_system_route(uca_a5):
    big_r = proxy_distance(uca_a5, 2, 1)
    closed = malicious_influence_asymptotic_symmetric(5.0, big_r)
    system = malicious_influence(math.inf, uca_a5, 1)
    assert closed.q == pytest.approx(1.0 / (1.0 + big_r / 10.0), rel=1e-15)
    assert system.q == pytest.approx(closed.q, abs=1e-12)
    assert math.isinf(system.t) and system.target == 1


def test_influence_finite_time(uca_a5):
    res = malicious_influence(1.0, uca_a5, 1, TALBOT)
    assert 0.0 < res.q < 1.0
    # at infinite time the competitors have taken their largest share
    assert res.q < malicious_influence(math.inf, uca_a5, 1).q


def test_influence_zero_for_lone_receiver(demo_geometry):
    lone = subset(demo_geometry, [1])
    res = malicious_influence(0.7, lone, 1, TALBOT)
    assert res.q == pytest.approx(0.0, abs=1e-9)


def test_influence_undefined_before_onset(demo_geometry):
    with pytest.raises(MetricUndefinedError):
        malicious_influence(1e-6, demo_geometry, 1)


def test_influence_result_validation():
    from multifar.metrics import InfluenceResult

    with pytest.raises(ValueError):
        InfluenceResult(t=1.0, q=1.5, target=1)
    with pytest.raises(ValueError):
        InfluenceResult(t=1.0, q=-0.1, target=1)


def test_array_gain_asymptotic(uca_a5):
    big_r = proxy_distance(uca_a5, 2, 1)
    closed = array_gain_asymptotic_symmetric(5.0, big_r)
    system = array_gain(math.inf, uca_a5)
    assert closed.s_gain == pytest.approx(3.0 / (1.0 + 10.0 / big_r), rel=1e-15)
    assert system.s_gain == pytest.approx(closed.s_gain, abs=1e-12)
    assert closed.s_gain < 3.0


def test_array_gain_grows_to_limit(uca_a5):
    gains = [array_gain(t, uca_a5, TALBOT).s_gain for t in (0.1, 0.5, 2.0, 10.0)]
    assert all(b > a for a, b in zip(gains, gains[1:]))
    assert gains[-1] < array_gain(math.inf, uca_a5).s_gain


def test_array_gain_counts_all_receivers(demo_geometry):
    res = array_gain(math.inf, demo_geometry)
    assert res.n_receivers == 3
    expected = hit_n_asymptotic(demo_geometry).sum() / (5.0 / 25.0)
    assert res.s_gain == pytest.approx(expected, rel=1e-12)


def test_array_gain_bound_random_pairs():
    rng = np.random.default_rng(17)
    for _ in range(20):
        a = rng.uniform(0.5, 10.0)
        big_r = a * rng.uniform(2.0, 50.0)
        assert array_gain_asymptotic_symmetric(a, big_r).s_gain < 3.0


def test_mirrored_pair_layout():
    geom = mirrored_pair_geometry(20.0, 1.5, 5.0, 100.0)
    assert geom.n == 3
    rs = [radial_distance(geom, i) for i in (1, 2, 3)]
    assert np.allclose(rs, 20.0)
    c = geom.centers()
    assert np.allclose(c[1, 1], -c[2, 1])  # mirror across the x axis
    assert np.allclose(c[1, 0], c[2, 0])


def test_mirrored_pair_merges_at_pi():
    geom = mirrored_pair_geometry(20.0, math.pi, 5.0, 100.0)
    assert geom.n == 2
    assert np.allclose(geom.receiver(2).center, [-20.0, 0.0, 0.0])


def test_mirrored_pair_rejects_overlap_and_bad_angle():
    # sin(theta) <= a/r puts the mirrored receivers inside each other
    with pytest.raises(GeometryError):
        mirrored_pair_geometry(20.0, 3.0, 5.0, 100.0)
    with pytest.raises(GeometryError):
        mirrored_pair_geometry(20.0, 0.0, 5.0, 100.0)
    with pytest.raises(GeometryError):
        mirrored_pair_geometry(20.0, 3.5, 5.0, 100.0)


def test_influence_vs_angle_marks_infeasible():
    thetas = [0.8, 1.6, 3.0, math.pi]
    rows = influence_vs_angle(20.0, 5.0, 100.0, 1.0, thetas, TALBOT)
    assert [th for th, _ in rows] == thetas
    assert rows[2][1] is None
    qs = [res.q for _, res in rows if res is not None]
    assert len(qs) == 3
    assert all(b < a for a, b in zip(qs, qs[1:]))
