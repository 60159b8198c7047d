import numpy as np
import pytest

from kahlerflow.exceptions import DomainError
from kahlerflow.norms import RadialDistance, WeightedNormSpec, sample_pairs, weight, weighted_holder_norm, weighted_sup_norm


def test_spec_validation():
    with pytest.raises(DomainError):
        WeightedNormSpec(alpha=1.0)
    with pytest.raises(DomainError):
        WeightedNormSpec(Lambda=0.0)
    with pytest.raises(DomainError):
        WeightedNormSpec(pair_budget=0)


def test_sup_norm_trivial_cases():
    spec = WeightedNormSpec(gamma=0.0, sigma_w=0.0)
    times, radii = [1.0, 4.0, 16.0], np.geomspace(1e-3, 2.0, 50)
    assert weighted_sup_norm(lambda t, r: np.ones_like(r), spec, times, radii)[0] == 1.0
    spec = WeightedNormSpec(gamma=1.5, sigma_w=2.0, delta=10.0)
    inv = lambda t, r: t ** -1.5 * (r + t ** -0.5) ** -2.0
    value, _, _ = weighted_sup_norm(inv, spec, times, radii)
    assert value == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        weighted_sup_norm(inv, spec, [], radii)
    with pytest.raises(DomainError):
        weighted_sup_norm(inv, WeightedNormSpec(Lambda=2.0), [1.0], radii)


def test_off_chart_radius_frozen():
    spec = WeightedNormSpec(delta=0.5)
    np.testing.assert_array_equal(weight(spec, 4.0, np.array([0.5, 1.0, 3.0])), weight(spec, 4.0, 0.5))


def test_radial_distance_flat():
    d = RadialDistance(lambda r: np.ones_like(r), 1e-4, 2.0)
    np.testing.assert_allclose(d(np.array([0.1]), np.array([1.1])), 1.0, rtol=1e-10)
    with pytest.raises(DomainError):
        RadialDistance(lambda r: -np.ones_like(r), 1e-4, 2.0)


def test_pairs_respect_quasiparabolic_constraints():
    spec = WeightedNormSpec()
    rng = np.random.default_rng(1)
    t, r = 100.0, 0.2
    s = sample_pairs(spec, t, r, 5000, rng)
    for z in (s.z1, s.z2):
        assert np.all(z >= r / 2) and np.all(z <= r + t ** -0.5)
    assert np.all(s.t2 >= t) and np.all(s.t2 <= t + (1 + np.sqrt(t) * r) ** 2)


def _flat_distance(t):
    return RadialDistance(lambda r: np.ones_like(r), 1e-6, 4.0)


def test_holder_constant_field_is_zero():
    spec = WeightedNormSpec(pair_budget=200)
    val = weighted_holder_norm(lambda t, r: np.full_like(np.asarray(r, float), 3.0), spec, [4.0, 8.0], [0.1, 0.5],
                               _flat_distance)
    assert val == 0.0


def test_holder_seeded_and_interpolation_inequality():
    spec = WeightedNormSpec(alpha=0.4, gamma=0.0, sigma_w=0.0, pair_budget=500, seed=7)
    field = lambda t, r: np.sin(3 * np.asarray(r)) / t
    a = weighted_holder_norm(field, spec, [4.0, 16.0], [0.1, 0.5], _flat_distance, return_pairs=True)
    b = weighted_holder_norm(field, spec, [4.0, 16.0], [0.1, 0.5], _flat_distance, return_pairs=True)
    assert a[0] == b[0] and a[0] > 0
    alpha = spec.alpha
    for t, r, df, denom, fmax in a[1]:
        # |df| / denom^alpha <= (2 max|f|)^(1-2 alpha) (|df| / denom^(1/2))^(2 alpha)
        lip = df / np.sqrt(denom)
        lhs = df / denom ** alpha
        rhs = (2 * fmax) ** (1 - 2 * alpha) * lip ** (2 * alpha)
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-300)
