import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kahlerflow.exceptions import FitError, PositivityError
from kahlerflow.fits import bilipschitz_constant, decay_exponent_fit, quadratic_form_K
from kahlerflow.geometry import MetricEigenvalues
from kahlerflow.series import CorrectionSeries, residual

# K(4T) - 1 in the k = 1, a = 1/4 hyperbolic run (T = 1e3, 2048 nodes, dt = 1e-3 t)
K_GOLDEN = 5.3862e-03


def test_exact_power_law():
    t = np.geomspace(1, 1e4, 20)
    fit = decay_exponent_fit(t, 3 * t ** -2.0)
    assert fit.slope == pytest.approx(-2.0, abs=1e-6)
    assert fit.residual < 1e-12
    assert set(fit.to_dict()) == {"slope", "intercept", "residual", "ci_halfwidth", "n"}


def test_perturbed_power_law():
    t = np.geomspace(1, 1e6, 60)
    fit = decay_exponent_fit(t, (1 + 0.1 * np.sin(np.log(t))) / t)
    assert fit.slope == pytest.approx(-1.0, abs=0.05)


def test_residual_samples_decay():
    series = CorrectionSeries(1.0, 1)
    s = np.geomspace(1e2, 1e5, 12)
    y = [abs(residual(series, si, np.array([1.0]))[0]) for si in s]
    assert decay_exponent_fit(s, y).slope == pytest.approx(-2.0, abs=0.1)


def test_fit_refusals():
    t = np.geomspace(1, 100, 10)
    with pytest.raises(FitError):
        decay_exponent_fit(t, np.exp(np.random.default_rng(0).normal(0, 2, 10)))
    with pytest.raises(FitError):
        decay_exponent_fit(t[:3], t[:3])
    with pytest.raises(FitError):
        decay_exponent_fit(t[::-1], t)
    with pytest.raises(FitError):
        decay_exponent_fit(t, -t)


def test_bilipschitz_trivial_cases():
    phi, psi = np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.1, 9.0])
    a = MetricEigenvalues(phi, psi)
    assert bilipschitz_constant(a, a, phi).K == 1.0
    for lam in (0.25, 3.0):
        assert bilipschitz_constant(a, a.scaled(lam), phi).K == pytest.approx(max(lam, 1 / lam))
    with pytest.raises(PositivityError):
        bilipschitz_constant(a, MetricEigenvalues(-phi, psi), phi)


pos = arrays(np.float64, (2,), elements=st.floats(0.05, 20.0))


@settings(max_examples=40)
@given(pos, pos)
def test_bilipschitz_equals_quadratic_form_optimum(ga, gb):
    rep = bilipschitz_constant(MetricEigenvalues(ga[:1], ga[1:]), MetricEigenvalues(gb[:1], gb[1:]), [1.0])
    angles = np.linspace(0, np.pi / 2, 20001)
    vectors = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    assert quadratic_form_K(ga, gb, vectors) == pytest.approx(rep.K, rel=1e-9)


def test_golden_bilipschitz_constant(theorem1_k1):
    tr = theorem1_k1.trace
    i = int(np.argmin(np.abs(np.asarray(tr.times) - 4e3)))
    assert tr.times[i] == 4e3
    assert tr.K[i] - 1 == pytest.approx(K_GOLDEN, rel=1e-3)
