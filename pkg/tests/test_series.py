import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kahlerflow.exceptions import AccuracyError, DomainError, ExtractionError
from kahlerflow.geometry import eh_potential, metric_from_profile
from kahlerflow.series import (
    CallableEta,
    CapProfile,
    CorrectionSeries,
    asymptotic_coefficient,
    check_source,
    extract_source,
    extract_source_extrapolated,
    f_eh,
    f_eh_gradient_norm,
    f_eh_time_derivative,
    g0,
    g1_closed_form,
    leading_coefficient,
    linearized_operator,
    partial_sum,
    residual,
    residual_derivatives,
    solve_correction,
)

# H_2(eta=1) for b=1, agreed by the Taylor-coefficient and the
# high-precision extrapolation routes (difference 5e-12 when frozen).
H2_GOLDEN = 0.44717948846


@pytest.fixture(scope="module")
def series4():
    return CorrectionSeries(1.0, 4, eta_max=1e3)


def _mp_g0_residual(b, s, eta):
    with mpmath.workdps(40):
        b, s, eta = mpmath.mpf(b), mpmath.mpf(s), mpmath.mpf(eta)
        w = mpmath.sqrt(1 + (b * eta) ** 2)
        Gs = 2 * mpmath.log(s)
        Ge = w / (b * eta)
        Gee = -1 / (b * eta ** 2 * w)
        return float(Gs + eta / s * Ge - mpmath.log(Ge * (Ge + eta * Gee)) - 2 * mpmath.log(s))


def test_g0_values_and_residual():
    assert g0(1.0, 1.0, 1.0) == pytest.approx(-2 + eh_potential(1.0, 1.0), rel=1e-15)
    for b, s, eta in ((1.0, 10.0, 0.3), (2.0, 1e3, 5.0), (0.5, 50.0, 40.0)):
        w = np.sqrt(1 + (b * eta) ** 2)
        assert _mp_g0_residual(b, s, eta) == pytest.approx(w / (b * s), rel=1e-12)
    with pytest.raises(DomainError):
        g0(1.0, 1.0, 0.0)


def test_g0_static_equation():
    # G0_s - log(G0_eta (G0_eta + eta G0_etaeta)) - 2 log s = 0
    b, eta = 1.7, np.geomspace(1e-3, 1e3, 30)
    w = np.sqrt(1 + (b * eta) ** 2)
    Ge, psi = w / (b * eta), b * eta / w
    s = 42.0
    resid = 2 * np.log(s) - np.log(Ge * psi) - 2 * np.log(s)
    assert np.max(np.abs(resid)) < 1e-10


def test_linearized_operator_examples():
    eta = np.geomspace(1e-2, 1e2, 40)
    b = 1.0
    # for b = 1 the closed form is (eta^2/2 + log(1 + w))/3
    g1_mp = lambda x: (x ** 2 / 2 + mpmath.log(1 + mpmath.sqrt(1 + x ** 2))) / 3
    d = lambda n: (lambda x: np.array([float(mpmath.diff(g1_mp, mpmath.mpf(v), n)) for v in np.ravel(x)]))
    np.testing.assert_allclose(g1_closed_form(b, eta), d(0)(eta), rtol=1e-14)
    g1 = CallableEta(d(0), d(1), d(2))
    np.testing.assert_allclose(linearized_operator(b, g1, eta), 1.0, rtol=1e-12)
    const = CallableEta(lambda x: 3.0, lambda x: 0.0, lambda x: 0.0)
    np.testing.assert_allclose(linearized_operator(b, const, eta), 0.0, atol=0)
    sq = CallableEta(lambda x: x * x, lambda x: 2 * x, lambda x: 2.0)
    expected = 2 + (1 / eta + eta / (1 + eta ** 2)) * 2 * eta
    np.testing.assert_allclose(linearized_operator(b, sq, eta), expected, rtol=1e-14)
    # eta = 0 uses the regular limit 2 h''(0)
    assert linearized_operator(b, sq, np.array([0.0]))[0] == 4.0


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_first_correction_matches_closed_form(b):
    series = CorrectionSeries(b, 1, eta_max=1e3)
    eta = np.geomspace(1e-3, 50.0, 400)
    np.testing.assert_allclose(series.terms[0].value(eta), g1_closed_form(b, eta), rtol=1e-8)


def test_solve_correction_constant_source():
    b = 1.0
    G = solve_correction(b, lambda x: np.ones_like(x), eta_max=100.0)
    eta = np.geomspace(1e-3, 100.0, 200)
    # nested integrals from 0 differ from the closed form by its value at 0
    np.testing.assert_allclose(G.value(eta), g1_closed_form(b, eta) - np.log(2.0) / 3, rtol=1e-9, atol=1e-12)
    Z = solve_correction(b, lambda x: np.zeros_like(x), eta_max=100.0)
    assert np.max(np.abs(Z.value(eta))) == 0.0


@pytest.mark.parametrize("source", [
    lambda x: np.ones_like(x),
    lambda x: x,
    lambda x: x * x,
    lambda x: np.exp(-x),
], ids=["one", "eta", "eta2", "exp"])
@pytest.mark.parametrize("b", [0.7, 1.0])
def test_round_trip(source, b):
    G = solve_correction(b, source, eta_max=100.0)
    eta = np.geomspace(1e-2, 1e2, 300)
    np.testing.assert_allclose(linearized_operator(b, G, eta), source(eta), rtol=1e-8, atol=1e-8)


def test_solve_correction_reports_failure():
    with pytest.raises(AccuracyError) as err:
        solve_correction(1.0, lambda x: np.sign(x - 0.3), eta_max=10.0)
    assert err.value.achieved > 0


def test_sources(series4):
    eta = np.array([0.5, 1.0, 2.0])
    np.testing.assert_array_equal(series4.source(1, eta), 1.0)
    assert series4.source(2, np.array([1.0]))[0] == pytest.approx(H2_GOLDEN, rel=1e-9)
    for j in (2, 3, 4):
        assert check_source(series4, j) < 1e-6
    H3 = extract_source(1.0, 3, series4)
    assert H3(np.array([1.0]))[0] == pytest.approx(extract_source_extrapolated(series4, 3, 1.0), abs=1e-9)


def test_extraction_disagreement_is_reported(series4):
    class Broken(CorrectionSeries):
        def source(self, j, eta):
            return super().source(j, eta) + 1e-3

    broken = series4.truncated(3)
    broken.__class__ = Broken
    with pytest.raises(ExtractionError):
        check_source(broken, 2)


def test_partial_sum(series4):
    eta = np.array([0.3, 1.0, 7.0])
    s = 250.0
    k0 = series4.truncated(0)
    np.testing.assert_array_equal(partial_sum(k0, s, eta), g0(1.0, s, eta))
    k1 = series4.truncated(1)
    np.testing.assert_allclose(partial_sum(k1, s, eta), g0(1.0, s, eta) + g1_closed_form(1.0, eta) / s,
                               rtol=1e-14)


def test_residual_order_zero(series4):
    s, eta = 300.0, np.geomspace(1e-3, 10, 20)
    np.testing.assert_allclose(residual(series4.truncated(0), s, eta), np.sqrt(1 + eta ** 2) / s, rtol=1e-14)


def test_residual_matches_high_precision_assembly(series4):
    b, s, eta = 1.0, 40.0, 1.3
    sub = series4.truncated(2)
    jets = sub.jets(np.array([eta]))
    with mpmath.workdps(50):
        S, E = mpmath.mpf(s), mpmath.mpf(eta)
        w = mpmath.sqrt(1 + E ** 2)
        Gs, Ge, Gee = 2 * mpmath.log(S), w / E, -1 / (E ** 2 * w)
        for i in (1, 2):
            Gs += -i * S ** (-i - 1) * jets.G[i - 1][0]
            Ge += S ** -i * jets.G1[i - 1][0]
            Gee += S ** -i * jets.G2[i - 1][0]
        ref = float(Gs + E / S * Ge - mpmath.log(Ge * (Ge + E * Gee)) - 2 * mpmath.log(S))
    assert residual(sub, s, np.array([eta]))[0] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.parametrize("eta", [0.5, 1.0, 2.0])
def test_residual_order_matching(series4, k, eta):
    s = np.geomspace(1e2, 1e5, 10)
    vals = [abs(residual(series4.truncated(k), si, np.array([eta]))[0]) for si in s]
    slope = np.polyfit(np.log(s), np.log(vals), 1)[0]
    assert slope == pytest.approx(-(k + 1), abs=0.1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_hyperbolic_series_residual_decay(k):
    """Partial sums of the expanding complex hyperbolic potential."""
    eta = mpmath.mpf("0.8")

    def resid(s):
        with mpmath.workdps(60):
            s = mpmath.mpf(s)
            P_eta = sum(eta ** j * s ** -j / 3 ** j for j in range(k + 1))
            P_etaeta = sum(j * eta ** (j - 1) * s ** -j / 3 ** j for j in range(1, k + 1))
            P_s = 2 * mpmath.log(s) - sum(j * eta ** (j + 1) * s ** (-j - 1) / ((j + 1) * 3 ** j)
                                          for j in range(1, k + 1))
            return abs(P_s + eta / s * P_eta - mpmath.log(P_eta * (P_eta + eta * P_etaeta)) - 2 * mpmath.log(s))

    s = np.geomspace(1e2, 1e5, 8)
    vals = [float(resid(si)) for si in s]
    slope = np.polyfit(np.log(s), np.log(vals), 1)[0]
    assert slope == pytest.approx(-(k + 1), abs=0.05)


def test_lemma2_envelope(series4):
    a = 0.25
    for k in (1, 2):
        sub = series4.truncated(k)
        ratios = []
        for s in (1e2, 1e3, 1e4):
            eta = np.geomspace(1e-3, s ** (1 - 2 * a), 200)
            F = np.abs(residual(sub, s, eta))
            ratios.append(np.max(F * s ** (k + 1) / (1 + eta ** (k + 1))))
        assert max(ratios) < 2 * min(ratios)


def test_f_eh_order_zero_closed_forms(series4):
    sub = series4.truncated(0)
    t, rho = 100.0, np.geomspace(1e-5, 1e-1, 20)
    eta = t * rho
    w = np.sqrt(1 + eta ** 2)
    np.testing.assert_allclose(f_eh(sub, t, rho), w / t, rtol=1e-14)
    np.testing.assert_allclose(f_eh_gradient_norm(sub, t, rho), np.sqrt(w) * eta / (t * w), rtol=1e-12)


def test_residual_derivatives_against_differences(series4):
    sub = series4.truncated(2)
    s, eta = 200.0, np.array([0.4, 1.0, 3.0])
    F, Fe, Fs = residual_derivatives(sub, s, eta)
    h = 1e-4 * eta
    fd_e = (residual(sub, s, eta + h) - residual(sub, s, eta - h)) / (2 * h)
    fd_s = (residual(sub, s * (1 + 1e-4), eta) - residual(sub, s * (1 - 1e-4), eta)) / (2e-4 * s)
    np.testing.assert_allclose(Fe, fd_e, rtol=1e-5)
    np.testing.assert_allclose(Fs, fd_s, rtol=1e-5)
    t, rho = 200.0, eta / 200.0
    dt = 1e-4 * t
    fd_t = (f_eh(sub, t + dt, rho) - f_eh(sub, t - dt, rho)) / (2 * dt)
    np.testing.assert_allclose(f_eh_time_derivative(sub, t, rho), fd_t, rtol=1e-5)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_lemma1_coefficients(series4, j):
    assert asymptotic_coefficient(series4, j) == pytest.approx(leading_coefficient(j), rel=1e-2)


def test_series_order_limits():
    with pytest.raises(DomainError):
        CorrectionSeries(1.0, 7)
    with pytest.raises(DomainError):
        CorrectionSeries(0.0, 1)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-4.0, 0.0), t=st.floats(50.0, 1e4))
def test_cap_profile_psi_is_consistent(series4, x, t):
    cap = CapProfile(series4, t)
    rho = np.array([10.0 ** x / t * 1e2])
    rho = np.minimum(rho, 1e3 / t)
    direct = cap.d1(rho) + rho * cap.d2(rho)
    assert cap.psi(rho)[0] == pytest.approx(direct[0], rel=1e-8)
    assert metric_from_profile(cap, rho).is_positive()
