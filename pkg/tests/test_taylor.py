import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kahlerflow.taylor import SeriesInU

ORDER = 5
coeffs = arrays(np.float64, (ORDER + 1, 3), elements=st.floats(-1.0, 1.0))


def positive(c):
    c = c.copy()
    c[0] = 1.0 + np.abs(c[0])
    return SeriesInU(c)


@settings(max_examples=60)
@given(coeffs, coeffs)
def test_log_of_product(ca, cb):
    a, b = positive(ca), positive(cb)
    np.testing.assert_allclose((a * b).log().coeffs, (a.log() + b.log()).coeffs, atol=1e-12)


@settings(max_examples=60)
@given(coeffs)
def test_reciprocal_and_exp_log(ca):
    a = positive(ca)
    np.testing.assert_allclose((a * a.reciprocal()).coeffs, SeriesInU.constant(np.ones(3), ORDER).coeffs,
                               atol=1e-12)
    np.testing.assert_allclose(a.log().exp().coeffs, a.coeffs, atol=1e-11)


@settings(max_examples=60)
@given(coeffs, coeffs)
def test_division_and_evaluation(ca, cb):
    a, b = positive(ca), positive(cb)
    q = a / b
    np.testing.assert_allclose((q * b).coeffs, a.coeffs, atol=1e-12)
    u = 1e-3
    np.testing.assert_allclose(q(u), a(u) / b(u), rtol=1e-12)


def test_monomial_truncation_and_shift():
    m = SeriesInU.monomial(2.0, 7, ORDER)
    assert np.all(m.coeffs == 0)
    s = SeriesInU([1.0, 2.0, 3.0]).shift(1)
    np.testing.assert_array_equal(s.coeffs, [0.0, 1.0, 2.0])
