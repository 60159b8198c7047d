import numpy as np
import pytest

from kahlerflow.chebpanel import (
    PanelFunction,
    adaptive_panels,
    barycentric,
    geometric_breaks,
    lobatto_nodes,
    panel_derivative,
    panel_integral,
    tail_ratio,
)
from kahlerflow.exceptions import AccuracyError, DomainError


def test_single_panel_calculus():
    a, b = 0.5, 2.0
    x = lobatto_nodes(a, b)
    v = np.exp(x)
    np.testing.assert_allclose(panel_integral(v, a, b), np.exp(x) - np.exp(a), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(panel_derivative(v, a, b), np.exp(x), rtol=1e-11)
    xs = np.linspace(a, b, 101)
    np.testing.assert_allclose(barycentric(xs, a, b, v), np.exp(xs), rtol=1e-14)
    assert tail_ratio(v) < 1e-14
    assert tail_ratio(np.abs(x - 1.0)) > 1e-4


def test_adaptive_panels_resolve_log_like_function():
    f = lambda x: np.sqrt(1 + x * x) + np.log1p(x)
    breaks, samples = adaptive_panels(f, geometric_breaks(1.0, 50.0))
    pf = PanelFunction(breaks, samples)
    xs = np.linspace(0, 50, 777)
    np.testing.assert_allclose(pf(xs), f(xs), rtol=1e-13)
    np.testing.assert_allclose(pf.d1(xs), xs / np.sqrt(1 + xs * xs) + 1 / (1 + xs), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(pf.d2(xs), (1 + xs * xs) ** -1.5 - (1 + xs) ** -2, rtol=1e-6, atol=1e-9)
    with pytest.raises(DomainError):
        pf(np.array([51.0]))


def test_adaptive_panels_report_unresolvable():
    with pytest.raises(AccuracyError) as err:
        adaptive_panels(lambda x: np.sign(x - 0.3001), np.array([0.0, 1.0]), max_depth=3)
    assert err.value.achieved > 1e-10


def test_geometric_breaks():
    br = geometric_breaks(1.0, 10.0)
    assert br[0] == 0 and br[-1] == 10.0
    assert np.all(np.diff(br) > 0)
