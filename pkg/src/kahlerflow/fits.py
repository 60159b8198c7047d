"""Power-law fits and biLipschitz comparison of radial metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import FitError, PositivityError
from .geometry import MetricEigenvalues

__all__ = ["DecayFit", "decay_exponent_fit", "BiLipschitzReport", "bilipschitz_constant", "quadratic_form_K"]


@dataclass(frozen=True)
class DecayFit:
    t: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    residual: float
    halfwidth: float

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "ci_halfwidth": self.halfwidth,
            "n": int(len(self.t)),
        }


def decay_exponent_fit(t, y, max_residual=0.2, confidence=0.95):
    """Least-squares slope of log y against log t.

    ``residual`` is the RMS deviation of log y from the fitted line (a
    relative error, since it is measured in log space); fits with residual
    above ``max_residual`` are refused.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t and y must be 1-d arrays of equal length")
    if len(t) < 4:
        raise FitError("need at least 4 samples")
    if np.any(np.diff(t) <= 0):
        raise FitError("sample times must be strictly increasing")
    if np.any(y <= 0) or np.any(t <= 0):
        raise FitError("samples must be positive")
    res = stats.linregress(np.log(t), np.log(y))
    fitted = res.intercept + res.slope * np.log(t)
    rms = float(np.sqrt(np.mean((np.log(y) - fitted) ** 2)))
    if rms > max_residual:
        raise FitError(f"log-log fit residual {rms:.3f} exceeds {max_residual}")
    q = stats.t.ppf(0.5 + confidence / 2, len(t) - 2)
    return DecayFit(t, y, float(res.slope), float(res.intercept), rms, float(q * res.stderr))


@dataclass(frozen=True)
class BiLipschitzReport:
    t: float
    K: float
    rho_star: float


def bilipschitz_constant(a: MetricEigenvalues, b: MetricEigenvalues, rho, t=float("nan")):
    """Smallest K with K^-1 g_a <= g_b <= K g_a on the grid.

    Both radial metrics are diagonal in the same frame, so K is the largest
    eigenvalue ratio in either direction.
    """
    if not (a.is_positive() and b.is_positive()):
        raise PositivityError("both metrics must be positive")
    r1 = b.phi / a.phi
    r2 = b.psi / a.psi
    ratios = np.maximum.reduce([r1, 1 / r1, r2, 1 / r2])
    i = int(np.argmax(ratios))
    return BiLipschitzReport(float(t), float(max(ratios[i], 1.0)), float(np.asarray(rho)[i]))


def quadratic_form_K(ga, gb, vectors):
    """max over vectors of max(q_b/q_a, q_a/q_b) for diagonal forms (check)."""
    va = np.sum(ga * vectors ** 2, axis=-1)
    vb = np.sum(gb * vectors ** 2, axis=-1)
    r = vb / va
    return float(np.max(np.maximum(r, 1 / r)))
