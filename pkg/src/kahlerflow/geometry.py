"""Radial Kähler calculus in complex dimension two.

A U(2)-invariant potential u(z) = F(rho), rho = |z|^2, has complex Hessian
with two eigenvalues: ``phi = F'`` on the complement of the radial complex
line and ``psi = F' + rho F''`` along it.  Everything below (volume form,
Ricci potential, Laplacian, biLipschitz comparisons) is expressed through
that pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, EvaluationError, ExtractionError, PositivityError

__all__ = [
    "RadialProfile",
    "MetricEigenvalues",
    "EHParams",
    "FlatProfile",
    "EguchiHansonProfile",
    "HyperbolicFlowProfile",
    "SampledProfile",
    "SumProfile",
    "PulledBackProfile",
    "eh_potential",
    "eh_potential_drho",
    "eh_potential_drho2",
    "eh_tail",
    "metric_from_profile",
    "log_det",
    "radial_laplacian",
    "hyperbolic_flow_potential",
    "exceptional_area_coefficient",
    "rescale_pullback",
    "richardson_to_zero",
]


def _as_array(x):
    return np.asarray(x, dtype=float)


def _positive_rho(rho):
    rho = _as_array(rho)
    if np.any(rho <= 0):
        raise DomainError("rho must be > 0 (logarithmic singularity at the origin)")
    return rho


# ---------------------------------------------------------------------------
# Eguchi-Hanson potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EHParams:
    c: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.b > 0):
            raise DomainError(f"EHParams needs c > 0 and b > 0, got c={self.c}, b={self.b}")


def eh_potential(c, rho):
    """Eguchi-Hanson potential ``sqrt(1+c^2 rho^2) + 1/2 log((w-1)/(w+1))``.

    The log argument equals ``c^2 rho^2 / (w+1)^2``; we always use that form,
    which has no cancellation for small ``c rho``.
    """
    rho = _positive_rho(rho)
    cr = c * rho
    w = np.sqrt(1.0 + cr * cr)
    return w + np.log(cr) - np.log1p(w)


def eh_potential_drho(c, rho):
    rho = _positive_rho(rho)
    return np.sqrt(1.0 + (c * rho) ** 2) / rho


def eh_potential_drho2(c, rho):
    rho = _positive_rho(rho)
    return -1.0 / (rho * rho * np.sqrt(1.0 + (c * rho) ** 2))


def eh_tail(c, rho):
    """``c*rho - eh_potential(c, rho)``, evaluated without cancellation.

    Decays like ``1/(2 c rho)`` at infinity; this is the piece of the cap
    potential that the expanding background does not have.
    """
    rho = _positive_rho(rho)
    cr = c * rho
    w = np.sqrt(1.0 + cr * cr)
    gap = 1.0 / (w + cr)  # w - c rho
    return -gap + np.log1p((1.0 + gap) / cr)


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

class RadialProfile:
    """A radial potential F(rho) at a fixed time ``t``.

    Subclasses implement ``value``, ``d1`` and ``d2`` (derivatives in rho).
    ``cap_scale`` is a rho below which the profile is in its small-rho
    regime; it seeds the area-coefficient extrapolation.
    """

    cap_scale = 1e-2

    def value(self, rho):
        raise NotImplementedError

    def d1(self, rho):
        raise NotImplementedError

    def d2(self, rho):
        raise NotImplementedError

    def psi(self, rho):
        """F' + rho F''; profiles override this where the sum cancels."""
        rho = _as_array(rho)
        return _as_array(self.d1(rho)) + rho * _as_array(self.d2(rho))

    def __call__(self, rho):
        return self.value(rho)

    def __add__(self, other):
        return SumProfile(self, other)


@dataclass(frozen=True)
class FlatProfile(RadialProfile):
    """F = scale * rho (scale times the Euclidean potential)."""

    scale: float = 1.0
    t: float = 1.0

    def value(self, rho):
        return self.scale * _as_array(rho)

    def d1(self, rho):
        return np.full_like(_as_array(rho), self.scale)

    def d2(self, rho):
        return np.zeros_like(_as_array(rho))


@dataclass(frozen=True)
class EguchiHansonProfile(RadialProfile):
    """F = scale * eh_potential(c, rho) + shift."""

    c: float = 1.0
    scale: float = 1.0
    shift: float = 0.0
    t: float = 1.0

    @classmethod
    def expanding(cls, b, t):
        """The artificially expanding family b^-1 phi_{EH, bt}."""
        return cls(c=b * t, scale=1.0 / b, t=t)

    @property
    def cap_scale(self):
        return 0.5 / self.c

    def value(self, rho):
        return self.scale * eh_potential(self.c, rho) + self.shift

    def d1(self, rho):
        return self.scale * eh_potential_drho(self.c, rho)

    def d2(self, rho):
        return self.scale * eh_potential_drho2(self.c, rho)

    def psi(self, rho):
        rho = _positive_rho(rho)
        cr = self.c * rho
        return self.scale * self.c * cr / np.sqrt(1.0 + cr * cr)


def hyperbolic_flow_potential(t, rho):
    """Expanding complex hyperbolic flow ``2(t log t - t) - 3 t log(1 - rho/3)``."""
    rho = _as_array(rho)
    if np.any(rho >= 3.0) or np.any(rho < 0):
        raise DomainError("hyperbolic potential needs 0 <= rho < 3")
    if t <= 0:
        raise DomainError("t must be positive")
    return 2.0 * (t * np.log(t) - t) - 3.0 * t * np.log1p(-rho / 3.0)


@dataclass(frozen=True)
class HyperbolicFlowProfile(RadialProfile):
    t: float = 1.0

    def value(self, rho):
        return hyperbolic_flow_potential(self.t, rho)

    def d1(self, rho):
        return self.t / (1.0 - _as_array(rho) / 3.0)

    def d2(self, rho):
        return self.t / (3.0 * (1.0 - _as_array(rho) / 3.0) ** 2)

    def dt(self, rho):
        return 2.0 * np.log(self.t) - 3.0 * np.log1p(-_as_array(rho) / 3.0)


@dataclass(frozen=True)
class SampledProfile(RadialProfile):
    """Cubic-Hermite profile through nodal values and slopes."""

    rho: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    t: float = 1.0

    def __post_init__(self):
        from scipy.interpolate import CubicHermiteSpline

        object.__setattr__(self, "_spline", CubicHermiteSpline(self.rho, self.values, self.slopes))

    @property
    def cap_scale(self):
        return float(self.rho[0]) * 4.0 ** 5

    def value(self, rho):
        return self._spline(_as_array(rho))

    def d1(self, rho):
        return self._spline(_as_array(rho), 1)

    def d2(self, rho):
        return self._spline(_as_array(rho), 2)


@dataclass(frozen=True)
class SumProfile(RadialProfile):
    first: RadialProfile
    second: RadialProfile

    @property
    def t(self):
        return self.first.t

    @property
    def cap_scale(self):
        return min(self.first.cap_scale, self.second.cap_scale)

    def value(self, rho):
        return self.first.value(rho) + self.second.value(rho)

    def d1(self, rho):
        return self.first.d1(rho) + self.second.d1(rho)

    def d2(self, rho):
        return self.first.d2(rho) + self.second.d2(rho)

    def psi(self, rho):
        return self.first.psi(rho) + self.second.psi(rho)


@dataclass(frozen=True)
class PulledBackProfile(RadialProfile):
    """Potential of ``b * alpha_tau^* g`` with ``tau = 1/sqrt(b t)``.

    In radial coordinates this is rho -> b F(rho / (b t)) - shift, so both
    metric eigenvalues transform as ``e(rho) -> e(rho/(b t)) / t``.
    """

    base: RadialProfile
    t: float
    b: float
    shift: float = 0.0

    @property
    def cap_scale(self):
        return self.base.cap_scale * self.b * self.t

    def _x(self, rho):
        return _as_array(rho) / (self.b * self.t)

    def value(self, rho):
        return self.b * self.base.value(self._x(rho)) - self.shift

    def d1(self, rho):
        return self.base.d1(self._x(rho)) / self.t

    def d2(self, rho):
        return self.base.d2(self._x(rho)) / (self.b * self.t * self.t)

    def psi(self, rho):
        return self.base.psi(self._x(rho)) / self.t


def rescale_pullback(F: RadialProfile, t, b, shift=0.0) -> PulledBackProfile:
    if t <= 0 or b <= 0:
        raise DomainError("rescale_pullback needs t > 0 and b > 0")
    return PulledBackProfile(F, float(t), float(b), float(shift))


# ---------------------------------------------------------------------------
# Metric quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricEigenvalues:
    phi: np.ndarray
    psi: np.ndarray

    @property
    def det(self):
        return self.phi * self.psi

    def is_positive(self):
        return bool(np.all(self.phi > 0) and np.all(self.psi > 0))

    def scaled(self, factor):
        return MetricEigenvalues(self.phi * factor, self.psi * factor)


def metric_from_profile(F: RadialProfile, rho) -> MetricEigenvalues:
    rho = _as_array(rho)
    if np.any(rho < 0):
        raise DomainError("rho must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = _as_array(F.d1(rho))
        at_origin = rho == 0
        if np.any(at_origin):
            d2 = np.zeros_like(rho)
            inner = ~at_origin
            if np.any(inner):
                d2[inner] = _as_array(F.d2(rho[inner]))
        else:
            d2 = _as_array(F.d2(rho))
        if np.any(at_origin):
            psi = d1 + rho * d2
        else:
            psi = _as_array(F.psi(rho))
    if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(psi))):
        raise EvaluationError("non-finite derivative of the radial potential")
    return MetricEigenvalues(d1, psi)


def _require_positive(eigs: MetricEigenvalues):
    if not eigs.is_positive():
        bad = np.flatnonzero(np.ravel((eigs.phi <= 0) | (eigs.psi <= 0)))
        raise PositivityError("metric eigenvalue is not positive", where=bad[:5].tolist())


def log_det(eigs: MetricEigenvalues):
    """Log of the radial volume density; minus i d dbar of it is the Ricci form."""
    _require_positive(eigs)
    return np.log(eigs.phi) + np.log(eigs.psi)


def radial_laplacian(F: RadialProfile, u: RadialProfile, rho):
    """Trace of g^{-1} i d dbar u for radial F (metric) and u."""
    rho = _as_array(rho)
    eigs = metric_from_profile(F, rho)
    _require_positive(eigs)
    hess_u = metric_from_profile(u, rho)
    return hess_u.phi / eigs.phi + hess_u.psi / eigs.psi


# ---------------------------------------------------------------------------
# Exceptional sphere area coefficient
# ---------------------------------------------------------------------------

def richardson_to_zero(h, y):
    """Neville extrapolation of samples ``y(h)`` to ``h = 0``.

    Assumes an expansion in integer powers of ``h``.  Returns the final
    estimate and the spread between the last two diagonal entries.
    """
    h = _as_array(h)
    table = [np.asarray(y, dtype=float).copy()]
    n = len(h)
    for m in range(1, n):
        prev = table[-1]
        cur = np.empty(n - m)
        for i in range(n - m):
            lo, hi = h[i], h[i + m]
            cur[i] = (lo * prev[i + 1] - hi * prev[i]) / (lo - hi)
        table.append(cur)
    best = table[-1][0]
    spread = abs(best - table[-2][-1]) if n > 1 else np.inf
    return float(best), float(spread)


def exceptional_area_coefficient(F: RadialProfile, rho0=None, levels=6, ratio=4.0, tol=1e-6):
    """Coefficient of log(rho) in F as rho -> 0, i.e. lim rho F'(rho).

    For the cap potentials this is 1/b; the area of the exceptional sphere is
    proportional to it.  Richardson extrapolation over a ratio-``ratio``
    sequence of ``levels`` radii starting at ``rho0``.
    """
    if rho0 is None:
        rho0 = F.cap_scale
    rho = rho0 / ratio ** np.arange(levels)
    y = rho * _as_array(F.d1(rho))
    if not np.all(np.isfinite(y)):
        raise EvaluationError("non-finite rho*F' in area extrapolation")
    value, spread = richardson_to_zero(rho, y)
    if spread > tol * max(1.0, abs(value)):
        raise ExtractionError(
            f"area coefficient extrapolation did not settle (spread {spread:.3g})", spread=spread
        )
    return value
