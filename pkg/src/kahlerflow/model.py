"""Glued model potential and its flow-deviation field.

The model interpolates between the corrected cap flow (near the singular
point) and the expanding orbifold background with a bump in
``x = t**a * |z|``:

    phi_mod = sigma(x) phi_EH^(k) + (1 - sigma(x)) phi_X.

We never form ``phi_mod`` as a difference of large numbers.  Writing
``phi_mod = phi_EH^(k) + P`` with ``P = (1 - sigma) D`` and
``D = phi_X - phi_EH^(k)``, the deviation field is

    f_mod = f_EH + dP/dt - log(1 + P'/phi_EH') - log(1 + (P' + rho P'')/psi_EH)

and ``D`` itself is assembled from pieces that are individually small in
the gluing annulus (the Eguchi-Hanson tail, the correction remainders and
the background terms beyond order k).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import DomainError, PositivityError
from .geometry import (
    FlatProfile,
    MetricEigenvalues,
    RadialProfile,
    eh_tail,
    hyperbolic_flow_potential,
    radial_laplacian,
)
from .series import CapProfile, CorrectionSeries, leading_coefficient, residual

__all__ = [
    "BumpFunction",
    "GluedModelSpec",
    "ModelProfile",
    "phi_x",
    "phi_mod",
    "f_mod",
    "model_eigenvalues",
    "harmonic_cancellation_check",
    "positivity_threshold",
    "series_for",
]

MODES = ("hyperbolic", "quartic")


@dataclass(frozen=True)
class BumpFunction:
    """C-infinity cutoff: 1 on [0, 1/2], 0 on [1, inf), monotone between.

    sigma = psi(1-x) / (psi(1-x) + psi(x-1/2)) with psi(y) = exp(-1/y),
    written as a logistic function of g(x) = 1/(1-x) - 1/(x-1/2).
    """

    def _g(self, x):
        return 1.0 / (1.0 - x) - 1.0 / (x - 0.5)

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("bump is defined on [0, inf)")
        return x, (x > 0.5) & (x < 1.0)

    def eval(self, x):
        x, mid = self._split(x)
        out = np.where(x <= 0.5, 1.0, 0.0)
        if np.any(mid):
            out[mid] = expit(-self._g(x[mid]))
        return out

    __call__ = eval

    def d1(self, x):
        x, mid = self._split(x)
        out = np.zeros_like(x)
        if np.any(mid):
            xm = x[mid]
            s = expit(-self._g(xm))
            gp = 1.0 / (1.0 - xm) ** 2 + 1.0 / (xm - 0.5) ** 2
            out[mid] = -s * (1.0 - s) * gp
        return out

    def d2(self, x):
        x, mid = self._split(x)
        out = np.zeros_like(x)
        if np.any(mid):
            xm = x[mid]
            s = expit(-self._g(xm))
            gp = 1.0 / (1.0 - xm) ** 2 + 1.0 / (xm - 0.5) ** 2
            gpp = 2.0 / (1.0 - xm) ** 3 - 2.0 / (xm - 0.5) ** 3
            out[mid] = s * (1.0 - s) * ((1.0 - 2.0 * s) * gp * gp - gpp)
        return out


_SERIES_CACHE: dict = {}


def series_for(b, k, eta_needed):
    """A correction series of order k whose eta range covers ``eta_needed``.

    Series are cached per (b, k) and rebuilt on a decade-rounded range when
    a larger one is requested.
    """
    key = (float(b), int(k))
    eta_max = max(1e3, 10.0 ** np.ceil(np.log10(max(eta_needed, 1.0)) + 1e-12))
    cached = _SERIES_CACHE.get(key)
    if cached is None or cached.eta_max < eta_needed:
        cached = CorrectionSeries(b, k, eta_max=eta_max)
        _SERIES_CACHE[key] = cached
    return cached


@dataclass(frozen=True)
class GluedModelSpec:
    b: float = 1.0
    a: float = 0.25
    k: int = 1
    delta: float = 1.0
    mode: str = "hyperbolic"
    bump: BumpFunction = field(default_factory=BumpFunction)
    quartic_coeff: float = 1.0 / 6.0

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError("b must be positive")
        if not 0 < self.a < 0.5:
            raise DomainError("gluing exponent a must lie in (0, 1/2)")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if not self.delta > 0:
            raise DomainError("chart radius must be positive")
        if self.mode == "hyperbolic" and not self.delta < np.sqrt(3.0):
            raise DomainError("hyperbolic chart radius must be below sqrt(3)")
        if self.mode == "quartic" and self.a != 0.25:
            raise DomainError("quartic background is glued at a = 1/4")
        if self.k < 0:
            raise DomainError("k must be nonnegative")

    @property
    def rho_max(self):
        return self.delta ** 2

    def glue_radius(self, t):
        """|z| beyond which the model is the background flow."""
        return t ** (-self.a)

    def series(self, t):
        return series_for(self.b, self.k, t * min(self.rho_max, t ** (-2 * self.a)) * 1.0001)

    def background_coefficient(self, m):
        """Coefficient of eta^(m+1) t^-m in phi_X."""
        if self.mode == "hyperbolic":
            return leading_coefficient(m)
        return self.quartic_coeff if m == 1 else 0.0


def phi_x(t, rho, mode="hyperbolic", quartic_coeff=1.0 / 6.0):
    rho = np.asarray(rho, dtype=float)
    if mode == "hyperbolic":
        return hyperbolic_flow_potential(t, rho)
    if mode != "quartic":
        raise DomainError(f"unknown mode {mode!r}")
    if np.any(rho < 0):
        raise DomainError("rho must be >= 0")
    return 2.0 * (t * np.log(t) - t) + t * (rho + quartic_coeff * rho ** 2)


def _phi_x_jet(spec, t, rho):
    """(value, d_rho, d_rhorho, d_t) of the background potential."""
    if spec.mode == "hyperbolic":
        y = 1.0 - rho / 3.0
        val = hyperbolic_flow_potential(t, rho)
        return val, t / y, t / (3.0 * y * y), 2.0 * np.log(t) - 3.0 * np.log(y)
    C = spec.quartic_coeff
    val = phi_x(t, rho, "quartic", C)
    return val, t * (1.0 + 2.0 * C * rho), 2.0 * C * t + 0.0 * rho, 2.0 * np.log(t) + rho + C * rho ** 2


def _log_tail(x, n0):
    """sum_{n >= n0} x^n / n and its first two x-derivatives (0 <= x < 1)."""
    x = np.asarray(x, dtype=float)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    s2 = np.zeros_like(x)
    small = x <= 0.5
    if np.any(small):
        xs = x[small]
        term = xs ** n0
        for n in range(n0, n0 + 64):  # x <= 1/2: 2^-64 below rounding
            s0[small] += term / n
            s1[small] += term / xs
            s2[small] += (n - 1) * term / xs ** 2
            term = term * xs
    big = ~small
    if np.any(big):
        xb = x[big]
        n = np.arange(1, n0)
        partial0 = np.sum(xb[:, None] ** n / n, axis=1)
        partial1 = np.sum(xb[:, None] ** (n - 1), axis=1)
        partial2 = np.sum((n - 1) * xb[:, None] ** np.maximum(n - 2, 0), axis=1)
        s0[big] = -np.log1p(-xb) - partial0
        s1[big] = 1.0 / (1.0 - xb) - partial1
        s2[big] = 1.0 / (1.0 - xb) ** 2 - partial2
    return s0, s1, s2


def _difference_jet(spec, series, t, rho):
    """(D, D_rho, D_rhorho, D_t) for D = phi_X - phi_EH^(k), rho > 0."""
    b = spec.b
    eta = t * rho
    w = np.sqrt(1.0 + (b * eta) ** 2)
    # Eguchi-Hanson tail: eta - phi_EH_b(eta)/b
    A = eh_tail(b, eta) / b
    A_eta = -1.0 / (b * eta * (b * eta + w))
    A_etaeta = 1.0 / (b * eta * eta * w)
    D = A
    D_r = t * A_eta
    D_rr = t * t * A_etaeta
    D_t = rho * A_eta
    # correction remainders enter with a minus sign
    for j, term in enumerate(series.terms, start=1):
        R = term.remainder_value(eta)
        R1 = term.remainder_d1(eta)
        R2 = term.remainder.d2(eta)
        tj = t ** (-j)
        D = D - tj * R
        D_r = D_r - tj * t * R1
        D_rr = D_rr - tj * t * t * R2
        D_t = D_t + j * tj / t * R - tj * rho * R1
    k = series.k
    if spec.mode == "hyperbolic":
        # background terms of order m > k: 3 t sum_{n > k+1} (rho/3)^n / n
        s0, s1, s2 = _log_tail(rho / 3.0, k + 2)
        D = D + 3.0 * t * s0
        D_r = D_r + t * s1
        D_rr = D_rr + t * s2 / 3.0
        D_t = D_t + 3.0 * s0
    else:
        for m in range(1, max(k, 1) + 1):
            coef = spec.background_coefficient(m) - (leading_coefficient(m) if m <= k else 0.0)
            if coef == 0.0:
                continue
            # coef * eta^(m+1) t^-m = coef * t * rho^(m+1)
            D = D + coef * t * rho ** (m + 1)
            D_r = D_r + coef * t * (m + 1) * rho ** m
            D_rr = D_rr + coef * t * (m + 1) * m * rho ** (m - 1)
            D_t = D_t + coef * rho ** (m + 1)
    return D, D_r, D_rr, D_t


@dataclass
class _ModelJet:
    rho: np.ndarray
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    dt: np.ndarray
    f: np.ndarray
    psi: np.ndarray


def _model_jet(spec: GluedModelSpec, t, rho, want_f=True):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("the model is evaluated at rho > 0")
    if np.any(rho > 3.0) and spec.mode == "hyperbolic":
        raise DomainError("hyperbolic background needs rho < 3")
    x = t ** spec.a * np.sqrt(rho)
    cap = x <= 0.5
    glue = (x > 0.5) & (x < 1.0)
    outer = x >= 1.0
    val = np.empty_like(rho)
    d1 = np.empty_like(rho)
    d2 = np.empty_like(rho)
    dt = np.empty_like(rho)
    psi = np.empty_like(rho)
    f = np.zeros_like(rho)

    if np.any(outer):
        v, r1, r2, vt = _phi_x_jet(spec, t, rho[outer])
        val[outer], d1[outer], d2[outer], dt[outer] = v, r1, r2, vt
        psi[outer] = r1 + rho[outer] * r2

    inner = cap | glue
    if np.any(inner):
        series = spec.series(t)
        ri = rho[inner]
        cap_profile = CapProfile(series, t)
        eta, Ge, Gee, Gs, L = cap_profile._hat(ri)
        e_val = cap_profile.value(ri)
        e_d1 = t * Ge
        e_d2 = t * t * Gee
        e_dt = Gs + eta / t * Ge
        p_val = np.zeros_like(ri)
        p_d1 = np.zeros_like(ri)
        p_d2 = np.zeros_like(ri)
        p_dt = np.zeros_like(ri)
        gi = glue[inner]
        if np.any(gi):
            rg = ri[gi]
            xg = x[glue]
            D, D_r, D_rr, D_t = _difference_jet(spec, series, t, rg)
            s = spec.bump.eval(xg)
            s1 = spec.bump.d1(xg)
            s2 = spec.bump.d2(xg)
            dx_dr = xg / (2.0 * rg)
            s_r = s1 * dx_dr
            s_rr = s2 * dx_dr ** 2 - s1 * xg / (4.0 * rg * rg)
            s_t = s1 * spec.a * xg / t
            one = 1.0 - s
            p_val[gi] = one * D
            p_d1[gi] = one * D_r - s_r * D
            p_d2[gi] = one * D_rr - 2.0 * s_r * D_r - s_rr * D
            p_dt[gi] = one * D_t - s_t * D
        val[inner] = e_val + p_val
        d1[inner] = e_d1 + p_d1
        d2[inner] = e_d2 + p_d2
        dt[inner] = e_dt + p_dt
        psi_e = t * L
        psi[inner] = psi_e + (p_d1 + ri * p_d2)
        if want_f:
            a1 = p_d1 / e_d1
            a2 = (p_d1 + ri * p_d2) / psi_e
            if np.any(1.0 + a1 <= 0) or np.any(1.0 + a2 <= 0):
                bad = ri[(1.0 + a1 <= 0) | (1.0 + a2 <= 0)]
                raise PositivityError(f"model metric degenerate at t={t:g}", where=[(t, r) for r in bad[:5]])
            f[inner] = residual(series, t, eta) + p_dt - np.log1p(a1) - np.log1p(a2)

    if np.any(d1 <= 0) or np.any(psi <= 0):
        bad = rho[(d1 <= 0) | (psi <= 0)]
        raise PositivityError(f"model metric not positive at t={t:g}", where=[(t, r) for r in bad[:5]])
    return _ModelJet(rho, val, d1, d2, dt, f, psi)


@dataclass(frozen=True)
class ModelProfile(RadialProfile):
    """phi_mod(t, .) as a radial profile."""

    spec: GluedModelSpec
    t: float

    @property
    def cap_scale(self):
        return 0.5 / (self.spec.b * self.t)

    def value(self, rho):
        return _model_jet(self.spec, self.t, rho, want_f=False).value

    def d1(self, rho):
        return _model_jet(self.spec, self.t, rho, want_f=False).d1

    def d2(self, rho):
        return _model_jet(self.spec, self.t, rho, want_f=False).d2

    def dt(self, rho):
        return _model_jet(self.spec, self.t, rho, want_f=False).dt

    def psi(self, rho):
        return _model_jet(self.spec, self.t, rho, want_f=False).psi

    def jet(self, rho, want_f=True):
        return _model_jet(self.spec, self.t, rho, want_f=want_f)


def phi_mod(spec: GluedModelSpec, t, rho):
    return _model_jet(spec, t, rho, want_f=False).value


def f_mod(spec: GluedModelSpec, t, rho):
    """Deviation of the model from the potential flow; zero for |z| >= t^-a."""
    return _model_jet(spec, t, rho).f


def model_eigenvalues(spec: GluedModelSpec, t, rho) -> MetricEigenvalues:
    jet = _model_jet(spec, t, rho, want_f=False)
    return MetricEigenvalues(jet.d1, jet.psi)


def positivity_threshold(spec: GluedModelSpec, rho, t_min=1.0, t_max=1e8):
    """Smallest dyadic t from which the model stays positive up to ``t_max``.

    Checks every power of two in [t_min, t_max] on the nodes ``rho`` and
    returns the first time after the last failure.
    """
    times = t_min * 2.0 ** np.arange(int(np.floor(np.log2(t_max / t_min))) + 1)
    last_bad = None
    for i, t in enumerate(times):
        try:
            _model_jet(spec, t, rho)
        except PositivityError:
            last_bad = i
    if last_bad is None:
        return float(times[0])
    if last_bad == len(times) - 1:
        raise PositivityError(f"model not positive even at t={times[-1]:g}")
    return float(times[last_bad + 1])


@dataclass(frozen=True)
class _Power(RadialProfile):
    coeff: float
    power: float

    def value(self, rho):
        return self.coeff * np.asarray(rho, dtype=float) ** self.power

    def d1(self, rho):
        p = self.power
        return self.coeff * p * np.asarray(rho, dtype=float) ** (p - 1)

    def d2(self, rho):
        p = self.power
        return self.coeff * p * (p - 1) * np.asarray(rho, dtype=float) ** (p - 2)


def harmonic_cancellation_check(t=1.0, mode="hyperbolic", quartic_coeff=1.0 / 6.0, rho=None, tol=1e-10):
    """Check that the two leading gluing errors are flat-harmonic.

    These are the 1/rho term of the cap and the difference between the
    background's quartic term and the value rho^2/6 built into the cap
    corrections.  Returns a dict with the maximal Laplacians and a pass flag.
    """
    rho = np.geomspace(1e-3, 1.0, 200) if rho is None else np.asarray(rho, dtype=float)
    flat = FlatProfile(1.0, t)
    inverse = radial_laplacian(flat, _Power(1.0, -1.0), rho)
    if mode == "hyperbolic":
        diff_coeff = 0.0
    else:
        diff_coeff = quartic_coeff - 1.0 / 6.0
    quartic = radial_laplacian(flat, _Power(diff_coeff, 2.0), rho) if diff_coeff else np.zeros_like(rho)
    inv_max = float(np.max(np.abs(inverse * rho * rho)))
    quart_max = float(np.max(np.abs(quartic)))
    return {
        "t": float(t),
        "mode": mode,
        "inverse_laplacian": inv_max,
        "quartic_laplacian": quart_max,
        "quartic_difference_coefficient": float(diff_coeff),
        "passed": inv_max <= tol and quart_max <= tol,
    }
