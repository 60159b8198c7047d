"""Correction hierarchy for the expanding Eguchi-Hanson cap.

In the rescaled variables ``s = t``, ``eta = t rho`` the radial potential
flow reads

    G_s + (eta/s) G_eta = log(G_eta (G_eta + eta G_etaeta)) + 2 log s.

Starting from ``G0 = 2(s log s - s) + phi_EH_b(eta)/b`` we add terms
``s**-j G_j(eta)``; each ``G_j`` solves the linear ODE

    G'' + (1/eta + b^2 eta / (1 + b^2 eta^2)) G' = H_j

with ``H_j`` read off as the u^j coefficient (u = 1/s) of the residual of
the partial sum, divided by ``sqrt(1+b^2 eta^2)/b``.

Second derivatives of every ``G_j`` are taken from the ODE itself, with
``H_j`` evaluated pointwise.  This makes the residual of the partial sum
vanish to rounding at every order already solved for, regardless of the
quadrature error in ``G_j`` and ``G_j'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import chebpanel
from .exceptions import AccuracyError, DomainError, ExtractionError, FitError, PositivityError
from .geometry import RadialProfile, eh_potential
from .taylor import SeriesInU

__all__ = [
    "EtaFunction",
    "CallableEta",
    "SplitEta",
    "CorrectionSeries",
    "CapProfile",
    "g0",
    "linearization_coefficient",
    "linearized_operator",
    "solve_correction",
    "extract_source",
    "extract_source_extrapolated",
    "check_source",
    "partial_sum",
    "residual",
    "residual_derivatives",
    "f_eh",
    "f_eh_gradient_norm",
    "f_eh_time_derivative",
    "asymptotic_coefficient",
    "g1_closed_form",
    "leading_coefficient",
    "MAX_ORDER",
]

MAX_ORDER = 6


def leading_coefficient(j):
    """Coefficient of eta^(j+1) in G_j at large eta."""
    return 1.0 / ((j + 1) * 3.0 ** j)


def _w(b, eta):
    return np.sqrt(1.0 + (b * eta) ** 2)


def linearization_coefficient(b, eta):
    eta = np.asarray(eta, dtype=float)
    return 1.0 / eta + b * b * eta / (1.0 + (b * eta) ** 2)


def g0(b, s, eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise DomainError("g0 needs eta > 0")
    if np.any(np.asarray(s) <= 0):
        raise DomainError("g0 needs s > 0")
    return 2.0 * (s * np.log(s) - s) + eh_potential(b, eta) / b


def g1_closed_form(b, eta):
    """Closed form of the first correction (source identically 1)."""
    eta = np.asarray(eta, dtype=float)
    w = _w(b, eta)
    log_ratio = 2.0 * np.log(b * eta) - 2.0 * np.log1p(w)
    return (np.log(eta) + 0.5 * (b * eta) ** 2 - 0.5 * log_ratio) / (3.0 * b * b)


# ---------------------------------------------------------------------------
# Functions of eta
# ---------------------------------------------------------------------------

class EtaFunction:
    """A function of eta on [0, eta_max] with two derivatives."""

    eta_max = np.inf

    def value(self, eta):
        raise NotImplementedError

    def d1(self, eta):
        raise NotImplementedError

    def d2(self, eta):
        raise NotImplementedError

    def __call__(self, eta):
        return self.value(eta)


class CallableEta(EtaFunction):
    def __init__(self, f, f1=None, f2=None, eta_max=np.inf):
        self._f, self._f1, self._f2 = f, f1, f2
        self.eta_max = eta_max

    def value(self, eta):
        return np.asarray(self._f(np.asarray(eta, dtype=float)), dtype=float) * np.ones(np.shape(eta))

    def d1(self, eta):
        if self._f1 is None:
            raise NotImplementedError("no first derivative supplied")
        return np.asarray(self._f1(np.asarray(eta, dtype=float)), dtype=float) * np.ones(np.shape(eta))

    def d2(self, eta):
        if self._f2 is None:
            raise NotImplementedError("no second derivative supplied")
        return np.asarray(self._f2(np.asarray(eta, dtype=float)), dtype=float) * np.ones(np.shape(eta))


class SplitEta(EtaFunction):
    """``coeff * eta**degree + remainder(eta)``.

    The remainder is held on Chebyshev-Lobatto panels; its value and slope
    are both stored so the first derivative needs no differentiation.
    """

    def __init__(self, coeff, degree, remainder: chebpanel.PanelFunction):
        self.coeff = float(coeff)
        self.degree = int(degree)
        self.remainder = remainder
        self.eta_max = remainder.hi

    def poly(self, eta, nu=0):
        p, c = self.degree, self.coeff
        if nu == 0:
            return c * eta ** p
        if nu == 1:
            return c * p * eta ** (p - 1) if p >= 1 else 0.0 * eta
        return c * p * (p - 1) * eta ** (p - 2) if p >= 2 else 0.0 * eta

    def value(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.poly(eta) + self.remainder(eta)

    def d1(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.poly(eta, 1) + self.remainder.d1(eta)

    def d2(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.poly(eta, 2) + self.remainder.d2(eta)

    def remainder_value(self, eta):
        return self.remainder(np.asarray(eta, dtype=float))

    def remainder_d1(self, eta):
        return self.remainder.d1(np.asarray(eta, dtype=float))


def linearized_operator(b, h: EtaFunction, eta):
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    zero = eta == 0
    pos = ~zero
    if np.any(pos):
        e = eta[pos]
        out[pos] = h.d2(e) + linearization_coefficient(b, e) * h.d1(e)
    if np.any(zero):
        out[zero] = 2.0 * h.d2(np.zeros(int(zero.sum())))
    return out


def _poly_operator(b, coeff, degree, eta):
    """Linearized operator applied to ``coeff * eta**degree``."""
    if degree == 0 or coeff == 0:
        return np.zeros_like(eta)
    p = degree
    x2 = (b * eta) ** 2
    return coeff * p * eta ** (p - 2) * (p + x2 / (1.0 + x2))


def solve_correction(b, H, eta_max=1e3, poly=None, constant=0.0, rtol=1e-13):
    """Solve the linearized ODE with source ``H``; both integrals start at 0.

    ``poly = (coeff, degree)`` splits off an explicit monomial: the stored
    remainder solves the ODE with source ``H - L[poly]``.  Each panel of the
    nested cumulative integral is refined until its Chebyshev tail is below
    ``rtol`` relative to the panel's largest coefficient.
    """
    coeff, degree = poly if poly is not None else (0.0, 0)
    if degree not in (0,) and degree < 2:
        raise ValueError("split monomial must have degree >= 2")

    def sources(x):
        h = np.asarray(H(x), dtype=float) * np.ones_like(x)
        return h - _poly_operator(b, coeff, degree, x), np.abs(h)

    def tail(values, scale):
        c = np.abs(chebpanel.cheb_coeffs(values))
        return float(np.max(c[-3:]) / max(scale, np.max(c), 1e-300))

    # Tails are measured against the size of the raw source, since the
    # split-off monomial cancels most of it at large eta.
    breaks = chebpanel.geometric_breaks(1.0 / b, eta_max)
    stack = [(a, c, 0) for a, c in zip(breaks[:-1], breaks[1:])][::-1]
    inner_acc = 0.0
    inner_abs = 0.0
    outer_acc = float(constant)
    out_breaks = [0.0]
    values, slopes = [], []
    worst = 0.0
    while stack:
        a, c, depth = stack.pop()
        x = chebpanel.lobatto_nodes(a, c)
        src, size = sources(x)
        wx = x * _w(b, x)
        q = wx * src
        inner = inner_acc + chebpanel.panel_integral(q, a, c)
        scale_inner = inner_abs + chebpanel.panel_integral(wx * size, a, c)
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = np.where(x > 0, inner / wx, 0.0)
            slope_scale = np.max(np.where(x > 0, scale_inner / wx, 0.0))
        ratio = max(tail(q, np.max(wx * size)), tail(slope, slope_scale))
        if ratio > rtol and depth < 14:
            mid = 0.5 * (a + c)
            stack.append((mid, c, depth + 1))
            stack.append((a, mid, depth + 1))
            continue
        worst = max(worst, ratio)
        val = outer_acc + chebpanel.panel_integral(slope, a, c)
        inner_acc = inner[-1]
        inner_abs = scale_inner[-1]
        outer_acc = val[-1]
        out_breaks.append(c)
        values.append(val)
        slopes.append(slope)
    if worst > 1e3 * rtol:
        raise AccuracyError(f"nested quadrature stalled at relative tail {worst:.2e}", achieved=worst)
    panels = chebpanel.PanelFunction(out_breaks, values, slopes)
    return SplitEta(coeff, degree, panels)


# ---------------------------------------------------------------------------
# Residual series
# ---------------------------------------------------------------------------

@dataclass
class Jets:
    """Values of G_j, G_j', G_j'' and H_j (j = 1..k) on an eta array."""

    eta: np.ndarray
    G: list = field(default_factory=list)
    G1: list = field(default_factory=list)
    G2: list = field(default_factory=list)
    H: list = field(default_factory=list)

    @property
    def k(self):
        return len(self.G)


def _y_ratio(b, eta, G1, G2):
    """(G' + eta G'') * sqrt(1+b^2 eta^2) / (b eta), with its eta -> 0 limit."""
    w = _w(b, eta)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (G1 + eta * G2) * w / (b * eta)
    return np.where(eta > 0, out, 2.0 * G2 / b)


def residual_series(b, jets: Jets, order, upto=None):
    """u-series of the rescaled residual for the partial sum through ``upto``.

    The ``2 log s`` terms and ``log(A B) = 0`` cancel analytically, where
    A, B are the zeroth-order eigenvalue factors.
    """
    eta = jets.eta
    upto = jets.k if upto is None else upto
    w = _w(b, eta)
    x_ratio = b * eta / w
    res = SeriesInU.monomial(w / b, 1, order)
    X = SeriesInU.constant(np.ones_like(eta), order)
    Y = SeriesInU.constant(np.ones_like(eta), order)
    for i in range(1, upto + 1):
        G, G1, G2 = jets.G[i - 1], jets.G1[i - 1], jets.G2[i - 1]
        res = res + SeriesInU.monomial(eta * G1 - i * G, i + 1, order)
        X = X + SeriesInU.monomial(G1 * x_ratio, i, order)
        Y = Y + SeriesInU.monomial(_y_ratio(b, eta, G1, G2), i, order)
    return res - X.log() - Y.log()


class CorrectionSeries:
    """The correction terms ``G_1 .. G_k`` for area parameter ``b``.

    ``terms[j-1]`` is a :class:`SplitEta` whose explicit monomial is the
    large-eta leading term.  The integration constants follow the nested
    integral from 0, except ``G_1`` which carries the constant of its closed
    form (zero constant term in its large-eta expansion).
    """

    def __init__(self, b, k, eta_max=1e3, rtol=1e-13, cross_check=False):
        if not b > 0:
            raise DomainError("b must be positive")
        if not 0 <= k <= MAX_ORDER:
            raise DomainError(f"correction order must be in [0, {MAX_ORDER}]")
        self.b = float(b)
        self.k = int(k)
        self.eta_max = float(eta_max)
        self.terms = []
        for j in range(1, k + 1):
            source = (lambda x, j=j: self.source(j, x))
            constant = np.log(2.0 / self.b) / (3.0 * self.b ** 2) if j == 1 else 0.0
            term = solve_correction(
                self.b, source, eta_max, poly=(leading_coefficient(j), j + 1), constant=constant, rtol=rtol
            )
            self.terms.append(term)
            if cross_check and j < k:
                check_source(self, j + 1)

    g0_closed_form = True

    def __repr__(self):
        return f"CorrectionSeries(b={self.b}, k={self.k}, eta_max={self.eta_max:g})"

    def truncated(self, k):
        """A view of the first ``k`` terms."""
        other = object.__new__(CorrectionSeries)
        other.b, other.k, other.eta_max = self.b, k, self.eta_max
        other.terms = self.terms[:k]
        return other

    def jets(self, eta, upto=None):
        eta = np.asarray(eta, dtype=float)
        upto = len(self.terms) if upto is None else upto
        if np.any(eta > self.eta_max) and upto > 0:
            raise DomainError(f"eta beyond eta_max={self.eta_max:g}")
        jets = Jets(eta)
        c = None
        for i in range(1, upto + 1):
            if i == 1:
                H = np.ones_like(eta)
            else:
                ser = residual_series(self.b, jets, order=i)
                H = ser[i] * self.b / _w(self.b, eta)
            term = self.terms[i - 1]
            G1 = term.d1(eta)
            if c is None:
                with np.errstate(divide="ignore", invalid="ignore"):
                    c = linearization_coefficient(self.b, eta)
            G2 = np.where(eta > 0, H - np.where(eta > 0, c, 0.0) * G1, 0.5 * H)
            jets.G.append(term.value(eta))
            jets.G1.append(G1)
            jets.G2.append(G2)
            jets.H.append(H)
        return jets

    def source(self, j, eta):
        """H_j at ``eta`` from the terms below ``j`` (pointwise)."""
        eta = np.asarray(eta, dtype=float)
        if j == 1:
            return np.ones_like(eta)
        if j - 1 > len(self.terms):
            raise ValueError(f"need terms 1..{j - 1} to extract H_{j}")
        jets = self.jets(eta, upto=j - 1)
        ser = residual_series(self.b, jets, order=j)
        return ser[j] * self.b / _w(self.b, eta)


# ---------------------------------------------------------------------------
# Source extraction (two routes)
# ---------------------------------------------------------------------------

def extract_source(b, j, previous: CorrectionSeries, check_points=(0.5, 1.0, 2.0), tol=1e-6):
    """H_j as a pointwise function, cross-checked against extrapolation."""
    if abs(previous.b - b) > 0:
        raise ValueError("series was built for a different b")
    if j - 1 > len(previous.terms):
        raise ValueError(f"need terms 1..{j - 1}")
    if check_points:
        check_source(previous, j, check_points, tol)
    return CallableEta(lambda x: previous.source(j, x), eta_max=previous.eta_max)


def check_source(series: CorrectionSeries, j, points=(0.5, 1.0, 2.0), tol=1e-6):
    eta = np.asarray(points, dtype=float)
    fast = series.source(j, eta)
    slow = np.array([extract_source_extrapolated(series, j, e) for e in eta])
    spread = np.max(np.abs(fast - slow) / np.maximum(1.0, np.abs(slow)))
    if spread > tol:
        raise ExtractionError(f"H_{j}: series and extrapolation disagree by {spread:.2e}", spread=spread)
    return spread


def _direct_residual_mp(b, s, eta, G, G1, G2):
    """Rescaled residual of the partial sum, term by term as written, in mpmath."""
    b = mpmath.mpf(b)
    s = mpmath.mpf(s)
    eta = mpmath.mpf(eta)
    w = mpmath.sqrt(1 + (b * eta) ** 2)
    Gs = 2 * mpmath.log(s)
    Ge = w / (b * eta)
    Gee = -1 / (b * eta ** 2 * w)
    for i, (g, g1, g2) in enumerate(zip(G, G1, G2), start=1):
        Gs -= i * s ** (-i - 1) * mpmath.mpf(g)
        Ge += s ** (-i) * mpmath.mpf(g1)
        Gee += s ** (-i) * mpmath.mpf(g2)
    return Gs + eta / s * Ge - mpmath.log(Ge * (Ge + eta * Gee)) - 2 * mpmath.log(s)


def extract_source_extrapolated(series: CorrectionSeries, j, eta, s0=1e3, ratio=4.0, dps=60):
    """H_j(eta) from the large-s behaviour of the residual of the partial sum.

    ``s**j * residual`` is sampled on the ladder ``s0 * ratio**m``; the fit
    removes the two next orders and, for j >= 2, the rounding-level
    remnants of the orders below j.
    """
    if j == 1:
        return 1.0
    jets = series.jets(np.array([eta], dtype=float), upto=j - 1)
    G = [g[0] for g in jets.G]
    G1 = [g[0] for g in jets.G1]
    G2 = [g[0] for g in jets.G2]
    lower = j - 1
    n = lower + 3
    with mpmath.workdps(dps):
        s_vals = [mpmath.mpf(s0) * mpmath.mpf(ratio) ** m for m in range(n)]
        rows, rhs = [], []
        for s in s_vals:
            r = _direct_residual_mp(series.b, s, eta, G, G1, G2) * s ** j
            rows.append([s ** (j - i) for i in range(1, lower + 1)] + [1, 1 / s, 1 / s ** 2])
            rhs.append(r)
        sol = mpmath.lu_solve(mpmath.matrix(rows), mpmath.matrix(rhs))
        coeff = sol[lower]
        w = mpmath.sqrt(1 + (mpmath.mpf(series.b) * eta) ** 2)
        return float(coeff * series.b / w)


# ---------------------------------------------------------------------------
# Partial sums and residuals
# ---------------------------------------------------------------------------

def partial_sum(series: CorrectionSeries, s, eta):
    """G0 + sum_j s**-j G_j; -inf at eta = 0 (the log term of G0)."""
    eta = np.asarray(eta, dtype=float)
    out = np.full(eta.shape, -np.inf)
    pos = eta > 0
    if np.any(pos):
        out[pos] = g0(series.b, s, eta[pos])
    for j, term in enumerate(series.terms, start=1):
        out = out + s ** (-j) * term.value(eta)
    return out


def _check_positive(eta, Xsum, Ysum, s):
    if np.any(1.0 + Xsum <= 0) or np.any(1.0 + Ysum <= 0):
        bad = np.flatnonzero(np.ravel((1.0 + Xsum <= 0) | (1.0 + Ysum <= 0)))
        raise PositivityError(
            f"partial sum not plurisubharmonic at s={s:g}", where=np.ravel(eta)[bad[:5]].tolist()
        )


def _residual_parts(series, s, eta, jets):
    b = series.b
    u = 1.0 / s
    w = _w(b, eta)
    x_ratio = b * eta / w
    poly = u * w / b
    Xsum = np.zeros_like(eta)
    Ysum = np.zeros_like(eta)
    for i in range(1, jets.k + 1):
        G, G1, G2 = jets.G[i - 1], jets.G1[i - 1], jets.G2[i - 1]
        poly = poly + u ** (i + 1) * (eta * G1 - i * G)
        Xsum = Xsum + u ** i * G1 * x_ratio
        Ysum = Ysum + u ** i * _y_ratio(b, eta, G1, G2)
    return poly, Xsum, Ysum


def residual(series: CorrectionSeries, s, eta):
    """Residual of the partial sum in the rescaled flow equation.

    Evaluated with the ``2 log s`` terms and the zeroth-order log-det
    cancelled analytically, so no large terms cancel numerically.
    """
    eta = np.asarray(eta, dtype=float)
    jets = series.jets(eta)
    poly, Xsum, Ysum = _residual_parts(series, s, eta, jets)
    _check_positive(eta, Xsum, Ysum, s)
    return poly - np.log1p(Xsum) - np.log1p(Ysum)


def _source_slope(series, i, eta):
    """d H_i / d eta by a fourth-order central difference."""
    if i == 1:
        return np.zeros_like(eta)
    h = np.maximum(np.minimum(1e-3 * np.maximum(eta, 1.0), 0.25 * eta), 1e-6)
    f = lambda x: series.source(i, x)
    return (8 * (f(eta + h) - f(eta - h)) - (f(eta + 2 * h) - f(np.abs(eta - 2 * h)))) / (12 * h)


def residual_derivatives(series: CorrectionSeries, s, eta):
    """(F, dF/deta, dF/ds) for the residual F of the partial sum (eta > 0)."""
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise DomainError("derivatives need eta > 0")
    b = series.b
    u = 1.0 / s
    w = _w(b, eta)
    jets = series.jets(eta)
    poly, Xsum, Ysum = _residual_parts(series, s, eta, jets)
    _check_positive(eta, Xsum, Ysum, s)
    F = poly - np.log1p(Xsum) - np.log1p(Ysum)

    c = linearization_coefficient(b, eta)
    dc = -1.0 / eta ** 2 + b * b * (1.0 - (b * eta) ** 2) / w ** 4
    x_ratio = b * eta / w
    dF_eta = u * b * eta / w
    dF_u = w / b
    dX_eta = np.zeros_like(eta)
    dY_eta = np.zeros_like(eta)
    dX_u = np.zeros_like(eta)
    dY_u = np.zeros_like(eta)
    for i in range(1, jets.k + 1):
        G, G1, G2, H = jets.G[i - 1], jets.G1[i - 1], jets.G2[i - 1], jets.H[i - 1]
        G3 = _source_slope(series, i, eta) - c * G2 - dc * G1
        L = G1 + eta * G2
        dL = 2 * G2 + eta * G3
        X = G1 * x_ratio
        Y = L * w / (b * eta)
        dX = G2 * x_ratio + G1 * b / w ** 3
        dY = dL * w / (b * eta) - L / (b * eta ** 2 * w)
        dF_eta = dF_eta + u ** (i + 1) * ((1 - i) * G1 + eta * G2)
        dX_eta += u ** i * dX
        dY_eta += u ** i * dY
        dF_u = dF_u + (i + 1) * u ** i * (eta * G1 - i * G)
        dX_u += i * u ** (i - 1) * X
        dY_u += i * u ** (i - 1) * Y
    dF_eta = dF_eta - dX_eta / (1 + Xsum) - dY_eta / (1 + Ysum)
    dF_u = dF_u - dX_u / (1 + Xsum) - dY_u / (1 + Ysum)
    return F, dF_eta, -u * u * dF_u


def f_eh(series: CorrectionSeries, t, rho):
    return residual(series, t, t * np.asarray(rho, dtype=float))


def f_eh_gradient_norm(series: CorrectionSeries, t, rho):
    """|grad f| measured with the zeroth-order cap metric."""
    eta = t * np.asarray(rho, dtype=float)
    _, dF, _ = residual_derivatives(series, t, eta)
    return np.sqrt(_w(series.b, eta) / series.b) * np.abs(dF)


def f_eh_time_derivative(series: CorrectionSeries, t, rho):
    eta = t * np.asarray(rho, dtype=float)
    _, dF_eta, dF_s = residual_derivatives(series, t, eta)
    return eta / t * dF_eta + dF_s


# ---------------------------------------------------------------------------
# Large-eta coefficient
# ---------------------------------------------------------------------------

def asymptotic_coefficient(series: CorrectionSeries, j, window=(1e2, 1e3), samples=200, max_residual=1e-8):
    """Least-squares coefficient of eta^(j+1) in G_j over ``window``.

    The basis carries every lower power together with ``eta**m log(eta)``
    companions, so slowly varying corrections are not absorbed into the
    leading coefficient.
    """
    if not 1 <= j <= len(series.terms):
        raise ValueError(f"j must be in 1..{len(series.terms)}")
    lo, hi = window
    if hi > series.eta_max:
        raise DomainError("fit window exceeds eta_max")
    eta = np.geomspace(lo, hi, samples)
    y = series.terms[j - 1].value(eta)
    x = eta / hi
    cols = [x ** (j + 1)]
    for m in range(j, -1, -1):
        cols.append(x ** m)
        cols.append(x ** m * np.log(x))
    cols += [x ** -1, x ** -2]
    basis = np.stack(cols, axis=1)
    scale = hi ** (j + 1)
    coef, *_ = np.linalg.lstsq(basis, y / scale, rcond=None)
    fit = basis @ coef
    rel = np.max(np.abs(fit - y / scale)) / np.max(np.abs(y / scale))
    if rel > max_residual:
        raise FitError(f"asymptotic fit residual {rel:.2e} too large")
    return float(coef[0])


# ---------------------------------------------------------------------------
# Cap potential as a radial profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CapProfile(RadialProfile):
    """phi_EH^(k)(t, rho) = partial sum at (s, eta) = (t, t rho)."""

    series: CorrectionSeries
    t: float

    @property
    def cap_scale(self):
        return 0.5 / (self.series.b * self.t)

    def _hat(self, rho):
        rho = np.asarray(rho, dtype=float)
        eta = self.t * rho
        b, u = self.series.b, 1.0 / self.t
        w = _w(b, eta)
        jets = self.series.jets(eta)
        with np.errstate(divide="ignore"):
            Ge = w / (b * eta)
            Gee = -1.0 / (b * eta ** 2 * w)
        Gs = 2.0 * np.log(self.t) * np.ones_like(eta)
        L = b * eta / w  # G_eta + eta G_etaeta without cancellation
        for i in range(1, jets.k + 1):
            Ge = Ge + u ** i * jets.G1[i - 1]
            Gee = Gee + u ** i * jets.G2[i - 1]
            Gs = Gs - i * u ** (i + 1) * jets.G[i - 1]
            L = L + u ** i * (jets.G1[i - 1] + eta * jets.G2[i - 1])
        return eta, Ge, Gee, Gs, L

    def value(self, rho):
        return partial_sum(self.series, self.t, self.t * np.asarray(rho, dtype=float))

    def d1(self, rho):
        return self.t * self._hat(rho)[1]

    def d2(self, rho):
        return self.t ** 2 * self._hat(rho)[2]

    def psi(self, rho):
        """F' + rho F'' evaluated without cancellation near rho = 0."""
        return self.t * self._hat(rho)[4]

    def dt(self, rho):
        eta, Ge, _, Gs, _ = self._hat(rho)
        return Gs + eta / self.t * Ge
