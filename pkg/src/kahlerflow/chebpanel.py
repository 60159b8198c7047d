"""Piecewise Chebyshev-Lobatto representation of functions on [0, L].

Each panel carries samples at ``n+1`` Lobatto points; evaluation is
barycentric, integration and differentiation go through the Chebyshev
coefficients.  ``adaptive_panels`` builds the panels adaptively.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct

from .exceptions import AccuracyError, DomainError

NODES = 24
_REF = np.cos(np.pi * np.arange(NODES + 1) / NODES)[::-1]  # ascending on [-1, 1]
_BARY = np.ones(NODES + 1)
_BARY[1::2] = -1.0
_BARY[0] *= 0.5
_BARY[-1] *= 0.5


def lobatto_nodes(a, b):
    return 0.5 * (a + b) + 0.5 * (b - a) * _REF


def cheb_coeffs(values):
    """Chebyshev coefficients from samples at ascending Lobatto nodes.

    ``values`` may carry trailing batch axes.
    """
    v = np.asarray(values, dtype=float)[::-1]  # dct expects x_j = cos(pi j/n)
    c = dct(v, type=1, axis=0) / NODES
    c[0] *= 0.5
    c[-1] *= 0.5
    return c


def tail_ratio(values):
    """Size of the last three coefficients relative to the largest one."""
    c = np.abs(cheb_coeffs(values))
    scale = np.max(c, axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return np.max(np.max(c[-3:], axis=0) / scale)


def panel_integral(values, a, b):
    """Cumulative integral from ``a`` evaluated at the panel nodes."""
    c = cheb_coeffs(values)
    ci = C.chebint(c, lbnd=-1) * (0.5 * (b - a))
    return C.chebval(_REF, ci)


def panel_derivative(values, a, b):
    c = cheb_coeffs(values)
    cd = C.chebder(c) * (2.0 / (b - a))
    return C.chebval(_REF, cd)


def barycentric(x, a, b, values):
    """Barycentric interpolation on one panel (x inside [a, b])."""
    xr = (2.0 * x - (a + b)) / (b - a)
    diff = xr[:, None] - _REF[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = _BARY[None, :] / diff
        out = (kern @ values) / kern.sum(axis=1)
    hit = exact.any(axis=1)
    if np.any(hit):
        out[hit] = values[np.argmax(exact[hit], axis=1)]
    return out


class PanelFunction:
    """Samples of a function (and optionally its derivative) on panels."""

    def __init__(self, breaks, values, slopes=None):
        self.breaks = np.asarray(breaks, dtype=float)
        self.values = np.asarray(values, dtype=float)  # (panels, NODES+1)
        self.slopes = None if slopes is None else np.asarray(slopes, dtype=float)
        self._d2 = None

    @property
    def lo(self):
        return self.breaks[0]

    @property
    def hi(self):
        return self.breaks[-1]

    def _locate(self, x):
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise DomainError(f"evaluation outside [{self.lo}, {self.hi}]")
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(idx, 0, len(self.breaks) - 2)

    def _eval(self, x, table):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty_like(flat)
        idx = self._locate(flat)
        for p in np.unique(idx):
            m = idx == p
            out[m] = barycentric(flat[m], self.breaks[p], self.breaks[p + 1], table[p])
        return out.reshape(x.shape)

    def __call__(self, x):
        return self._eval(x, self.values)

    def d1(self, x):
        if self.slopes is None:
            self.slopes = np.array(
                [panel_derivative(v, a, b) for v, a, b in zip(self.values, self.breaks[:-1], self.breaks[1:])]
            )
        return self._eval(x, self.slopes)

    def d2(self, x):
        if self._d2 is None:
            base = self.slopes if self.slopes is not None else None
            if base is None:
                self.d1(self.breaks[:1])
                base = self.slopes
            self._d2 = np.array(
                [panel_derivative(v, a, b) for v, a, b in zip(base, self.breaks[:-1], self.breaks[1:])]
            )
        return self._eval(x, self._d2)


def geometric_breaks(scale, upper, first=0.25):
    """[0, first*scale, 2*first*scale, ...] up to and including ``upper``."""
    pts = [0.0]
    x = first * scale
    while x < upper:
        pts.append(x)
        x *= 2.0
    pts.append(float(upper))
    return np.array(pts)


def adaptive_panels(func, breaks, rtol=1e-13, max_depth=12):
    """Refine ``breaks`` until ``func`` is resolved on every panel.

    ``func`` maps an array of points to values (last axis may be batched).
    Returns the refined breakpoints and samples per panel.
    """
    out_breaks = [breaks[0]]
    samples = []
    worst = 0.0
    stack = [(a, b, 0) for a, b in zip(breaks[:-1], breaks[1:])][::-1]
    while stack:
        a, b, depth = stack.pop()
        x = lobatto_nodes(a, b)
        v = np.asarray(func(x), dtype=float)
        ratio = tail_ratio(v)
        if ratio > rtol and depth < max_depth:
            mid = 0.5 * (a + b)
            stack.append((mid, b, depth + 1))
            stack.append((a, mid, depth + 1))
            continue
        worst = max(worst, ratio)
        out_breaks.append(b)
        samples.append(v)
    if worst > 1e3 * rtol:
        raise AccuracyError(f"panel refinement stalled at relative tail {worst:.2e}", achieved=worst)
    return np.array(out_breaks), np.array(samples)
