"""Weighted sup and Hoelder seminorms for radial space-time fields.

Fields are callables ``field(t, r)`` returning values at radii ``r = |z|``.
The Hoelder part is a Monte-Carlo lower estimate: pairs are drawn from the
quasiparabolic neighbourhoods

    |z|, |z'| in [r/2, r + t^-1/2],   t <= t' <= t + (1 + t^1/2 r)^2,

restricted to a common ray, where the distance is the radial geodesic
length int sqrt(psi) d|z| of the time-t metric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import DomainError

__all__ = [
    "WeightedNormSpec",
    "weight",
    "weighted_sup_norm",
    "weighted_holder_norm",
    "RadialDistance",
    "sample_pairs",
    "HolderSample",
]


@dataclass(frozen=True)
class WeightedNormSpec:
    alpha: float = 0.5
    gamma: float = 1.5
    sigma_w: float = 2.0
    Lambda: float = 1.0
    pair_budget: int = 10_000
    delta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if self.gamma < 0 or self.sigma_w < 0 or not self.Lambda > 0:
            raise DomainError("weights must be nonnegative and Lambda positive")
        if self.pair_budget < 1:
            raise DomainError("pair_budget must be positive")


def weight(spec: WeightedNormSpec, t, r):
    """t^gamma (|z| + t^-1/2)^sigma, with |z| frozen at delta off the chart."""
    r = np.minimum(np.asarray(r, dtype=float), spec.delta)
    return t ** spec.gamma * (r + t ** -0.5) ** spec.sigma_w


def weighted_sup_norm(field, spec: WeightedNormSpec, times, radii):
    """max over the (t, r) grid of weight * |field|.

    Returns ``(value, t_arg, r_arg)``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if times.size == 0 or radii.size == 0:
        raise ValueError("empty grid")
    if np.any(times < spec.Lambda):
        raise DomainError("grid times must be >= Lambda")
    best = (-np.inf, np.nan, np.nan)
    for t in times:
        vals = weight(spec, t, radii) * np.abs(np.asarray(field(t, radii), dtype=float))
        i = int(np.argmax(vals))
        if vals[i] > best[0]:
            best = (float(vals[i]), float(t), float(radii[i]))
    return best


class RadialDistance:
    """Radial geodesic distance from ``psi(r)`` (eigenvalue along the ray)."""

    def __init__(self, psi, r_min, r_max, nodes=4000):
        if not 0 < r_min < r_max:
            raise DomainError("need 0 < r_min < r_max")
        r = np.concatenate([[0.0], np.geomspace(r_min, r_max, nodes)])
        p = np.asarray(psi(r[1:]), dtype=float)
        if np.any(p <= 0):
            raise DomainError("psi must be positive along the ray")
        speed = np.concatenate([[np.sqrt(p[0])], np.sqrt(p)])
        self._r = r
        self._s = cumulative_trapezoid(speed, r, initial=0.0)

    def arclength(self, r):
        return np.interp(r, self._r, self._s)

    def __call__(self, r1, r2):
        return np.abs(self.arclength(r2) - self.arclength(r1))


@dataclass
class HolderSample:
    t: np.ndarray
    t2: np.ndarray
    r: np.ndarray
    z1: np.ndarray
    z2: np.ndarray


def sample_pairs(spec: WeightedNormSpec, t, r, n, rng, time_levels=8):
    """Draw ``n`` same-ray pairs in the quasiparabolic neighbourhood of (t, r).

    Later times are drawn from ``time_levels`` equally spaced values so that
    the field is evaluated at a handful of times only.
    """
    lo, hi = 0.5 * r, r + t ** -0.5
    z1 = rng.uniform(lo, hi, n)
    z2 = rng.uniform(lo, hi, n)
    span = (1.0 + np.sqrt(t) * r) ** 2
    levels = t + span * np.arange(time_levels) / max(time_levels - 1, 1)
    t2 = levels[rng.integers(0, time_levels, n)]
    return HolderSample(np.full(n, t), t2, np.full(n, r), z1, z2)


def weighted_holder_norm(field, spec: WeightedNormSpec, times, radii, distance_for, strata_budget=None,
                         return_pairs=False):
    """Monte-Carlo estimate of the weighted Hoelder seminorm.

    ``distance_for(t)`` returns a :class:`RadialDistance` for the metric at
    time t.  Each (t, r) stratum gets ``pair_budget`` pairs unless
    ``strata_budget`` overrides it.  The estimate is a lower bound on the
    supremum.
    """
    rng = np.random.default_rng(spec.seed)
    n = strata_budget or spec.pair_budget
    best = 0.0
    found = False
    pairs = []
    for t in np.atleast_1d(times):
        dist = distance_for(t)
        for r in np.atleast_1d(radii):
            s = sample_pairs(spec, t, r, n, rng)
            f1 = np.asarray(field(t, s.z1), dtype=float)
            f2 = np.empty(n)
            for t2 in np.unique(s.t2):
                m = s.t2 == t2
                f2[m] = field(t2, s.z2[m])
            d = dist(s.z1, s.z2)
            denom = d ** 2 + (s.t2 - s.t)
            ok = denom > 0
            if not np.any(ok):
                continue
            found = True
            w = weight(spec, t, r) * (1.0 + np.sqrt(t) * r) ** (2 * spec.alpha)
            q = w * np.abs(f1[ok] - f2[ok]) / denom[ok] ** spec.alpha
            best = max(best, float(np.max(q)))
            if return_pairs:
                pairs.append((t, r, np.abs(f1[ok] - f2[ok]), denom[ok], max(np.max(np.abs(f1)), np.max(np.abs(f2)))))
    if not found:
        raise ValueError("pair sampler produced no valid pairs")
    return (best, pairs) if return_pairs else best
