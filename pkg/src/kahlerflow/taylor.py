"""Truncated Taylor series in a small parameter u, with array-valued coefficients.

Used for order bookkeeping in u = 1/s: every coefficient may be an array
(one entry per grid point in eta), and all arithmetic is truncated at a
fixed order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["SeriesInU"]


class SeriesInU:
    """Coefficients ``c[0..m]`` of ``sum_j c[j] u**j``, truncated at order ``m``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim == 0:
            raise ValueError("need at least one coefficient")

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, order, shape=()):
        return cls(np.zeros((order + 1,) + tuple(shape)))

    @classmethod
    def constant(cls, value, order):
        value = np.asarray(value, dtype=float)
        out = np.zeros((order + 1,) + value.shape)
        out[0] = value
        return cls(out)

    @classmethod
    def monomial(cls, value, power, order):
        """``value * u**power`` (zero if power exceeds the truncation)."""
        value = np.asarray(value, dtype=float)
        out = np.zeros((order + 1,) + value.shape)
        if power <= order:
            out[power] = value
        return cls(out)

    # basic properties ---------------------------------------------------
    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def __getitem__(self, j):
        return self.coeffs[j]

    def __repr__(self):
        return f"SeriesInU(order={self.order}, shape={self.shape})"

    def _coerce(self, other):
        if isinstance(other, SeriesInU):
            if other.order != self.order:
                m = min(other.order, self.order)
                return other.truncate(m), m
            return other, self.order
        return SeriesInU.constant(np.broadcast_to(other, self.shape), self.order), self.order

    def truncate(self, order):
        return SeriesInU(self.coeffs[: order + 1])

    # arithmetic ---------------------------------------------------------
    def __neg__(self):
        return SeriesInU(-self.coeffs)

    def __add__(self, other):
        other, m = self._coerce(other)
        return SeriesInU(self.coeffs[: m + 1] + other.coeffs[: m + 1])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, SeriesInU) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SeriesInU):
            return SeriesInU(self.coeffs * np.asarray(other, dtype=float))
        other, m = self._coerce(other)
        a, b = self.coeffs[: m + 1], other.coeffs[: m + 1]
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for n in range(m + 1):
            for k in range(n + 1):
                out[n] += a[k] * b[n - k]
        return SeriesInU(out)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.coeffs
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for n in range(1, self.order + 1):
            acc = np.zeros_like(a[0])
            for k in range(1, n + 1):
                acc = acc + a[k] * out[n - k]
            out[n] = -acc / a[0]
        return SeriesInU(out)

    def __truediv__(self, other):
        if not isinstance(other, SeriesInU):
            return SeriesInU(self.coeffs / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def shift(self, power):
        """Multiply by ``u**power`` (keeps the truncation order)."""
        out = np.zeros_like(self.coeffs)
        if power <= self.order:
            out[power:] = self.coeffs[: self.order + 1 - power]
        return SeriesInU(out)

    def log(self):
        a = self.coeffs
        if np.any(a[0] <= 0):
            raise ValueError("log of a series needs a positive constant term")
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for n in range(1, self.order + 1):
            acc = n * a[n]
            for k in range(1, n):
                acc = acc - k * out[k] * a[n - k]
            out[n] = acc / (n * a[0])
        return SeriesInU(out)

    def exp(self):
        a = self.coeffs
        out = np.zeros_like(a)
        out[0] = np.exp(a[0])
        for n in range(1, self.order + 1):
            acc = np.zeros_like(a[0])
            for k in range(1, n + 1):
                acc = acc + k * a[k] * out[n - k]
            out[n] = acc / n
        return SeriesInU(out)

    def __call__(self, u):
        """Horner evaluation at ``u``."""
        out = np.zeros(np.broadcast_shapes(self.shape, np.shape(u)))
        for c in self.coeffs[::-1]:
            out = out * u + c
        return out
