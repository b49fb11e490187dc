"""Truncated power series in one variable.

A series of truncation order ``K`` is stored as its ``K + 1`` coefficients
``c[0] .. c[K]`` of ``(t - t0)**k``.  The array kernels below operate on the
last axis, so a stack of series (one per pair, per coordinate, ...) is handled
by the same code as a single one.  The ``*_term`` kernels compute a single
coefficient from already known lower-order ones; the Taylor recursion in
:mod:`nbody_taylor.taylor` builds its series one order at a time with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NearSingularSeriesError, OrderMismatchError

#: relative size of the leading coefficient below which recip/sqrt refuse to run
SINGULAR_RTOL = 1e-12

DEFAULT_ORDER = 20
MIN_ORDER = 4
MAX_ORDER = 60


# ---------------------------------------------------------------------------
# array kernels (last axis = order)
# ---------------------------------------------------------------------------

def cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product of coefficient arrays of equal length.

    Each output coefficient is accumulated in ascending order of the index of
    ``a``, i.e. exactly the order of schoolbook polynomial multiplication.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for i in range(n):
        out[..., i:] += a[..., i, None] * b[..., : n - i]
    return out


def cauchy_term(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """Coefficient ``k`` of ``a * b``; needs ``a[..., :k+1]`` and ``b[..., :k+1]``."""
    return (a[..., : k + 1] * b[..., k::-1]).sum(axis=-1)


def recip_term(a: np.ndarray, r: np.ndarray, k: int) -> np.ndarray:
    """Coefficient ``k >= 1`` of ``1 / a`` given ``r[..., :k]``."""
    return -(a[..., 1 : k + 1] * r[..., k - 1 :: -1][..., :k]).sum(axis=-1) / a[..., 0]


def sqrt_term(a_k: np.ndarray, s: np.ndarray, k: int) -> np.ndarray:
    """Coefficient ``k >= 1`` of ``sqrt(a)`` given ``a_k`` and ``s[..., :k]``."""
    if k == 1:
        return a_k / (2.0 * s[..., 0])
    conv = (s[..., 1:k] * s[..., k - 1 : 0 : -1]).sum(axis=-1)
    return (a_k - conv) / (2.0 * s[..., 0])


def sincos_term(a: np.ndarray, sn: np.ndarray, cs: np.ndarray, k: int):
    """Coefficient ``k >= 1`` of ``sin(a)`` and ``cos(a)``.

    Uses ``sin' = cos * a'`` and ``cos' = -sin * a'`` coefficientwise.
    """
    w = np.arange(1, k + 1) * a[..., 1 : k + 1]
    s_k = (w * cs[..., k - 1 :: -1][..., :k]).sum(axis=-1) / k
    c_k = -(w * sn[..., k - 1 :: -1][..., :k]).sum(axis=-1) / k
    return s_k, c_k


def _check_leading(a: np.ndarray, floor_scale: float = 1.0) -> None:
    scale = np.max(np.abs(a), axis=-1)
    floor = SINGULAR_RTOL * floor_scale * scale
    bad = np.abs(a[..., 0]) <= floor
    if np.any(bad):
        raise NearSingularSeriesError(
            "leading coefficient too small relative to series magnitude "
            f"(|a0| <= {SINGULAR_RTOL * floor_scale:g} * max|a_k|)"
        )


def recip(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    _check_leading(a)
    r = np.zeros_like(a)
    r[..., 0] = 1.0 / a[..., 0]
    for k in range(1, a.shape[-1]):
        r[..., k] = recip_term(a, r, k)
    return r


def sqrt(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if np.any(a[..., 0] < 0):
        raise NearSingularSeriesError("square root of a series with negative leading term")
    # threshold is the reciprocal floor squared, in units of max|a_k|
    _check_leading(a, floor_scale=SINGULAR_RTOL)
    s = np.zeros_like(a)
    s[..., 0] = np.sqrt(a[..., 0])
    for k in range(1, a.shape[-1]):
        s[..., k] = sqrt_term(a[..., k], s, k)
    return s


def sincos(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    sn = np.zeros_like(a)
    cs = np.zeros_like(a)
    sn[..., 0] = np.sin(a[..., 0])
    cs[..., 0] = np.cos(a[..., 0])
    for k in range(1, a.shape[-1]):
        sn[..., k], cs[..., k] = sincos_term(a, sn, cs, k)
    return sn, cs


def horner(c: np.ndarray, dt) -> np.ndarray:
    """Evaluate ``sum_k c[..., k] * dt**k``."""
    c = np.asarray(c, dtype=float)
    p = c[..., -1] * 1.0
    for k in range(c.shape[-1] - 2, -1, -1):
        p = p * dt + c[..., k]
    return p


def derivative(c: np.ndarray) -> np.ndarray:
    """Coefficients of the term-by-term derivative (one order shorter)."""
    c = np.asarray(c, dtype=float)
    return c[..., 1:] * np.arange(1, c.shape[-1])


# ---------------------------------------------------------------------------
# value type
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Immutable truncated power series ``sum_k coeffs[k] * dt**k``."""

    coeffs: np.ndarray

    # numpy scalars and arrays defer to the series operators below
    __array_ufunc__ = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float, copy=True).reshape(-1)
        if c.size == 0:
            raise ValueError("a power series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("power series coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, value: float, order: int) -> PowerSeries:
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def zero(cls, order: int) -> PowerSeries:
        return cls(np.zeros(order + 1))

    @classmethod
    def one(cls, order: int) -> PowerSeries:
        return cls.constant(1.0, order)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        return f"PowerSeries({self.coeffs.tolist()!r})"

    def _other(self, other) -> np.ndarray:
        if isinstance(other, PowerSeries):
            if other.order != self.order:
                raise OrderMismatchError(
                    f"truncation orders differ: {self.order} vs {other.order}"
                )
            return other.coeffs
        return None

    def __add__(self, other):
        b = self._other(other)
        if b is None:
            c = self.coeffs.copy()
            c[0] += other
            return PowerSeries(c)
        return PowerSeries(self.coeffs + b)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        b = self._other(other)
        if b is None:
            return PowerSeries(self.coeffs * other)
        return PowerSeries(cauchy(self.coeffs, b))

    __rmul__ = __mul__

    def recip(self) -> PowerSeries:
        return PowerSeries(recip(self.coeffs))

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.recip()
        return PowerSeries(self.coeffs / other)

    def sqrt(self) -> PowerSeries:
        return PowerSeries(sqrt(self.coeffs))

    def deriv(self) -> PowerSeries:
        if self.order == 0:
            return PowerSeries([0.0])
        return PowerSeries(derivative(self.coeffs))

    def __call__(self, dt: float) -> float:
        return float(horner(self.coeffs, dt))

    def allclose(self, other: PowerSeries, rtol=1e-12, atol=1e-14) -> bool:
        b = self._other(other)
        return bool(np.allclose(self.coeffs, b, rtol=rtol, atol=atol))


def series_add(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    return a + b


def series_mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    return a * b


def series_recip(a: PowerSeries) -> PowerSeries:
    return a.recip()


def series_sqrt(a: PowerSeries) -> PowerSeries:
    return a.sqrt()


def series_eval(a: PowerSeries, dt: float) -> float:
    return a(dt)
