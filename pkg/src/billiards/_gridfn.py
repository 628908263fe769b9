"""Grid-sampled scalar functions of arc length with spectral calculus.

Two flavours back the series machinery: trigonometric interpolation on a
uniform grid for closed curves, Chebyshev interpolation on open windows.
Both support evaluation at arbitrary points, differentiation of any order,
and antiderivatives, all in coefficient space so that the high-order
derivatives the coefficient recursion consumes stay quiet.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C


class PeriodicFn:
    """Trig-interpolated function on a uniform grid over one period."""

    def __init__(self, start, length, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 8:
            raise ValueError("need a 1-d grid with at least 8 samples")
        self.start = float(start)
        self.length = float(length)
        self.values = values
        self.n = values.size
        self._coef = np.fft.rfft(values) / self.n
        self._omega = 2.0 * np.pi / self.length

    @classmethod
    def from_callable(cls, f, start, length, n):
        s = start + (length / n) * np.arange(n)
        return cls(start, length, f(s))

    @property
    def grid(self):
        return self.start + (self.length / self.n) * np.arange(self.n)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x = (s - self.start) * self._omega
        k = np.arange(1, self._coef.size)
        phases = np.exp(1j * np.multiply.outer(x, k))
        out = np.real(phases @ self._coef[1:]) * 2.0 + self._coef[0].real
        if self.n % 2 == 0:
            # Nyquist mode is real and carries weight 1, not 2
            out -= np.real(phases[..., -1] * self._coef[-1])
        return out if out.shape else float(out)

    def derivative(self, m=1):
        c = self._coef.copy()
        k = np.arange(c.size)
        c *= (1j * k * self._omega) ** m
        if self.n % 2 == 0 and m % 2 == 1:
            c[-1] = 0.0  # odd derivative of the Nyquist cosine has no grid rep
        vals = np.fft.irfft(c, self.n) * self.n
        return PeriodicFn(self.start, self.length, vals)

    def antiderivative(self):
        """Antiderivative vanishing at ``start``.

        The mean produces a non-periodic linear term; it is carried
        explicitly so closed-curve solvability residues stay visible.
        """
        c = self._coef.copy()
        mean = c[0].real
        c[0] = 0.0
        k = np.arange(1, c.size)
        c[1:] /= 1j * k * self._omega
        if self.n % 2 == 0:
            c[-1] = 0.0
        periodic = np.fft.irfft(c, self.n) * self.n
        per_fn = PeriodicFn(self.start, self.length, periodic)
        p0 = per_fn(self.start)
        return _PeriodicAntiderivative(per_fn, mean, self.start, p0)

    def mean(self):
        return self._coef[0].real

    def resolution_tail(self):
        """Relative magnitude of the top decade of modes; ~1 means unresolved."""
        mag = np.abs(self._coef)
        top = mag[-max(2, mag.size // 10):].max()
        return top / max(mag.max(), 1e-300)


class _PeriodicAntiderivative:
    def __init__(self, periodic, mean_rate, start, p0):
        self._per = periodic
        self.mean_rate = float(mean_rate)
        self._start = start
        self._p0 = p0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = self.mean_rate * (s - self._start) + self._per(s) - self._p0
        return out if out.shape else float(out)


class ChebFn:
    """Chebyshev-interpolated function on a closed interval."""

    def __init__(self, lo, hi, coef):
        self.lo = float(lo)
        self.hi = float(hi)
        self.coef = np.asarray(coef, dtype=float)

    @classmethod
    def from_callable(cls, f, lo, hi, n):
        x = C.chebpts2(n)
        s = 0.5 * (hi - lo) * (x + 1.0) + lo
        vals = f(s)
        coef = C.chebfit(x, vals, n - 1)
        return cls(lo, hi, coef)

    @classmethod
    def from_values(cls, lo, hi, values):
        n = len(values)
        x = C.chebpts2(n)
        coef = C.chebfit(x, values, n - 1)
        return cls(lo, hi, coef)

    @property
    def n(self):
        return self.coef.size

    @property
    def grid(self):
        x = C.chebpts2(self.coef.size)
        return 0.5 * (self.hi - self.lo) * (x + 1.0) + self.lo

    @property
    def values(self):
        return self(self.grid)

    def _to_unit(self, s):
        return 2.0 * (np.asarray(s, dtype=float) - self.lo) / (self.hi - self.lo) - 1.0

    def __call__(self, s):
        out = C.chebval(self._to_unit(s), self.coef)
        return out if np.ndim(out) else float(out)

    def derivative(self, m=1):
        scale = (2.0 / (self.hi - self.lo)) ** m
        return ChebFn(self.lo, self.hi, C.chebder(self.coef, m) * scale)

    def antiderivative(self):
        coef = C.chebint(self.coef) * (self.hi - self.lo) / 2.0
        fn = ChebFn(self.lo, self.hi, coef)
        shift = fn(self.lo)
        return ChebFn(self.lo, self.hi, coef - _delta0(coef.size, shift))

    def mean(self):
        return self.antiderivative()(self.hi) / (self.hi - self.lo)

    def resolution_tail(self):
        mag = np.abs(self.coef)
        top = mag[-max(2, mag.size // 10):].max()
        return top / max(mag.max(), 1e-300)


def _delta0(n, value):
    out = np.zeros(n)
    out[0] = value
    return out


def stencil7_derivative(values, h, order):
    """7-point central-stencil derivative of a uniformly sampled array.

    Kept for sampled-curve fallbacks; interior points only, ends are
    filled by one-sided stencils of reduced order.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if order == 1:
        w = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    elif order == 2:
        w = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
    else:
        raise ValueError("7-point path supports orders 1 and 2 only")
    out = np.empty(n)
    core = np.convolve(values, w[::-1], mode="valid") / h ** order
    out[3:n - 3] = core
    for i in list(range(3)) + list(range(n - 3, n)):
        sl = slice(0, 7) if i < 3 else slice(n - 7, n)
        x = (np.arange(n)[sl] - i) * h
        coeffs = np.polynomial.polynomial.polyfit(x, values[sl], 6)
        out[i] = coeffs[order] * _fact(order)
    return out


def _fact(k):
    out = 1
    for j in range(2, k + 1):
        out *= j
    return out
