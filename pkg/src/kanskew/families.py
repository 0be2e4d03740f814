"""Fiber-map families x -> phi_x(t) on [0,1].

A family exposes numpy-broadcasting ``value``, ``dt``, ``dtt`` and ``inverse``
callables of ``(x1, x2, t)``.  Presets with closed forms also report exact
derivative bounds so validation does not have to rely on sampling alone.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def monotone_inverse(func, dfunc, y, tol=1e-14, maxiter=100):
    """Solve func(t) = y for increasing func on [0,1] (safeguarded Newton, vectorized)."""
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    t = y.copy()
    for _ in range(maxiter):
        f = func(t) - y
        lo = np.where(f < 0, t, lo)
        hi = np.where(f > 0, t, hi)
        d = dfunc(t)
        step = f / d
        cand = t - step
        bad = ~((cand > lo) & (cand < hi))
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        done = np.abs(cand - t) <= tol * np.maximum(np.abs(t), 1e-300)
        t = cand
        if np.all(done | (f == 0)):
            break
    t = np.where(y <= 0.0, 0.0, np.where(y >= 1.0, 1.0, t))
    return t


class FiberFamily:
    """Base class; subclasses implement value/dt/dtt."""

    name = "custom"
    closed_form_bounds = None
    x_independent = False

    def value(self, x1, x2, t):
        raise NotImplementedError

    def dt(self, x1, x2, t):
        raise NotImplementedError

    def dtt(self, x1, x2, t):
        raise NotImplementedError

    def inverse(self, x1, x2, y):
        return monotone_inverse(
            lambda s: self.value(x1, x2, s), lambda s: self.dt(x1, x2, s), y
        )

    def describe(self):
        return {"family": self.name}


class CosineFamily(FiberFamily):
    """phi_x(t) = t + a t (1-t) cos(2 pi (w1 x1 + w2 x2)).

    With a = 1/32 and w = (1, 0) this is the fiber map of Kan's examples.
    """

    name = "cosine"

    def __init__(self, amplitude=1.0 / 32.0, wave=(1, 0)):
        self.amplitude = float(amplitude)
        self.wave = (int(wave[0]), int(wave[1]))
        a = abs(self.amplitude)
        # phi' = 1 + a(1-2t)c with c in [-1,1]; extremes at t in {0,1}, c = +-1
        self.closed_form_bounds = (1.0 - a, 1.0 + a)
        self.x_independent = self.wave == (0, 0)

    def _k(self, x1, x2):
        return self.amplitude * np.cos(TWO_PI * (self.wave[0] * np.asarray(x1) + self.wave[1] * np.asarray(x2)))

    def value(self, x1, x2, t):
        t = np.asarray(t, dtype=float)
        return t + self._k(x1, x2) * t * (1.0 - t)

    def dt(self, x1, x2, t):
        t = np.asarray(t, dtype=float)
        return 1.0 + self._k(x1, x2) * (1.0 - 2.0 * t)

    def dtt(self, x1, x2, t):
        t = np.asarray(t, dtype=float)
        return -2.0 * self._k(x1, x2) * np.ones_like(t)

    def inverse(self, x1, x2, y):
        # root of k t^2 - (1+k) t + y = 0 in [0,1], cancellation-free form
        y = np.asarray(y, dtype=float)
        k = self._k(x1, x2) * np.ones_like(y)
        disc = np.maximum((1.0 + k) ** 2 - 4.0 * k * y, 0.0)
        return 2.0 * y / ((1.0 + k) + np.sqrt(disc))

    def describe(self):
        return {"family": self.name, "amplitude": self.amplitude, "wave": list(self.wave)}


class ConstantFamily(FiberFamily):
    """x-independent family phi(t) = t + a t (1-t); every fiber map is the same."""

    name = "constant"
    x_independent = True

    def __init__(self, amplitude=1.0 / 32.0):
        self.amplitude = float(amplitude)
        a = abs(self.amplitude)
        self.closed_form_bounds = (1.0 - a, 1.0 + a)
        self._inner = CosineFamily(self.amplitude, (0, 0))

    def value(self, x1, x2, t):
        return self._inner.value(x1, x2, t)

    def dt(self, x1, x2, t):
        return self._inner.dt(x1, x2, t)

    def dtt(self, x1, x2, t):
        return self._inner.dtt(x1, x2, t)

    def inverse(self, x1, x2, y):
        return self._inner.inverse(x1, x2, y)

    def describe(self):
        return {"family": self.name, "amplitude": self.amplitude}


class CallableFamily(FiberFamily):
    """Wraps user callables phi(x1, x2, t), dphi, d2phi."""

    def __init__(self, value, dt, dtt, name="callable", x_independent=False):
        self._value, self._dt, self._dtt = value, dt, dtt
        self.name = name
        self.x_independent = x_independent

    def value(self, x1, x2, t):
        return np.asarray(self._value(x1, x2, np.asarray(t, dtype=float)), dtype=float)

    def dt(self, x1, x2, t):
        return np.asarray(self._dt(x1, x2, np.asarray(t, dtype=float)), dtype=float)

    def dtt(self, x1, x2, t):
        return np.asarray(self._dtt(x1, x2, np.asarray(t, dtype=float)), dtype=float)
