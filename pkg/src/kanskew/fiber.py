"""One-dimensional dynamics on [0,1]: pole maps, linearizing charts, cocycles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateDerivative,
    DomainCollapse,
    NoConvergence,
    NotBoundaryFixing,
    NotMonotone,
)
from .families import monotone_inverse

NS, SN, NEITHER = "NS", "SN", "Neither"


@dataclass(frozen=True)
class PoleMap:
    map: Callable
    d1: Callable
    d2: Callable
    mult0: float
    mult1: float
    kind: str
    inv: Callable = None

    def __call__(self, t):
        return self.map(t)

    def inverse_map(self, y):
        if self.inv is not None:
            return self.inv(y)
        return monotone_inverse(self.map, self.d1, y)

    def iterate(self, t, n):
        """f^n(t) for integer n (negative uses the inverse)."""
        t = np.asarray(t, dtype=float)
        step = self.map if n >= 0 else self.inverse_map
        for _ in range(abs(n)):
            t = step(t)
        return t

    def inverse(self):
        """The inverse diffeomorphism as a PoleMap (an NS map inverts to an SN map)."""
        f, d1, d2, finv = self.map, self.d1, self.d2, self.inverse_map

        def gd1(y):
            return 1.0 / d1(finv(y))

        def gd2(y):
            s = finv(y)
            return -d2(s) / d1(s) ** 3

        kind = {NS: SN, SN: NS}.get(self.kind, NEITHER)
        return PoleMap(finv, gd1, gd2, 1.0 / self.mult0, 1.0 / self.mult1, kind, inv=f)


def _vec(func):
    return lambda t: np.asarray(func(np.asarray(t, dtype=float)), dtype=float) * np.ones_like(np.asarray(t, dtype=float))


def classify_pole_map(f, d1, d2, inv=None, grid=4096):
    """Validate a boundary-fixing diffeomorphism of [0,1] and assign its pole type."""
    f, d1, d2 = _vec(f), _vec(d1), _vec(d2)
    f0, f1 = float(f(0.0)), float(f(1.0))
    if abs(f0) > 1e-12 or abs(f1 - 1.0) > 1e-12:
        raise NotBoundaryFixing(f"map(0)={f0!r}, map(1)={f1!r}")
    ts = np.linspace(0.0, 1.0, grid + 1)
    der = d1(ts)
    if np.any(der <= 0):
        raise NotMonotone("derivative is not positive on the sampling grid")
    m0, m1 = float(d1(0.0)), float(d1(1.0))
    inner = ts[1:-1]
    diff = f(inner) - inner
    if 0 < m0 < 1 < m1 and np.all(diff < 0):
        kind = NS
    elif 0 < m1 < 1 < m0 and np.all(diff > 0):
        kind = SN
    else:
        kind = NEITHER
    return PoleMap(f, d1, d2, m0, m1, kind, inv=inv)


def local_germ(f, d1, d2, inv=None):
    """PoleMap for a map defined only near 0 (no boundary or global-monotonicity checks)."""
    f, d1, d2 = _vec(f), _vec(d1), _vec(d2)
    m0 = float(d1(0.0))
    kind = NS if 0 < m0 < 1 else NEITHER
    return PoleMap(f, d1, d2, m0, float("nan"), kind, inv=inv)


@dataclass(frozen=True)
class LinearizationChart:
    alpha: float
    delta: float
    h: Callable
    h_inv: Callable
    residual: float
    normalization_defect: float
    f: PoleMap = None


def _limit_chart(f, alpha, t, tol, budget):
    """h(t) = lim alpha^-n f^n(t), vectorized; returns (h, converged mask, iterations)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    y = t.copy()
    h = t.copy()
    done = t <= 0.0
    scale = 1.0
    n = 0
    for n in range(1, budget + 1):
        active = ~done
        if not active.any():
            break
        y[active] = f(y[active])
        scale /= alpha
        new = y[active] * scale
        inc = np.abs(new - h[active])
        h[active] = new
        # geometric tail of the increments has ratio alpha
        conv = inc * alpha / (1.0 - alpha) < tol
        idx = np.flatnonzero(active)
        done[idx[conv]] = True
        if scale > 1e290:
            break
    return h, done, n


def sternberg_linearize(f, tol=1e-9, budget=10_000, delta0=0.5, shrink=0.5,
                        delta_floor=1e-6, norm_tol=1e-4, grid=257):
    """Chart h with h(f(t)) = alpha h(t) near the attracting endpoint 0.

    h is the pointwise limit of alpha^-n f^n; the certified domain [0, delta]
    shrinks geometrically until the conjugacy residual is below ``tol``, the
    chart is increasing, and |h(t)/t - 1| < norm_tol for t <= delta/100.
    """
    alpha = float(f.mult0)
    if not 0.0 < alpha < 1.0:
        raise ValueError("sternberg_linearize needs 0 < f'(0) < 1")
    inner_tol = tol * 1e-2

    def h(t):
        scalar = np.ndim(t) == 0
        val, ok, _ = _limit_chart(f.map, alpha, t, inner_tol, budget)
        if not ok.all():
            raise NoConvergence("chart iteration did not converge within the budget")
        return float(val[0]) if scalar else val

    delta = float(delta0)
    while delta >= delta_floor:
        ts = np.linspace(0.0, delta, grid)
        hv, ok, _ = _limit_chart(f.map, alpha, ts, inner_tol, budget)
        if not ok.all():
            raise NoConvergence(f"Cauchy increments above tolerance after {budget} iterations")
        hf, ok2, _ = _limit_chart(f.map, alpha, f.map(ts), inner_tol, budget)
        residual = float(np.max(np.abs(hf - alpha * hv)))
        small = np.geomspace(delta * 1e-4, delta / 100.0, 33)
        hs, _, _ = _limit_chart(f.map, alpha, small, inner_tol, budget)
        defect = float(np.max(np.abs(hs / small - 1.0)))
        monotone = bool(np.all(np.diff(hv) > 0))
        if residual <= tol and monotone and defect < norm_tol:
            break
        delta *= shrink
    else:
        raise DomainCollapse(f"chart domain shrank below {delta_floor}")

    def h_inv(y):
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=float))
        lo = np.zeros_like(y)
        hi = np.full_like(y, delta)
        # widen the bracket by the functional equation until it covers y
        for _ in range(200):
            over = h(hi) < y
            if not over.any():
                break
            hi = np.where(over, np.minimum(1.0 - 1e-15, hi + (1.0 - hi) * 0.5), hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = h(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out

    return LinearizationChart(alpha, delta, h, h_inv, residual, defect, f)


@dataclass(frozen=True)
class DistortionConstant:
    value: float
    interval: tuple


def distortion_constant(g, delta_tilde, grid=4097):
    """max|g''| / min|g'| over [0, delta_tilde] with local refinement of both extrema."""
    ts = np.linspace(0.0, delta_tilde, grid)
    d1 = np.abs(np.asarray(g.d1(ts), dtype=float) * np.ones_like(ts))
    d2 = np.abs(np.asarray(g.d2(ts), dtype=float) * np.ones_like(ts))
    h = ts[1] - ts[0]

    def refine(values, func, sign):
        i = int(np.argmax(sign * values))
        a, b = max(0.0, ts[i] - h), min(delta_tilde, ts[i] + h)
        res = minimize_scalar(lambda s: -sign * abs(float(func(s))), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-14})
        return max(sign * values[i], -res.fun) * sign

    dmin = refine(d1, g.d1, -1.0)
    if dmin < 1e-12:
        raise DegenerateDerivative("min |g'| vanishes on the interval")
    dmax2 = refine(d2, g.d2, 1.0)
    return DistortionConstant(float(dmax2 / dmin), (0.0, float(delta_tilde)))


def fiber_cocycle(family, A, x, t, n):
    """(phi^(n)_x(t), sum of log phi' along the orbit); n < 0 uses inverse maps."""
    t = np.asarray(t, dtype=float)
    logd = np.zeros_like(t)
    if n >= 0:
        x1, x2 = x.x1, x.x2
        for _ in range(n):
            logd = logd + np.log(family.dt(x1, x2, t))
            t = family.value(x1, x2, t)
            x = A.apply(x)
            x1, x2 = x.x1, x.x2
    else:
        for _ in range(-n):
            x = A.apply(x, -1)
            t = family.inverse(x.x1, x.x2, t)
            logd = logd - np.log(family.dt(x.x1, x.x2, t))
    if t.ndim == 0:
        return float(t), float(logd)
    return t, logd


def cocycle_along(family, bases, t):
    """Compose fiber maps over a given sequence of base points (forward in list order)."""
    t = np.asarray(t, dtype=float)
    for b in bases:
        t = family.value(b[0], b[1], t)
    return t


def inverse_cocycle_along(family, bases, y):
    """Inverse of ``cocycle_along``: undo the maps in reverse order."""
    y = np.asarray(y, dtype=float)
    for b in reversed(bases):
        y = family.inverse(b[0], b[1], y)
    return y
