"""Skew products F(x, t) = (A x, phi_x(t)) on T^2 x [0,1] and their strong holonomies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidSystem, NoConvergence, NotFixedPoint, NotOnLeaf
from .families import CosineFamily, FiberFamily
from .fiber import NS, SN, classify_pole_map, inverse_cocycle_along, cocycle_along
from .torus import STABLE, UNSTABLE, TorusPoint, analyze_automorphism, leaf_offset, torus_delta

KAN_MATRIX = ((3, 1), (2, 1))


@dataclass(frozen=True)
class StatePoint:
    base: TorusPoint
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t = {self.t} outside [0,1]")


@dataclass(frozen=True)
class ValidationReport:
    k1_pass: bool
    k2_pass: bool
    k3_pass: bool
    lam: float
    gamma: float
    derivative_range: tuple
    grid: tuple
    exact_bounds: bool = False
    kinds: tuple = ()

    @property
    def valid(self):
        return self.k1_pass and self.k2_pass and self.k3_pass

    def to_dict(self):
        return {
            "k1": self.k1_pass,
            "k2": self.k2_pass,
            "k3": self.k3_pass,
            "lambda": self.lam,
            "gamma": self.gamma,
            "derivative_range": list(self.derivative_range),
            "grid": list(self.grid),
            "exact_bounds": self.exact_bounds,
            "pole_kinds": list(self.kinds),
        }


@dataclass(frozen=True)
class KanSystem:
    base: object
    family: FiberFamily
    p: TorusPoint
    q: TorusPoint
    validation: ValidationReport
    name: str = "custom"

    def fiber_map(self, x):
        """The single fiber map phi_x as a classified PoleMap."""
        fam = self.family
        return classify_pole_map(
            lambda t: fam.value(x.x1, x.x2, t),
            lambda t: fam.dt(x.x1, x.x2, t),
            lambda t: fam.dtt(x.x1, x.x2, t),
            inv=lambda y: fam.inverse(x.x1, x.x2, y),
        )

    def require_valid(self):
        if not self.validation.valid:
            raise InvalidSystem(f"system fails Kan-type validation: {self.validation.to_dict()}")

    @property
    def tail_ratio(self):
        v = self.validation
        return v.lam / v.gamma if v.gamma > v.lam else 0.99

    def describe(self):
        return {"name": self.name, "matrix": [list(r) for r in self.base.entries],
                "p": [self.p.x1, self.p.x2], "q": [self.q.x1, self.q.x2], **self.family.describe()}


def _close_on_torus(x, y, tol=1e-12):
    return float(np.max(np.abs(torus_delta(x.as_array(), y.as_array())))) < tol


def build_system(matrix, family, p, q, grid=(256, 64), name="custom"):
    """Construct the skew product and its K1-K3 report (construction succeeds even when K fails)."""
    A = analyze_automorphism(matrix)
    p, q = TorusPoint(*p), TorusPoint(*q)
    for label, pt in (("p", p), ("q", q)):
        if not any(_close_on_torus(pt, fp) for fp in A.fixed_points):
            raise NotFixedPoint(f"{label} = {tuple(pt)} is not fixed by A")
    nb, nt = grid
    xs = (np.arange(nb) + 0.5) / nb
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    X1, X2 = X1.ravel(), X2.ravel()
    k1 = bool(np.all(np.abs(family.value(X1, X2, np.zeros_like(X1))) <= 1e-12)
              and np.all(np.abs(family.value(X1, X2, np.ones_like(X1)) - 1.0) <= 1e-12))
    kinds = []
    k2 = True
    for pt, want in ((p, NS), (q, SN)):
        try:
            kind = KanSystem(A, family, p, q, None).fiber_map(pt).kind
        except Exception:  # noqa: BLE001 - any failure means the pole map is not valid
            kind = "invalid"
        kinds.append(kind)
        k2 = k2 and kind == want
    if family.closed_form_bounds is not None:
        dmin, dmax = family.closed_form_bounds
        exact = True
    else:
        ts = np.linspace(0.0, 1.0, nt)
        dmin, dmax = math.inf, -math.inf
        for t in ts:
            d = family.dt(X1, X2, np.full_like(X1, t))
            dmin, dmax = min(dmin, float(d.min())), max(dmax, float(d.max()))
        exact = False
    lam = A.conorm
    k3 = bool(lam < dmin and dmax < 1.0 / lam and dmax < A.norm)
    gamma = float(min(dmin, 1.0 / dmax)) if dmin > 0 else 0.0
    report = ValidationReport(k1, k2, k3, float(lam), gamma, (float(dmin), float(dmax)),
                              (nb, nb, nt), exact, tuple(kinds))
    return KanSystem(A, family, p, q, report, name)


def kan_diffeo():
    """Kan's diffeomorphism of T^2 x [0,1] with p = (1/2, 0) and q = (0, 0)."""
    return build_system(KAN_MATRIX, CosineFamily(1.0 / 32.0, (1, 0)), (0.5, 0.0), (0.0, 0.0),
                        name="kan-diffeo")


def step(system, s, direction=1):
    """One application of F (direction=+1) or F^-1 (direction=-1)."""
    fam, A = system.family, system.base
    if direction == 1:
        t = float(fam.value(s.base.x1, s.base.x2, s.t))
        return StatePoint(A.apply(s.base), min(max(t, 0.0), 1.0))
    if direction == -1:
        x = A.apply(s.base, -1)
        t = float(fam.inverse(x.x1, x.x2, s.t))
        return StatePoint(x, min(max(t, 0.0), 1.0))
    raise ValueError("direction must be +1 or -1")


def orbit(system, s, n):
    out = [s]
    d = 1 if n >= 0 else -1
    for _ in range(abs(n)):
        out.append(step(system, out[-1], d))
    return out


# --- strong holonomies ---------------------------------------------------------

@dataclass(frozen=True)
class HolonomyResult:
    source: StatePoint
    target_base: TorusPoint
    t_prime: float
    depth: int
    error_bound: float
    residual: float
    samples: tuple = field(default=None)


def _base_orbit(A, x, n, backward=False):
    pts = [x]
    for _ in range(n):
        pts.append(A.apply(pts[-1], -1 if backward else 1))
    return pts


def _holonomy_values(system, x, along, ts, path, tol, depth_cap):
    """Vectorized strong holonomy of fiber values ``ts`` from x to x + along*dir.

    Stable: t' = lim (Phi'_n)^-1 Phi_n(t) along forward orbits.
    Unstable: the same along backward orbits with inverse fiber maps.
    Returns (t', depth, last increment, residual at depth).
    """
    A, fam = system.base, system.family
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if fam.x_independent or along == 0.0:
        return ts.copy(), 1, 0.0, 0.0
    if path == STABLE:
        d, lam, backward = np.asarray(A.dir_s), A.eigenvalue_s, False
    else:
        d, lam, backward = np.asarray(A.dir_u), 1.0 / A.eigenvalue_u, True
    xs = [x.as_array()]
    partners = [x.as_array() + along * d]
    T = ts.copy()
    prev = None
    cur = x
    for n in range(1, depth_cap + 1):
        b = xs[-1]
        if not backward:
            T = fam.value(b[0], b[1], T)
            cur = A.apply(cur)
        else:
            cur = A.apply(cur, -1)
            T = fam.inverse(cur.x1, cur.x2, T)
        sep = along * lam ** n
        nb = cur.as_array()
        xs.append(nb)
        partners.append(nb + sep * d)
        if not backward:
            tp = inverse_cocycle_along(fam, partners[:-1], T)
        else:
            # forward maps from the far end of the partner orbit back to the target fiber
            tp = cocycle_along(fam, partners[1:][::-1], T)
        if prev is not None:
            inc = float(np.max(np.abs(tp - prev)))
            if inc < tol and abs(sep) < tol:
                if not backward:
                    resid = np.abs(cocycle_along(fam, partners[:-1], tp) - T)
                else:
                    resid = np.abs(inverse_cocycle_along(fam, partners[1:][::-1], tp) - T)
                return tp, n, inc, float(np.max(resid))
        prev = tp
    raise NoConvergence(f"holonomy did not converge within depth {depth_cap}")


def _leaf_param(system, x, y, path):
    along, across = leaf_offset(system.base, x, y, path)
    if not abs(across) <= 1e-10:
        raise NotOnLeaf(f"target is {abs(across):.3g} off the {path} leaf")
    return along


def _holonomy(system, s, target_base, path, tol, depth_cap):
    along = _leaf_param(system, s.base, target_base, path)
    tp, depth, inc, resid = _holonomy_values(system, s.base, along, [s.t], path, tol, depth_cap)
    r = system.tail_ratio
    err = inc * r / (1.0 - r) + 1e-15 * depth + resid
    # the fiber is [0,1]; rounding can push the endpoints out by an ulp
    t_prime = min(max(float(tp[0]), 0.0), 1.0)
    return HolonomyResult(s, target_base, t_prime, depth, float(err), float(resid))


def strong_stable_holonomy(system, s, target_base, tol=1e-13, depth_cap=1000):
    return _holonomy(system, s, target_base, STABLE, tol, depth_cap)


def strong_unstable_holonomy(system, s, target_base, tol=1e-13, depth_cap=1000):
    return _holonomy(system, s, target_base, UNSTABLE, tol, depth_cap)


class HolonomyMap:
    """Pointwise strong holonomy between two center fibers along a leaf."""

    def __init__(self, system, source, target, path, tol=1e-13, depth_cap=1000, along=None):
        self.system, self.source, self.target, self.path = system, source, target, path
        self.along = _leaf_param(system, source, target, path) if along is None else along
        self.tol, self.depth_cap = tol, depth_cap
        self._d0 = None

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        out, _, _, _ = _holonomy_values(self.system, self.source, self.along, t, self.path,
                                        self.tol, self.depth_cap)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out

    def inverse(self):
        return HolonomyMap(self.system, self.target, self.source, self.path, self.tol,
                           self.depth_cap, along=-self.along)

    def derivative_at_zero(self, depth=200):
        """H'(0) = lim prod phi'_{x_n}(0) / phi'_{x'_n}(0) along the relevant orbits."""
        if self._d0 is None:
            self._d0 = self._derivative_at_zero(depth)
        return self._d0

    def _derivative_at_zero(self, depth):
        A, fam = self.system.base, self.system.family
        if self.path == STABLE:
            d, lam, backward = np.asarray(A.dir_s), A.eigenvalue_s, False
        else:
            d, lam, backward = np.asarray(A.dir_u), 1.0 / A.eigenvalue_u, True
        total = 0.0
        cur = self.source
        for n in range(depth):
            if backward:
                cur = A.apply(cur, -1)
                k = n + 1
            else:
                k = n
            b = cur.as_array()
            bp = b + self.along * lam ** k * d
            term = math.log(float(fam.dt(b[0], b[1], 0.0))) - math.log(float(fam.dt(bp[0], bp[1], 0.0)))
            total += -term if backward else term
            if not backward:
                cur = A.apply(cur)
            if abs(self.along * lam ** k) < 1e-17:
                break
        return math.exp(total)


class ComposedMap:
    """outer(inner(t)), with inverse and derivative at zero by the chain rule."""

    def __init__(self, inner, outer):
        self.inner, self.outer = inner, outer

    def __call__(self, t):
        return self.outer(self.inner(t))

    def inverse(self):
        return ComposedMap(self.outer.inverse(), self.inner.inverse())

    def derivative_at_zero(self):
        return self.inner.derivative_at_zero() * self.outer.derivative_at_zero()


@dataclass(frozen=True)
class CenterHolonomy:
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    monotone: bool
    depth: int
    error_bound: float

    def __call__(self, t):
        return PchipInterpolator(self.grid, self.values)(t)


def holonomy_center_map(system, source_base, target_base, path, grid_n=256, tol=1e-13):
    """Whole-fiber holonomy sampled on grid_n+1 points with a finite-difference derivative table."""
    along = _leaf_param(system, source_base, target_base, path)
    ts = np.linspace(0.0, 1.0, grid_n + 1)
    vals, depth, inc, resid = _holonomy_values(system, source_base, along, ts, path, tol, 1000)
    r = system.tail_ratio
    deriv = np.diff(vals) / np.diff(ts)
    return CenterHolonomy(ts, vals, deriv, bool(np.all(np.diff(vals) > 0)), depth,
                          float(inc * r / (1 - r) + resid + 1e-15 * depth))
