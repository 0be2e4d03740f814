"""Intersection mechanism for two NS maps f, g glued by an increasing diffeomorphism h.

Given intervals I = [a, b], J = [c, d] the pairs (k, l) of interest satisfy
h(f^k(I)) ∩ g^l(J) ≠ ∅.  Candidates come from Diophantine approximation of a
target ratio in the linearizing charts of f and g at 0, built from the middle
thirds of I and J, and every candidate is checked on the actual images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExhaustedCandidates, NoPairInBudget
from .fiber import sternberg_linearize
from .numtheory import diophantine_pairs


class Identity:
    def __call__(self, t):
        return t

    def inverse(self):
        return self

    def derivative_at_zero(self):
        return 1.0


IDENTITY = Identity()


def _inv(h):
    return IDENTITY if h is None else h.inverse()


@dataclass(frozen=True)
class IntervalPair:
    I: tuple
    J: tuple

    def __post_init__(self):
        a, b = self.I
        c, d = self.J
        if not (0.0 <= a < b <= 1.0 and 0.0 <= c < d <= 1.0):
            raise ValueError(f"invalid intervals I={self.I}, J={self.J}")

    def middle_thirds(self):
        (a, b), (c, d) = self.I, self.J
        return ((a + (b - a) / 3, b - (b - a) / 3), (c + (d - c) / 3, d - (d - c) / 3))


@dataclass(frozen=True)
class OverlapReport:
    """Overlaps and fundamental domains; lengths are in units of exp(log_scale_*)."""

    k: int
    l: int
    overlap_f_side: float
    fund_f: float
    ratio_f: float
    overlap_g_side: float
    fund_g: float
    ratio_g: float
    log_scale_f: float = 0.0
    log_scale_g: float = 0.0

    @property
    def ratio(self):
        return min(self.ratio_f, self.ratio_g)


# below this, f(t)/t equals f'(0) to double precision for any C2 germ
TINY = 1e-150


def _log_apply(func, slope, u):
    """log func(exp(u)) without underflow, linear germ below TINY."""
    u = np.asarray(u, dtype=float)
    t = np.exp(u)
    big = t > TINY
    out = u + math.log(slope)
    if big.any():
        out = np.where(big, np.log(np.maximum(np.asarray(func(np.where(big, t, 0.5)), dtype=float), 1e-320)), out)
    return out


class _LogIterates:
    """Cached forward iterates of a few points under a pole map, stored as logs."""

    def __init__(self, f, points):
        self.f = f
        with np.errstate(divide="ignore"):
            self.rows = [np.log(np.asarray(points, dtype=float))]

    def __getitem__(self, n):
        while len(self.rows) <= n:
            self.rows.append(_log_apply(self.f, self.f.mult0, self.rows[-1]))
        return self.rows[n]


def _log_map(h, u):
    if h is IDENTITY:
        return np.asarray(u, dtype=float)
    return _log_apply(h, h.derivative_at_zero(), u)


def _log_overlap(u, v, scale):
    lo, hi = max(u[0], v[0]), min(u[1], v[1])
    if not hi > lo:
        return 0.0
    return math.exp(hi - scale) - math.exp(lo - scale)


class IntersectionMechanism:
    """Image computations for (f, g, h, I, J) with cached endpoint orbits.

    Orbits are kept in log coordinates so that images far below the double
    range (k in the tens of thousands for multipliers near 1) stay comparable.
    """

    def __init__(self, f, g, h, pair):
        self.f, self.g = f, g
        self.h = IDENTITY if h is None else h
        self.h_inv = _inv(h)
        self.pair = pair
        (a, b), (c, d) = pair.I, pair.J
        self.fI = _LogIterates(f, [a, b])
        self.gJ = _LogIterates(g, [c, d])

    def log_images(self, k, l):
        return self.fI[k], self.gJ[l]

    def images(self, k, l):
        fk, gl = self.log_images(k, l)
        return tuple(float(v) for v in np.exp(fk)), tuple(float(v) for v in np.exp(gl))

    def verify(self, k, l):
        fk, gl = self.log_images(k, l)
        hk = _log_map(self.h, fk)
        return max(hk[0], gl[0]) < min(hk[1], gl[1])

    def report(self, k, l):
        fk, gl = self.log_images(k, l)
        hk = _log_map(self.h, fk)
        hinv_gl = _log_map(self.h_inv, gl)
        sf, sg = float(fk[1]), float(gl[1])
        fund_f = -math.expm1(float(self.fI[k + 1][1]) - sf)
        fund_g = -math.expm1(float(self.gJ[l + 1][1]) - sg)
        of = _log_overlap(fk, hinv_gl, sf)
        og = _log_overlap(hk, gl, sg)
        return OverlapReport(k, l, of, fund_f, of / fund_f if fund_f > 0 else 0.0,
                             og, fund_g, og / fund_g if fund_g > 0 else 0.0, sf, sg)


def overlap_ratio(f, g, h, pair, k, l):
    """Overlap lengths on both sides normalized by fundamental domains at b and d."""
    return IntersectionMechanism(f, g, h, pair).report(k, l)


def dense_orbit_sample(f, g, h, x, K, L):
    """Points f^-k h^-1 g^l (x), 1 <= k <= K, 1 <= l <= L, and the largest gap in [0,1]."""
    h_inv = _inv(h)
    gl = []
    y = np.array([float(x)])
    for _ in range(L):
        y = np.asarray(g(y), dtype=float)
        gl.append(float(y[0]))
    z = np.asarray(h_inv(np.array(gl)), dtype=float)
    pts = []
    for _ in range(K):
        z = np.asarray(f.inverse_map(z), dtype=float)
        pts.append(z.copy())
    pts = np.clip(np.concatenate(pts), 0.0, 1.0)
    srt = np.sort(pts)
    gaps = np.diff(np.concatenate(([0.0], srt, [1.0])))
    return srt, float(gaps.max())


@dataclass(frozen=True)
class IntersectionResult:
    pairs: list  # verified (k, l)
    reports: list  # OverlapReport per verified pair
    eta: float
    epsilon: float
    theta: float
    charts: tuple
    candidates_checked: int


def chart_target(f, g, h, pair, charts=None, chart_tol=1e-9):
    """(eta, log tolerance, theta, charts) from the middle-third construction."""
    if charts is None:
        charts = (sternberg_linearize(f, tol=chart_tol), sternberg_linearize(g, tol=chart_tol))
    h1, h2 = charts
    theta = float((IDENTITY if h is None else h).derivative_at_zero())
    I0, J0 = pair.middle_thirds()
    top = min(I0[1], 1.0 - 1e-9)
    hi0 = np.asarray(h1.h(np.array([I0[0], top])), dtype=float)
    mid_i = 0.5 * (hi0[0] + hi0[1])
    x_t = float(h2.h(0.5 * (J0[0] + J0[1])))
    eta = theta * mid_i / x_t
    # half-width of theta*h1(I0) around its midpoint, relative, halved again for margin
    eps = (hi0[1] - hi0[0]) / (4.0 * mid_i)
    return eta, eps, theta, charts


def warmup(f, g, pair, charts):
    """Smallest (k, l) putting f^k(b) and g^l(d) inside the chart domains."""
    mech = IntersectionMechanism(f, g, None, pair)
    k = 0
    while mech.fI[k][1] > math.log(charts[0].delta):
        k += 1
    l = 0
    while mech.gJ[l][1] > math.log(charts[1].delta):
        l += 1
    return max(k, 1), max(l, 1)


def intersection_pairs(f, g, h, pair, count, k_max=100_000, k_min=None, charts=None,
                       chart_tol=1e-9, extra=16):
    """First ``count`` verified pairs along the record sequence alpha^-k beta^l -> eta.

    Candidates are the improving Diophantine pairs for the middle-third target,
    so k grows and the residual shrinks; each is then checked on the full images.
    By default the search starts once both images sit inside the chart domains,
    where the linear model is accurate.
    """
    eta, eps, theta, charts = chart_target(f, g, h, pair, charts, chart_tol)
    alpha, beta = charts[0].alpha, charts[1].alpha
    mech = IntersectionMechanism(f, g, h, pair)
    l_min = 1
    if k_min is None:
        k_min, l_min = warmup(f, g, pair, charts)
    terms = count + extra
    while True:
        try:
            search = diophantine_pairs(alpha, beta, eta, eps, terms, k_max=k_max,
                                       k_min=k_min, improving=True)
        except NoPairInBudget:
            search = None
        found = search.pairs if search else []
        verified, reports = [], []
        for cand in found:
            if cand.l < l_min:
                continue
            if mech.verify(cand.k, cand.l):
                verified.append((cand.k, cand.l))
                reports.append(mech.report(cand.k, cand.l))
                if len(verified) >= count:
                    return IntersectionResult(verified, reports, float(eta), float(eps), theta,
                                              charts, len(found))
        if len(found) < terms:
            raise ExhaustedCandidates(
                f"{len(verified)} of {count} pairs verified with k <= {k_max}")
        terms *= 2
