"""Transitivity certificates: witnesses z in U with F^m(z) in V.

The base map is linear, so every witness base point is an exact dyadic
rational iterated with integer arithmetic mod 2^bits; only the fiber
coordinate is carried in double precision.  Construction follows three
stages: slabs near the stable leaf of p and the unstable leaf of q,
center intersections through the holonomy H = H^s_q o H^u_p, and the
distortion bookkeeping that decides which Diophantine pair to trust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import BudgetExceeded, IndependenceUnknown, VerificationFailed
from .fiber import sternberg_linearize
from .intersection import IntervalPair, intersection_pairs
from .jsonio import RawNumber
from .numtheory import multiplicative_independence
from .skew import ComposedMap, HolonomyMap, _holonomy_values, holonomy_center_map
from .torus import (
    STABLE,
    UNSTABLE,
    LeafSegment,
    TorusPoint,
    fixed_points_exact,
    lattice_points_in_leaf_box,
    leaf_intersection,
    leaf_offset,
    torus_delta,
)

LOCAL_RADIUS = 0.25  # local leaf radius for the slab crossings
SHRINK = 0.1  # stage intervals lose 10% on each side
MARGIN = 0.1  # crossings stay this fraction inside the iterated rectangles
LADDER = 5  # the chosen pair plus four retries


# --- boxes ------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Open set U: base rectangle (center, (stable, unstable) sides) times a t-interval."""

    center: TorusPoint
    sides: tuple
    t_interval: tuple

    def __post_init__(self):
        c = self.center if isinstance(self.center, TorusPoint) else TorusPoint(*self.center)
        object.__setattr__(self, "center", c)
        ws, wu = (float(v) for v in self.sides)
        lo, hi = (float(v) for v in self.t_interval)
        if not (ws > 0 and wu > 0):
            raise ValueError("box sides must be positive")
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"invalid t-interval {self.t_interval}")
        object.__setattr__(self, "sides", (ws, wu))
        object.__setattr__(self, "t_interval", (lo, hi))

    @property
    def half(self):
        return self.sides[0] / 2.0, self.sides[1] / 2.0

    def contains_base(self, A, x, shrink=0.0):
        hs, hu = self.half
        off = torus_delta(self.center.as_array(), np.asarray(tuple(x), dtype=float))
        return bool(lattice_points_in_leaf_box(A, off, hs * (1 - shrink), hu * (1 - shrink)))

    def base_excess(self, A, x):
        """Leaf-coordinate distance from x to the closed rectangle (0 inside)."""
        hs, hu = self.half
        off = torus_delta(self.center.as_array(), np.asarray(tuple(x), dtype=float))
        best = 1.0
        for n in lattice_points_in_leaf_box(A, off, hs + 1.0, hu + 1.0):
            sig, bet = A.to_leaf(off + np.asarray(n, dtype=float))
            best = min(best, math.hypot(max(0.0, abs(sig) - hs), max(0.0, abs(bet) - hu)))
        return best

    def t_excess(self, t):
        lo, hi = self.t_interval
        return max(0.0, lo - t, t - hi)

    def to_dict(self):
        return {"center": [self.center.x1, self.center.x2], "sides": list(self.sides),
                "t": list(self.t_interval)}

    @classmethod
    def from_dict(cls, d):
        return cls(TorusPoint(*(float(v) for v in d["center"])),
                   tuple(float(v) for v in d["sides"]), tuple(float(v) for v in d["t"]))


def random_box(rng, side=0.1, t_width=0.1):
    c = rng.random(2)
    lo = float(rng.random() * (1.0 - t_width))
    return Box(TorusPoint(float(c[0]), float(c[1])), (side, side), (lo, lo + t_width))


# --- exact dyadic base points ----------------------------------------------------

@dataclass(frozen=True)
class DyadicPoint:
    """Base point (n1, n2) / 2^bits on the torus."""

    n1: int
    n2: int
    bits: int

    @classmethod
    def from_values(cls, x1, x2, bits):
        """Round real numbers (float, Fraction or mpf) to the nearest dyadic grid point."""
        P = 1 << bits

        def conv(v):
            if isinstance(v, mpmath.mpf):
                return int(mpmath.nint(v * P)) % P
            return round(Fraction(v) * P) % P

        return cls(conv(x1), conv(x2), bits)

    @classmethod
    def from_fractions(cls, x1, x2):
        x1, x2 = Fraction(x1) % 1, Fraction(x2) % 1
        bits = 0
        for v in (x1, x2):
            den = v.denominator
            if den & (den - 1):
                raise ValueError("coordinates must be dyadic rationals")
            bits = max(bits, den.bit_length() - 1)
        P = 1 << bits
        return cls(int(x1 * P), int(x2 * P), bits)

    def apply(self, M):
        P = 1 << self.bits
        (a, b), (c, d) = M
        return DyadicPoint((a * self.n1 + b * self.n2) % P, (c * self.n1 + d * self.n2) % P,
                           self.bits)

    def shifted(self, v):
        P = 1 << self.bits
        return DyadicPoint((self.n1 + v[0]) % P, (self.n2 + v[1]) % P, self.bits)

    def to_torus(self):
        P = 1 << self.bits
        return TorusPoint(self.n1 / P, self.n2 / P)

    def fractions(self):
        P = 1 << self.bits
        return Fraction(self.n1, P), Fraction(self.n2, P)

    def decimals(self):
        return _dyadic_decimal(self.n1, self.bits), _dyadic_decimal(self.n2, self.bits)


def _dyadic_decimal(n, bits):
    if n == 0:
        return "0.0"
    digits = str(n * 5 ** bits).rjust(bits + 1, "0")
    head, tail = digits[:-bits] or "0", digits[-bits:].rstrip("0")
    return f"{head}.{tail or '0'}"


def base_orbit(A, x, m):
    """Float base points x_0..x_m from exact integer iteration."""
    pts = [x.to_torus()]
    for _ in range(m):
        x = x.apply(A.entries)
        pts.append(x.to_torus())
    return pts, x


def _fiber_push(family, bases, t):
    t = np.asarray(t, dtype=float)
    for b in bases:
        t = family.value(b.x1, b.x2, t)
    return t


@dataclass(frozen=True)
class Witness:
    base: DyadicPoint
    t: float

    def as_json(self):
        d1, d2 = self.base.decimals()
        return [RawNumber(d1), RawNumber(d2), float(self.t)]

    @classmethod
    def from_json(cls, values):
        x1, x2, t = values
        return cls(DyadicPoint.from_fractions(Fraction(str(x1)), Fraction(str(x2))), float(t))


def iterate_witness(system, w, m):
    """F^m(w) with exact base arithmetic; returns (base TorusPoint, t)."""
    pts, _ = base_orbit(system.base, w.base, m)
    t = float(_fiber_push(system.family, pts[:-1], w.t))
    return pts[-1], min(max(t, 0.0), 1.0)


def verify_witness(system, w, m, U, V):
    """image_residual of F^m(w) against V, or +inf when the witness is not in U."""
    A = system.base
    x0 = w.base.to_torus()
    if U.base_excess(A, x0) > 0.0 or U.t_excess(w.t) > 0.0:
        return math.inf
    xb, t = iterate_witness(system, w, m)
    return math.hypot(V.base_excess(A, xb), V.t_excess(t))


def _fiber_witness(system, pts, U, V, depth=40):
    """t in U's interval with Phi(t) in V's interval for the fiber cocycle along pts."""
    fam = system.family
    lo, hi = U.t_interval
    ends = _fiber_push(fam, pts, np.array([lo, hi]))
    vlo, vhi = V.t_interval
    a, b = max(float(ends[0]), vlo), min(float(ends[1]), vhi)
    if not a < b:
        return None
    target = 0.5 * (a + b)
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        if float(_fiber_push(fam, pts, mid)) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- high-precision leaf data ------------------------------------------------------

def _mp_leaf_data(A):
    """(lambda_u, lambda_s, dir_u, dir_s) at the current mpmath precision."""
    (a, b), (c, d) = A.entries
    tr, det = a + d, A.determinant
    root = mpmath.sqrt(tr * tr - 4 * det)
    l1, l2 = (tr + root) / 2, (tr - root) / 2
    if abs(l1) < abs(l2):
        l1, l2 = l2, l1
    l2 = det / l1

    def vec(lam):
        if b != 0:
            v = [mpmath.mpf(b), lam - a]
        elif c != 0:
            v = [lam - d, mpmath.mpf(c)]
        else:
            v = [mpmath.mpf(1), mpmath.mpf(0)] if abs(lam - a) < abs(lam - d) else [mpmath.mpf(0), mpmath.mpf(1)]
        nrm = mpmath.sqrt(v[0] ** 2 + v[1] ** 2)
        v = [v[0] / nrm, v[1] / nrm]
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = [-v[0], -v[1]]
        return v

    return l1, l2, vec(l1), vec(l2)


def _bits_for(A, m):
    return int(math.ceil(m * math.log2(abs(A.eigenvalue_u)))) + 96


# --- step 1: slabs ----------------------------------------------------------------

@dataclass(frozen=True)
class Slab:
    """Stage data near p (stable side) or q (unstable side)."""

    steps: int
    anchor: TorusPoint
    offset: float
    entry: TorusPoint
    J_tilde: tuple
    J: tuple
    delta: float
    fund: float


def _shrink(a, b):
    w = (b - a) * SHRINK
    return (a + w, b - w)


def _crossing(A, center, hs, hu, pole, radius, along):
    """Smallest |s| with pole + s*dir inside the rectangle (leaf box at ``center``)."""
    off = torus_delta(center.as_array(), pole.as_array())
    ms, mu = hs * (1 - MARGIN), hu * (1 - MARGIN)
    box = (radius + ms, mu) if along == STABLE else (ms, radius + mu)
    best = None
    for n in lattice_points_in_leaf_box(A, off, *box):
        sig, bet = A.to_leaf(off + np.asarray(n, dtype=float))
        base, half = (sig, ms) if along == STABLE else (bet, mu)
        s = min(max(0.0, -base - half), -base + half)
        if abs(s) > radius:
            continue
        key = (abs(s), n)
        if best is None or key < best[0]:
            best = (key, float(s), float(sig), float(bet))
    return best


def _leaf_point(base, s, d):
    return TorusPoint(base.x1 + s * d[0], base.x2 + s * d[1])


def reach_stable_slab(system, U, tol=1e-13, k_cap=80, radius=LOCAL_RADIUS):
    """Forward iterates of U until the base crosses L^s_loc(p) close enough to p."""
    A, fam, p = system.base, system.family, system.p
    ds, du = np.asarray(A.dir_s), np.asarray(A.dir_u)
    ls, lu = A.eigenvalue_s, A.eigenvalue_u
    hs0, hu0 = U.half
    fp = system.fiber_map(p)
    for k in range(k_cap + 1):
        ck = A.apply(U.center, k)
        hit = _crossing(A, ck, hs0 * abs(ls) ** k, hu0 * abs(lu) ** k, p, radius, STABLE)
        if hit is None:
            continue
        _, s, sig, bet = hit
        bases = [_leaf_point(p, s * ls ** (j - k), ds) for j in range(k)]
        img = _fiber_push(fam, bases, np.array(U.t_interval))
        Jt = _shrink(float(img[0]), float(img[1]))
        anchor = _leaf_point(p, s, ds)
        Jp, _, _, _ = _holonomy_values(system, anchor, -s, np.array(Jt), STABLE, tol, 1000)
        Jp = (float(Jp[0]), float(Jp[1]))
        fund = Jp[1] - float(fp(Jp[1]))
        if not abs(s) < fund:
            continue
        delta = _slab_delta(system, U, k, s, bet, hu0 * abs(lu) ** k, Jt, STABLE, tol)
        entry = _leaf_point(p, s * ls ** (-k), ds)
        return Slab(k, anchor, s, entry, Jt, Jp, delta, fund)
    raise BudgetExceeded(f"no admissible stable crossing within {k_cap} steps")


def reach_unstable_slab(system, V, tol=1e-13, l_cap=80, radius=LOCAL_RADIUS):
    """Backward iterates of V until the base crosses L^u_loc(q) close enough to q."""
    A, fam, q = system.base, system.family, system.q
    du = np.asarray(A.dir_u)
    ls, lu = A.eigenvalue_s, A.eigenvalue_u
    hs0, hu0 = V.half
    g = system.fiber_map(q).inverse()
    for l in range(l_cap + 1):
        cl = A.apply(V.center, -l)
        hit = _crossing(A, cl, hs0 * abs(ls) ** (-l), hu0 * abs(lu) ** (-l), q, radius, UNSTABLE)
        if hit is None:
            continue
        _, s, sig, bet = hit
        bases = [_leaf_point(q, s * lu ** j, du) for j in range(l)]
        img = _pull_back(fam, bases, np.array(V.t_interval))
        Jt = _shrink(float(img[0]), float(img[1]))
        anchor = _leaf_point(q, s, du)
        Jq, _, _, _ = _holonomy_values(system, anchor, -s, np.array(Jt), UNSTABLE, tol, 1000)
        Jq = (float(Jq[0]), float(Jq[1]))
        fund = Jq[1] - float(g(Jq[1]))
        if not abs(s) < fund:
            continue
        delta = _slab_delta(system, V, l, s, sig, hs0 * abs(ls) ** (-l), Jt, UNSTABLE, tol)
        entry = _leaf_point(q, s * lu ** l, du)
        return Slab(l, anchor, s, entry, Jt, Jq, delta, fund)
    raise BudgetExceeded(f"no admissible unstable crossing within {l_cap} steps")


def _pull_back(family, bases, y):
    y = np.asarray(y, dtype=float)
    for b in reversed(bases):
        y = family.inverse(b.x1, b.x2, y)
    return y


def _slab_delta(system, box, k, s, transverse, half, Jt, side, tol):
    """Largest LOCAL_RADIUS/2^j keeping the transverse neighbourhood of the stage inside the image.

    Stable side: points anchor + u*dir_u (|u| <= delta) must stay in A^k(rect_U)
    and carry the unstable holonomy image of J~ inside F^k(U)'s fiber.
    The unstable side is the time reversal.
    """
    A, fam = system.base, system.family
    ds, du = np.asarray(A.dir_s), np.asarray(A.dir_u)
    ls, lu = A.eigenvalue_s, A.eigenvalue_u
    pole = system.p if side == STABLE else system.q
    d_along, d_across = (ds, du) if side == STABLE else (du, ds)
    cross_path = UNSTABLE if side == STABLE else STABLE
    anchor = _leaf_point(pole, s, d_along)
    delta = LOCAL_RADIUS
    while delta > 1e-9:
        ok = True
        for u in (-delta, -delta / 2, delta / 2, delta):
            if abs(transverse + u) > half * (1 - MARGIN):
                ok = False
                break
            moved, _, _, _ = _holonomy_values(system, anchor, u, np.array(Jt), cross_path, tol, 1000)
            if side == STABLE:
                bases = [TorusPoint(*(pole.as_array() + s * ls ** (j - k) * ds + u * lu ** (j - k) * du))
                         for j in range(k)]
                img = _fiber_push(fam, bases, np.array(box.t_interval))
            else:
                bases = [TorusPoint(*(pole.as_array() + s * lu ** j * du + u * ls ** j * ds))
                         for j in range(k)]
                img = _pull_back(fam, bases, np.array(box.t_interval))
            if not (img[0] <= moved[0] and moved[1] <= img[1]):
                ok = False
                break
        if ok:
            return delta
        delta /= 2
    return delta


# --- step 2: center stage ---------------------------------------------------------

@dataclass(frozen=True)
class CenterStage:
    r: TorusPoint
    along_pr: float  # unstable leaf coordinate of r seen from p
    along_rq: float  # stable leaf coordinate of q seen from r
    H_pu: object
    H_qs: object
    H: object
    f: object
    g: object
    charts: tuple
    K1: float
    K2: float


@lru_cache(maxsize=8)
def center_stage(system, grid_n=128):
    A, p, q = system.base, system.p, system.q
    r = leaf_intersection(A, LeafSegment(p, UNSTABLE, 1.0), LeafSegment(q, STABLE, 1.0))
    along_pr = leaf_offset(A, p, r, UNSTABLE)[0]
    along_rq = leaf_offset(A, r, q, STABLE)[0]
    H_pu = HolonomyMap(system, p, r, UNSTABLE, along=along_pr)
    H_qs = HolonomyMap(system, r, q, STABLE, along=along_rq)
    f = system.fiber_map(p)
    g = system.fiber_map(q).inverse()
    charts = (sternberg_linearize(f), sternberg_linearize(g))
    tab1 = holonomy_center_map(system, p, r, UNSTABLE, grid_n)
    tab2 = holonomy_center_map(system, r, q, STABLE, grid_n)
    K1 = float(np.min(tab1.derivative))
    K2 = float(1.0 / np.max(tab2.derivative))
    return CenterStage(r, along_pr, along_rq, H_pu, H_qs, ComposedMap(H_pu, H_qs), f, g,
                       charts, K1, K2)


# --- step 3: distortion diagnostics -----------------------------------------------

@dataclass(frozen=True)
class DistortionDiagnostics:
    D1: float
    D2: float
    R1: float
    R2: float
    Q_est: float
    rho_used: float
    lam: float
    gamma: float
    dominance_n: int = None
    log_D: tuple = field(default=(0.0, 0.0), repr=False)
    log_R: tuple = field(default=(0.0, 0.0), repr=False)

    @property
    def dominant(self):
        return all(d >= math.log(2.0) + r for d, r in zip(self.log_D, self.log_R))

    def to_dict(self):
        return {"D1": self.D1, "D2": self.D2, "R1": self.R1, "R2": self.R2, "Q": self.Q_est,
                "rho": self.rho_used, "lambda": self.lam, "gamma": self.gamma,
                "dominance_n": self.dominance_n}


def estimate_Q(system, sp, sq, samples=17, tol=1e-13):
    """Center displacement of the boundary holonomies per unit of base displacement.

    Samples t in [0, b] over p (stable holonomy to p~) and t in [0, d] over q
    (unstable holonomy to q~); identical fibers give Q = 0.
    """
    Q = 0.0
    for pole, slab, path in ((system.p, sp, STABLE), (system.q, sq, UNSTABLE)):
        if slab.offset == 0.0:
            continue
        ts = np.linspace(0.0, slab.J[1], samples)
        moved, _, _, _ = _holonomy_values(system, pole, slab.offset, ts, path, tol, 1000)
        Q = max(Q, float(np.max(np.abs(moved - ts))) / abs(slab.offset))
    return Q


def _safe_log(v):
    return math.log(v) if v > 0 else -math.inf


def distortion_diagnostics(system, sp, sq, stage, reports, n=None, Q=None):
    """Diagnostics for pair n (1-based, default last) of the verified pair reports.

    D1 = K1 rho gamma^k (b - phi_p(b)), D2 = K2 rho gamma^l (d - g(d));
    R1 = 2 Q lambda^k d_s(p, p~), R2 = 2 Q lambda^l d_u(q, q~); rho is the
    overlap ratio of the pair itself.  dominance_n is the first index <= n
    where D_i >= 2 R_i for both i (compared in logs, so huge k cannot underflow).
    """
    v = system.validation
    lam, gamma = v.lam, v.gamma
    n = len(reports) if n is None else n
    if Q is None:
        Q = estimate_Q(system, sp, sq)
    rows = []
    for rep in reports[:n]:
        rho = rep.ratio
        logD = (_safe_log(stage.K1 * rho * sp.fund) + rep.k * math.log(gamma),
                _safe_log(stage.K2 * rho * sq.fund) + rep.l * math.log(gamma))
        logR = (_safe_log(2 * Q * abs(sp.offset)) + rep.k * math.log(lam),
                _safe_log(2 * Q * abs(sq.offset)) + rep.l * math.log(lam))
        rows.append((rho, logD, logR))
    dom = None
    for i, (_, logD, logR) in enumerate(rows, start=1):
        if all(d >= math.log(2.0) + r for d, r in zip(logD, logR)):
            dom = i
            break
    rho, logD, logR = rows[n - 1]
    ex = [math.exp(x) if x > -745 else 0.0 for x in logD + logR]
    return DistortionDiagnostics(ex[0], ex[1], ex[2], ex[3], Q, rho, lam, gamma, dom,
                                 logD, logR)


def decay_fit(system, sp, sq, stage, reports, Q=None):
    """Fitted per-step ratios of R_i/D_i against k (i=1) and l (i=2); None when R vanishes."""
    if Q is None:
        Q = estimate_Q(system, sp, sq)
    out = []
    for i in range(2):
        xs, ys = [], []
        for j in range(1, len(reports) + 1):
            d = distortion_diagnostics(system, sp, sq, stage, reports, j, Q)
            if not math.isfinite(d.log_R[i]):
                break
            xs.append(reports[j - 1].k if i == 0 else reports[j - 1].l)
            ys.append(d.log_R[i] - d.log_D[i])
        if len(xs) < 2 or len(set(xs)) < 2:
            out.append(None)
        else:
            out.append(float(math.exp(np.polyfit(np.array(xs, float), np.array(ys), 1)[0])))
    return tuple(out)


# --- certificates -----------------------------------------------------------------

@dataclass(frozen=True)
class TransitivityCertificate:
    system: str
    U: Box
    V: Box
    k0s: int
    l0u: int
    kn: int
    ln: int
    m: int
    witness: Witness
    image_residual: float
    diagnostics: DistortionDiagnostics
    pair_index: int = 1
    stage: dict = field(default=None, repr=False, compare=False)

    @property
    def accepted(self):
        return self.image_residual == 0.0

    def to_dict(self):
        return {"system": self.system, "U": self.U.to_dict(), "V": self.V.to_dict(),
                "k0s": self.k0s, "l0u": self.l0u, "kn": self.kn, "ln": self.ln, "m": self.m,
                "witness": self.witness.as_json(), "image_residual": self.image_residual,
                "diagnostics": self.diagnostics.to_dict()}


def _rational(v):
    fr = Fraction(v).limit_denominator(1 << 20)
    return fr if float(fr) == v else None


def check_independence(system, assume_independent=False):
    """Multiplicative independence of phi_p'(0) and phi_q'(0) (exact when both are rational)."""
    a = system.fiber_map(system.p).mult0
    b = system.fiber_map(system.q).mult0
    ra, rb = _rational(a), _rational(b)
    if ra is None or rb is None:
        if not assume_independent:
            raise IndependenceUnknown("irrational multipliers: pass assume_independent=True")
        return None
    verdict = multiplicative_independence(ra, rb)
    if verdict.dependent:
        raise IndependenceUnknown(f"log {ra} / log {rb} is rational (witness {verdict.witness})")
    return verdict


def construct_witness(system, sp, sq, stage, kn, ln, U, V):
    """Witness for the pair (kn, ln) from the slab and center-stage geometry, or None.

    The base point lies on the unstable line through the slab entry of U and
    is pinned so that its K-th iterate (K = k0s + kn) sits where the unstable
    line through A^kn(p~) meets the stable line through A^-ln(q~) near r.
    """
    A = system.base
    k0s, l0u = sp.steps, sq.steps
    K = k0s + kn
    m = K + ln + l0u
    bits = _bits_for(A, m)
    (p1, p2), (q1, q2) = (_exact_fixed(A, system.p), _exact_fixed(A, system.q))
    with mpmath.workprec(bits + 64):
        lu, ls, du, ds = _mp_leaf_data(A)
        sp_off, sq_off = mpmath.mpf(sp.offset), mpmath.mpf(sq.offset)
        P = [mpmath.mpf(p1.numerator) / p1.denominator, mpmath.mpf(p2.numerator) / p2.denominator]
        Qp = [mpmath.mpf(q1.numerator) / q1.denominator, mpmath.mpf(q2.numerator) / q2.denominator]
        Ps = [P[i] + sp_off * ls ** kn * ds[i] for i in range(2)]
        Qu = [Qp[i] + sq_off * lu ** (-ln) * du[i] for i in range(2)]
        guess = (np.array([float(P[0]), float(P[1])]) + stage.along_pr * np.asarray(A.dir_u)
                 - np.array([float(Qp[0]), float(Qp[1])]) + stage.along_rq * np.asarray(A.dir_s))
        n = np.round(guess).astype(int)
        rhs = [Qu[i] + int(n[i]) - Ps[i] for i in range(2)]
        # solve b*du - c*ds = rhs
        det = du[0] * (-ds[1]) - (-ds[0]) * du[1]
        b = (rhs[0] * (-ds[1]) - (-ds[0]) * rhs[1]) / det
        x = [P[i] + sp_off * ls ** (-k0s) * ds[i] + b * lu ** (-K) * du[i] for i in range(2)]
        x = [xi - mpmath.floor(xi) for xi in x]
        base = DyadicPoint.from_values(x[0], x[1], bits)
    pts, last = base_orbit(A, base, m)
    if U.base_excess(A, pts[0]) > 0.0 or V.base_excess(A, pts[-1]) > 0.0:
        return None, m
    t = _fiber_witness(system, pts[:-1], U, V)
    if t is None:
        return None, m
    return Witness(base, float(t)), m


def _exact_fixed(A, pt):
    for fx in fixed_points_exact(A):
        if abs(float(fx[0]) - pt.x1) < 1e-12 and abs(float(fx[1]) - pt.x2) < 1e-12:
            return fx
    return Fraction(pt.x1), Fraction(pt.x2)


def build_certificate(system, U, V, assume_independent=False, ladder=LADDER, k_max=100_000,
                      tol=1e-13):
    """Three-stage certificate for F^m(U) meeting V, verified by exact iteration."""
    system.require_valid()
    check_independence(system, assume_independent)
    A = system.base
    sp = reach_stable_slab(system, U, tol)
    sq = reach_unstable_slab(system, V, tol)
    stage = center_stage(system)
    pair = IntervalPair(sp.J, sq.J)
    lam = system.validation.lam
    d_pr, d_qr = abs(stage.along_pr), abs(stage.along_rq)
    want = ladder
    while True:
        res = intersection_pairs(stage.f, stage.g, stage.H, pair, want, k_max=k_max,
                                 charts=stage.charts)
        reports = [r for r in res.reports
                   if lam ** (-r.k) * sp.delta > 2 * d_pr and lam ** (-r.l) * sq.delta > 2 * d_qr]
        Q = estimate_Q(system, sp, sq)
        diag_all = distortion_diagnostics(system, sp, sq, stage, reports, Q=Q) if reports else None
        if diag_all is not None and diag_all.dominance_n is not None:
            start = diag_all.dominance_n
            if len(reports) >= start - 1 + ladder:
                break
        if want > 64:
            raise VerificationFailed("no dominant pair among the first verified pairs")
        want *= 2
    info = {"r": [stage.r.x1, stage.r.x2], "p_tilde": [sp.anchor.x1, sp.anchor.x2],
            "q_tilde": [sq.anchor.x1, sq.anchor.x2], "J_p": list(sp.J), "J_q": list(sq.J),
            "delta_p": sp.delta, "delta_q": sq.delta, "K1": stage.K1, "K2": stage.K2}
    for idx in range(start, start + ladder):
        rep = reports[idx - 1]
        w, m = construct_witness(system, sp, sq, stage, rep.k, rep.l, U, V)
        if w is None:
            continue
        resid = verify_witness(system, w, m, U, V)
        if resid == 0.0:
            diag = distortion_diagnostics(system, sp, sq, stage, reports, idx, Q)
            return TransitivityCertificate(system.name, U, V, sp.steps, sq.steps, rep.k, rep.l,
                                           m, w, 0.0, diag, idx, info)
    raise VerificationFailed(f"no witness for pairs {start}..{start + ladder - 1}")


def certificate_from_dict(d):
    diag = d["diagnostics"]
    dd = DistortionDiagnostics(float(diag["D1"]), float(diag["D2"]), float(diag["R1"]),
                               float(diag["R2"]), float(diag["Q"]), float(diag["rho"]),
                               float(diag["lambda"]), float(diag["gamma"]),
                               None if diag["dominance_n"] is None else int(diag["dominance_n"]))
    return TransitivityCertificate(d["system"], Box.from_dict(d["U"]), Box.from_dict(d["V"]),
                                   int(d["k0s"]), int(d["l0u"]), int(d["kn"]), int(d["ln"]),
                                   int(d["m"]), Witness.from_json(d["witness"]),
                                   float(d["image_residual"]), dd)


# --- direct search ----------------------------------------------------------------

@dataclass
class _Cand:
    start: DyadicPoint
    orbit: list  # exact points (n1, n2) at steps 0..j
    lo: list  # fiber image of the lower t endpoint at steps 0..j
    hi: list
    key: tuple


def _logit(t):
    t = min(max(t, 1e-300), 1.0 - 1e-16)
    return math.log(t) - math.log1p(-t)


def _interval_gap(lo, hi, vlo, vhi):
    """Logit distance between [lo, hi] and [vlo, vhi] measured midpoint to midpoint."""
    a = 0.5 * (_logit(lo) + _logit(hi))
    b = 0.5 * (_logit(vlo) + _logit(vhi))
    return abs(a - b)


class _Searcher:
    def __init__(self, system, U, V, m_max, beam, spread, reach):
        self.system, self.U, self.V = system, U, V
        self.A = system.base
        self.fam = system.family
        self.beam, self.spread, self.reach = beam, spread, reach
        self.bits = _bits_for(self.A, m_max)
        self.P = 1 << self.bits
        self.lu = abs(self.A.eigenvalue_u)
        # after this many steps a perturbation below 1 has shrunk under 1e-17 backwards
        self.depth = int(math.ceil(math.log(1e17 * max(reach, 1.0)) / math.log(self.lu))) + 1
        self._mp_cache = {}
        self._pow = {}

    def power(self, k):
        if k not in self._pow:
            self._pow[k] = self.A.power(k)
        return self._pow[k]

    def shift_ints(self, amount, j):
        """Integer vector for moving the step-j point by ``amount`` along dir_u."""
        with mpmath.workprec(self.bits + 64):
            key = j
            if key not in self._mp_cache:
                lu, _, du, _ = _mp_leaf_data(self.A)
                self._mp_cache[key] = [c * lu ** (-j) for c in du]
            vec = self._mp_cache[key]
            a = mpmath.mpf(amount)
            return (int(mpmath.nint(a * vec[0] * self.P)), int(mpmath.nint(a * vec[1] * self.P)))

    def floats(self, pt):
        return TorusPoint(pt[0] / self.P, pt[1] / self.P)

    def step_pt(self, pt):
        (a, b), (c, d) = self.A.entries
        return ((a * pt[0] + b * pt[1]) % self.P, (c * pt[0] + d * pt[1]) % self.P)

    def replay(self, cand, delta_vec, j):
        """Orbit/fiber of cand.start + delta_vec, recomputing only the steps it changes."""
        i0 = max(0, j - self.depth)
        M = self.power(i0)
        dv = ((M[0][0] * delta_vec[0] + M[0][1] * delta_vec[1]) % self.P,
              (M[1][0] * delta_vec[0] + M[1][1] * delta_vec[1]) % self.P)
        pt = ((cand.orbit[i0][0] + dv[0]) % self.P, (cand.orbit[i0][1] + dv[1]) % self.P)
        lo, hi = cand.lo[i0], cand.hi[i0]
        orbit, los, his = [pt], [lo], [hi]
        for _ in range(i0, j):
            x = self.floats(pt)
            lo, hi = (float(v) for v in self.fam.value(x.x1, x.x2, np.array([lo, hi])))
            pt = self.step_pt(pt)
            orbit.append(pt)
            los.append(lo)
            his.append(hi)
        return i0, orbit, los, his

    def advance(self, cand):
        pt = cand.orbit[-1]
        x = self.floats(pt)
        lo, hi = (float(v) for v in self.fam.value(x.x1, x.x2, np.array([cand.lo[-1], cand.hi[-1]])))
        return _Cand(cand.start, cand.orbit + [self.step_pt(pt)], cand.lo + [lo], cand.hi + [hi],
                     cand.key)

    def in_U(self, start):
        return self.U.base_excess(self.A, start.to_torus()) == 0.0

    def children(self, cand, j, rank):
        """Shifts of the step-j point by c * step along dir_u, c = -spread..spread."""
        hu0 = self.U.half[1]
        step = min(0.5 / self.spread, (1 - MARGIN) * hu0 * self.lu ** j / self.spread)
        out = []
        for c in range(-self.spread, self.spread + 1):
            if c == 0:
                out.append(_Cand(cand.start, cand.orbit, cand.lo, cand.hi, cand.key + (0,)))
                continue
            dvec = self.shift_ints(c * step, j)
            start = cand.start.shifted(dvec)
            if not self.in_U(start):
                continue
            i0, orbit, los, his = self.replay(cand, dvec, j)
            out.append(_Cand(start, cand.orbit[:i0] + orbit, cand.lo[:i0] + los,
                             cand.hi[:i0] + his, cand.key + (c,)))
        return out

    def score(self, cand):
        vlo, vhi = self.V.t_interval
        return _interval_gap(cand.lo[-1], cand.hi[-1], vlo, vhi)

    def land(self, cand, m):
        """Try unstable shifts of the step-m point that put it inside V."""
        A, V = self.A, self.V
        hs, hu = V.half
        x = self.floats(cand.orbit[m])
        off = torus_delta(V.center.as_array(), x.as_array())
        shifts = []
        for n in lattice_points_in_leaf_box(A, off, hs * (1 - MARGIN), self.reach):
            _, bet = A.to_leaf(off + np.asarray(n, dtype=float))
            lo, hi = -bet - hu * (1 - MARGIN), -bet + hu * (1 - MARGIN)
            shifts.append(min(max(0.0, lo), hi))
        for u in sorted(set(shifts), key=lambda v: (abs(v), v)):
            dvec = self.shift_ints(u, m) if u != 0.0 else (0, 0)
            start = cand.start.shifted(dvec)
            if not self.in_U(start):
                continue
            i0, orbit, los, his = self.replay(cand, dvec, m) if u != 0.0 else (
                m, [cand.orbit[m]], [cand.lo[m]], [cand.hi[m]])
            vlo, vhi = V.t_interval
            if not (max(los[-1], vlo) < min(his[-1], vhi)):
                continue
            pts, _ = base_orbit(A, start, m)
            if V.base_excess(A, pts[-1]) > 0.0:
                continue
            t = _fiber_witness(self.system, pts[:-1], self.U, V)
            if t is None:
                continue
            w = Witness(start, float(t))
            if verify_witness(self.system, w, m, self.U, V) == 0.0:
                return w
        return None


def direct_search(system, U, V, m_max, beam=24, spread=4, reach=30.0):
    """First m <= m_max (with witness) found by a deterministic beam search, or None.

    Candidates are exact dyadic starting points in U.  At each depth the
    current base point of every candidate is nudged along the unstable
    direction (pulled back to a tiny change of the starting point), the beam
    keeps the candidates whose fiber image of U's t-interval is closest to
    V's in logit distance, and each survivor tries to land inside V.
    """
    if m_max < 1:
        return None
    S = _Searcher(system, U, V, m_max, beam, spread, reach)
    A = system.base
    hs, hu = U.half
    cands = []
    lo, hi = U.t_interval
    for a in (-0.5, 0.0, 0.5):
        for b in (-0.5, 0.0, 0.5):
            v = U.center.as_array() + A.from_leaf(a * hs, b * hu)
            start = DyadicPoint.from_values(float(v[0] % 1.0), float(v[1] % 1.0), S.bits)
            if S.in_U(start):
                cands.append(_Cand(start, [(start.n1, start.n2)], [lo], [hi], (len(cands),)))
    for j in range(m_max):
        pool = []
        for rank, c in enumerate(cands):
            pool.extend(S.children(c, j, rank))
        pool = [S.advance(c) for c in pool]
        pool.sort(key=lambda c: (S.score(c), c.key))
        cands = pool[:beam]
        for c in cands:
            w = S.land(c, j + 1)
            if w is not None:
                return SearchResult(j + 1, w)
    return None


@dataclass(frozen=True)
class SearchResult:
    m: int
    witness: Witness
