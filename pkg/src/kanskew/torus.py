"""Linear hyperbolic dynamics on the 2-torus.

Leaf coordinates of a vector ``v`` in R^2 are the pair ``(sigma, beta)`` with
``v = sigma * dir_s + beta * dir_u``.  Distances along the stable/unstable
foliations are |sigma| / |beta| measured in the universal cover with the
integer translate that makes the transverse component smallest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import NotHyperbolic, NotUnimodular, ParallelLeaves

STABLE = "stable"
UNSTABLE = "unstable"


def _wrap(v):
    r = v % 1.0
    # -tiny % 1.0 rounds to 1.0
    return 0.0 if r >= 1.0 else r


@dataclass(frozen=True)
class TorusPoint:
    x1: float
    x2: float

    def __post_init__(self):
        object.__setattr__(self, "x1", _wrap(float(self.x1)))
        object.__setattr__(self, "x2", _wrap(float(self.x2)))

    def as_array(self):
        return np.array([self.x1, self.x2])

    def __iter__(self):
        return iter((self.x1, self.x2))

    def shifted(self, vec):
        return TorusPoint(self.x1 + vec[0], self.x2 + vec[1])


def torus_delta(x, y):
    """Shortest lift of ``y - x`` (componentwise in [-1/2, 1/2))."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    return d - np.round(d)


@dataclass(frozen=True)
class ToralAutomorphism:
    entries: tuple
    determinant: int
    eigenvalue_u: float
    eigenvalue_s: float
    dir_u: tuple
    dir_s: tuple
    norm: float
    conorm: float
    fixed_points: tuple = field(default=())

    @property
    def matrix(self):
        return np.array(self.entries, dtype=float)

    @property
    def int_matrix(self):
        return np.array(self.entries, dtype=object)

    @property
    def inverse_entries(self):
        (a, b), (c, d) = self.entries
        det = self.determinant
        # det = +-1 so the inverse is integral
        return ((d * det, -b * det), (-c * det, a * det))

    def power(self, k):
        """Integer matrix A^k (k may be negative) as nested tuples of Python ints."""
        base = self.entries if k >= 0 else self.inverse_entries
        result = ((1, 0), (0, 1))
        for _ in range(abs(k)):
            result = _matmul(base, result)
        return result

    def apply(self, x, steps=1):
        m = self.power(steps)
        v = (m[0][0] * x.x1 + m[0][1] * x.x2, m[1][0] * x.x1 + m[1][1] * x.x2)
        return TorusPoint(*v)

    def leaf_basis(self):
        """Columns (dir_s, dir_u)."""
        return np.array([self.dir_s, self.dir_u], dtype=float).T

    def to_leaf(self, v):
        return np.linalg.solve(self.leaf_basis(), np.asarray(v, dtype=float))

    def from_leaf(self, sigma, beta):
        return sigma * np.asarray(self.dir_s) + beta * np.asarray(self.dir_u)

    def direction(self, which):
        if which == STABLE:
            return np.asarray(self.dir_s)
        if which == UNSTABLE:
            return np.asarray(self.dir_u)
        raise ValueError(f"unknown leaf direction {which!r}")


def _matmul(m, n):
    return tuple(
        tuple(sum(m[i][k] * n[k][j] for k in range(2)) for j in range(2)) for i in range(2)
    )


def _eigvec(a, b, c, d, lam):
    if b != 0:
        v = np.array([b, lam - a], dtype=float)
    elif c != 0:
        v = np.array([lam - d, c], dtype=float)
    else:
        v = np.array([1.0, 0.0]) if abs(lam - a) < abs(lam - d) else np.array([0.0, 1.0])
    v /= np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return tuple(float(c_) for c_ in v)


def analyze_automorphism(entries):
    """Eigen-data, norms and fixed points of an integer 2x2 matrix."""
    rows = [list(r) for r in entries]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("expected a 2x2 matrix")
    for r in rows:
        for e in r:
            if int(e) != e:
                raise ValueError("matrix entries must be integers")
    (a, b), (c, d) = [[int(e) for e in r] for r in rows]
    det = a * d - b * c
    if abs(det) != 1:
        raise NotUnimodular(f"|det| = {abs(det)} != 1")
    tr = a + d
    disc = tr * tr - 4 * det
    if disc <= 0:
        raise NotHyperbolic("eigenvalues lie on the unit circle")
    root = math.sqrt(disc)
    l1, l2 = (tr + root) / 2, (tr - root) / 2
    if abs(l1) < abs(l2):
        l1, l2 = l2, l1
    if abs(abs(l1) - 1.0) < 1e-12 or abs(abs(l2) - 1.0) < 1e-12:
        raise NotHyperbolic("an eigenvalue has modulus 1")
    # smaller root via det avoids cancellation
    l2 = det / l1
    sv = np.linalg.svd(np.array([[a, b], [c, d]], dtype=float), compute_uv=False)
    A = ToralAutomorphism(
        entries=((a, b), (c, d)),
        determinant=det,
        eigenvalue_u=float(l1),
        eigenvalue_s=float(l2),
        dir_u=_eigvec(a, b, c, d, l1),
        dir_s=_eigvec(a, b, c, d, l2),
        norm=float(sv[0]),
        conorm=float(sv[-1]),
    )
    pts = tuple(TorusPoint(float(u), float(v)) for u, v in _fixed_points_exact(A.entries))
    return _replace_fixed(A, pts)


def _replace_fixed(A, pts):
    from dataclasses import replace

    return replace(A, fixed_points=pts)


def _fixed_points_exact(entries):
    """All x in [0,1)^2 (as Fractions) with (A - I) x in Z^2."""
    (a, b), (c, d) = entries
    m = ((a - 1, b), (c, d - 1))
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if det == 0:
        raise NotHyperbolic("A - I is singular")
    inv = ((Fraction(m[1][1], det), Fraction(-m[0][1], det)),
           (Fraction(-m[1][0], det), Fraction(m[0][0], det)))
    # n = (A - I) x ranges over the image of the unit square
    corners = [(m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v)
               for u, v in product((0, 1), repeat=2)]
    lo1, hi1 = min(c_[0] for c_ in corners), max(c_[0] for c_ in corners)
    lo2, hi2 = min(c_[1] for c_ in corners), max(c_[1] for c_ in corners)
    found = set()
    for n1 in range(lo1, hi1 + 1):
        for n2 in range(lo2, hi2 + 1):
            x1 = (inv[0][0] * n1 + inv[0][1] * n2) % 1
            x2 = (inv[1][0] * n1 + inv[1][1] * n2) % 1
            found.add((x1, x2))
    return sorted(found)


def fixed_points(A):
    return list(A.fixed_points)


def fixed_points_exact(A):
    """Fixed points as exact Fractions (for arbitrary-precision work)."""
    return _fixed_points_exact(A.entries)


@dataclass(frozen=True)
class LeafSegment:
    base: TorusPoint
    direction: str
    radius: float

    def __post_init__(self):
        if self.direction not in (STABLE, UNSTABLE):
            raise ValueError(f"direction must be {STABLE!r} or {UNSTABLE!r}")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def point(self, A, s):
        d = A.direction(self.direction)
        return TorusPoint(self.base.x1 + s * d[0], self.base.x2 + s * d[1])


def leaf_intersection(A, seg1, seg2):
    """Transverse intersection of a stable and an unstable segment, or None.

    Works in lifted coordinates: solve ``b1 + s d1 = b2 + n + u d2`` for every
    integer translate ``n`` that can reach within both radii.  When several
    translates qualify the one with smallest ``|s| + |u|`` wins.
    """
    if seg1.direction == seg2.direction:
        raise ParallelLeaves("both segments follow the same foliation")
    d1 = A.direction(seg1.direction)
    d2 = A.direction(seg2.direction)
    b1 = seg1.base.as_array()
    b2 = seg2.base.as_array()
    M = np.array([d1, -d2]).T
    best = None
    reach = seg1.radius * np.abs(d1) + seg2.radius * np.abs(d2)
    centre = b1 - b2
    lo = np.floor(centre - reach - 1e-9).astype(int)
    hi = np.ceil(centre + reach + 1e-9).astype(int)
    for n1 in range(lo[0], hi[0] + 1):
        for n2 in range(lo[1], hi[1] + 1):
            s, u = np.linalg.solve(M, b2 + np.array([n1, n2]) - b1)
            if abs(s) <= seg1.radius + 1e-15 and abs(u) <= seg2.radius + 1e-15:
                key = (abs(s) + abs(u), n1, n2)
                if best is None or key < best[0]:
                    best = (key, s)
    if best is None:
        return None
    s = best[1]
    return TorusPoint(b1[0] + s * d1[0], b1[1] + s * d1[1])


def leaf_offset(A, x, y, direction):
    """Signed arc length from x to y along ``direction`` and the residual transverse offset.

    Picks the integer translate minimising the transverse component among
    translates with a bounded along-leaf distance (|along| <= 2).
    """
    d = torus_delta(x.as_array(), y.as_array())
    best = None
    for n1 in range(-3, 4):
        for n2 in range(-3, 4):
            sigma, beta = A.to_leaf(d + np.array([n1, n2]))
            along, across = (sigma, beta) if direction == STABLE else (beta, sigma)
            if abs(along) > 2.0:
                continue
            key = (abs(across), abs(along))
            if best is None or key < best[0]:
                best = (key, along, across)
    if best is None:
        return float("inf"), float("inf")
    return float(best[1]), float(best[2])


def leaf_distance(A, x, y, direction):
    along, _ = leaf_offset(A, x, y, direction)
    return abs(along)


def lattice_points_in_leaf_box(A, offset, half_s, half_u):
    """Integer vectors n with leaf coordinates of ``offset + n`` inside the box.

    The box is |sigma| <= half_s, |beta| <= half_u.  Returned in lexicographic order.
    """
    ds, du = np.asarray(A.dir_s), np.asarray(A.dir_u)
    offset = np.asarray(offset, dtype=float)
    ext = half_s * np.abs(ds) + half_u * np.abs(du)
    lo = np.floor(-offset - ext).astype(int)
    hi = np.ceil(-offset + ext).astype(int)
    B = A.leaf_basis()
    out = []
    for n1 in range(lo[0], hi[0] + 1):
        # solve both leaf constraints for the admissible n2 range at this n1
        cands = np.arange(lo[1], hi[1] + 1)
        if cands.size == 0:
            continue
        pts = np.stack([np.full(cands.shape, float(n1)), cands.astype(float)]) + offset[:, None]
        sig, bet = np.linalg.solve(B, pts)
        ok = (np.abs(sig) <= half_s) & (np.abs(bet) <= half_u)
        out.extend((n1, int(n2)) for n2 in cands[ok])
    return out
