"""Birkhoff averages of t and basin rasters for the two boundary measures.

Base coordinates are integers mod 2^52 (x = N / 2^52) so that x -> 3x and
toral automorphisms are iterated exactly; double-precision base iteration
would collapse dyadic starting points onto 0 within ~50 steps.
"""

from __future__ import annotations

import enum
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DepthTooFine
from .families import CosineFamily
from .skew import StatePoint
from .torus import TorusPoint

BASE_BITS = 52
JITTER_BITS = 30


class BasinLabel(enum.IntEnum):
    Basin0 = 0
    Basin1 = 1
    Undecided = 2

    @property
    def gray(self):
        return {0: 0, 1: 255, 2: 128}[int(self)]


class KanEndomorphism:
    """(x, t) -> (3x mod 1, t + t(1-t) cos(2 pi x) / 32) on the cylinder."""

    name = "kan-endo"

    def __init__(self, degree=3, family=None):
        self.degree = int(degree)
        self.family = CosineFamily(1.0 / 32.0, (1, 0)) if family is None else family

    @property
    def matrix(self):
        # the circle coordinate rides in x1; x2 is inert
        return ((self.degree, 0), (0, 1))

    def describe(self):
        return {"name": self.name, "degree": self.degree, **self.family.describe()}


def kan_endo():
    return KanEndomorphism()


def _matrix(dyn):
    if isinstance(dyn, KanEndomorphism):
        return dyn.matrix
    return dyn.base.entries


def _to_int(v):
    return int(round(float(v) * (1 << BASE_BITS))) % (1 << BASE_BITS)


def _state(dyn, s):
    """(N1, N2, t) from a StatePoint, a (x, t) pair (endo) or (x1, x2, t)."""
    if isinstance(s, StatePoint):
        return _to_int(s.base.x1), _to_int(s.base.x2), float(s.t)
    s = tuple(s)
    if len(s) == 2:
        return _to_int(s[0]), 0, float(s[1])
    return _to_int(s[0]), _to_int(s[1]), float(s[2])


def birkhoff_average(dyn, s, observable, n):
    """(1/n) sum_{k<n} observable(x_k, t_k) along the forward orbit of s."""
    if n < 1:
        raise ValueError("n must be >= 1")
    (a, b), (c, d) = _matrix(dyn)
    fam = dyn.family
    mask = (1 << BASE_BITS) - 1
    scale = float(1 << BASE_BITS)
    n1, n2, t = _state(dyn, s)
    total = 0.0
    for _ in range(n):
        x1, x2 = n1 / scale, n2 / scale
        total += float(observable(TorusPoint(x1, x2), t))
        t = float(fam.value(x1, x2, t))
        n1, n2 = (a * n1 + b * n2) & mask, (c * n1 + d * n2) & mask
    return total / n


def _cosine_params(dyn):
    fam = dyn.family
    amp = float(getattr(fam, "amplitude", 0.0))
    wave = getattr(fam, "wave", (0, 0))
    if not isinstance(fam, CosineFamily) and fam.name != "constant":
        raise TypeError("orbit kernels support the cosine and constant families")
    return amp, wave


def orbit_averages(dyn, n1, n2, t0, n, workers=1, chunk=4096):
    """Mean of t over the last half of n steps for arrays of exact starting states."""
    (a, b), (c, d) = _matrix(dyn)
    amp, (w1, w2) = _cosine_params(dyn)
    n1 = np.ascontiguousarray(n1, dtype=np.uint64)
    n2 = np.ascontiguousarray(n2, dtype=np.uint64)
    t0 = np.ascontiguousarray(t0, dtype=float)
    out = np.empty(t0.shape[0])
    burn = n // 2
    spans = [(i, min(i + chunk, t0.shape[0])) for i in range(0, t0.shape[0], chunk)]

    def run(span):
        kernels.skew_averages(n1, n2, t0, int(n), int(burn), a, b, c, d, w1, w2, amp,
                              BASE_BITS, out, span[0], span[1])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, spans))
    else:
        for sp in spans:
            run(sp)
    return out


def label_of(avg, tau0=0.2, tau1=0.8):
    if avg < tau0:
        return BasinLabel.Basin0
    if avg > tau1:
        return BasinLabel.Basin1
    return BasinLabel.Undecided


def classify_basin(dyn, s, n, tau0=0.2, tau1=0.8):
    """Basin label from the average of t over the last half of an n-step orbit."""
    if not 0.0 < tau0 < tau1 < 1.0:
        raise ValueError("need 0 < tau0 < tau1 < 1")
    n1, n2, t = _state(dyn, s)
    avg = orbit_averages(dyn, [n1], [n2], [t], n)[0]
    return label_of(avg, tau0, tau1)


@dataclass(frozen=True)
class BasinRaster:
    grid_w: int
    grid_h: int
    slice: tuple
    labels: np.ndarray  # (grid_h, grid_w) uint8 BasinLabel codes; row j is the j-th vertical cell
    averages: np.ndarray
    coords: tuple  # (horizontal, vertical) cell-center coordinates
    n: int
    tau0: float
    tau1: float
    seed: int

    def fractions(self):
        tot = self.labels.size
        return {lab.name: float(np.count_nonzero(self.labels == lab)) / tot for lab in BasinLabel}


def _slice_axes(dyn, slice_spec):
    kind = slice_spec[0]
    if isinstance(dyn, KanEndomorphism):
        if kind != "cylinder":
            raise ValueError("the endomorphism raster covers the full cylinder")
        return kind
    if kind not in ("x2", "t"):
        raise ValueError(f"unknown slice {slice_spec!r}")
    return kind


def basin_raster(dyn, grid=(128, 128), slice_spec=("cylinder",), n=10_000, tau0=0.2,
                 tau1=0.8, seed=0, workers=1):
    """Label every cell center of a grid (with a seeded sub-cell jitter of the base).

    Endomorphism: horizontal x in [0,1), vertical t in (0,1).
    Diffeomorphism: slice ("x2", c) rasters (x1, t) at x2 = c; slice ("t", c)
    rasters (x1, x2) at t = c.  The jitter moves base points by < 2^-22 and
    keeps them off short periodic orbits of the dyadic grid.
    """
    w, h = (int(v) for v in grid)
    if w < 2 or h < 2:
        raise ValueError("grid dimensions must be >= 2")
    if not 0.0 < tau0 < tau1 < 1.0:
        raise ValueError("need 0 < tau0 < tau1 < 1")
    kind = _slice_axes(dyn, slice_spec)
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    X, Y = np.meshgrid(xs, ys)  # (h, w)
    rng = np.random.default_rng(seed)
    jit1 = rng.integers(0, 1 << JITTER_BITS, size=X.size, dtype=np.uint64)
    jit2 = rng.integers(0, 1 << JITTER_BITS, size=X.size, dtype=np.uint64)
    scale = float(1 << BASE_BITS)
    n1 = (X.ravel() * scale).astype(np.uint64) + jit1
    if kind == "cylinder":
        n2 = np.zeros_like(n1)
        t0 = Y.ravel()
    elif kind == "x2":
        n2 = np.full_like(n1, _to_int(slice_spec[1])) + jit2
        t0 = Y.ravel()
    else:
        n2 = (Y.ravel() * scale).astype(np.uint64) + jit2
        t0 = np.full(X.size, float(slice_spec[1]))
    mask = np.uint64((1 << BASE_BITS) - 1)
    avg = orbit_averages(dyn, n1 & mask, n2 & mask, t0, n, workers=workers)
    labels = np.full(avg.shape, BasinLabel.Undecided, dtype=np.uint8)
    labels[avg < tau0] = BasinLabel.Basin0
    labels[avg > tau1] = BasinLabel.Basin1
    return BasinRaster(w, h, tuple(slice_spec), labels.reshape(h, w), avg.reshape(h, w),
                       (xs, ys), int(n), float(tau0), float(tau1), int(seed))


@dataclass(frozen=True)
class InterminglingReport:
    depth: int
    per_box_fractions: list  # rows (depth, i, j, frac0, frac1, frac_undecided)
    min_fraction: float

    def to_dict(self):
        return {"depth": self.depth, "min_fraction": self.min_fraction,
                "boxes": [dict(zip(("depth", "i", "j", "Basin0", "Basin1", "Undecided"), r))
                          for r in self.per_box_fractions]}


def intermingling_report(raster, depth):
    """Label fractions on the dyadic sub-boxes of every level 1..depth."""
    labels = raster.labels if isinstance(raster, BasinRaster) else np.asarray(raster)
    h, w = labels.shape
    if depth < 1 or (1 << depth) > min(w, h) / 4:
        raise DepthTooFine(f"2^{depth} boxes per side need at least {4 << depth} cells")
    rows = []
    worst = 1.0
    for d in range(1, depth + 1):
        k = 1 << d
        ri = (np.arange(h) * k) // h
        ci = (np.arange(w) * k) // w
        for i in range(k):
            for j in range(k):
                blk = labels[np.ix_(ri == i, ci == j)]
                tot = blk.size
                f0 = np.count_nonzero(blk == BasinLabel.Basin0) / tot
                f1 = np.count_nonzero(blk == BasinLabel.Basin1) / tot
                rows.append((d, i, j, float(f0), float(f1), float(1.0 - f0 - f1)))
                worst = min(worst, f0, f1)
    return InterminglingReport(int(depth), rows, float(worst))


def write_pgm(raster, path):
    """Binary P5 image, one byte per cell: Basin0 0, Undecided 128, Basin1 255."""
    gray = np.zeros(raster.labels.shape, dtype=np.uint8)
    for lab in BasinLabel:
        gray[raster.labels == lab] = lab.gray
    header = (f"P5\n# seed={raster.seed} n={raster.n}\n"
              f"{raster.grid_w} {raster.grid_h}\n255\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(gray.tobytes())


def raster_csv(raster):
    buf = io.StringIO()
    buf.write(f"# seed={raster.seed} n={raster.n} slice={','.join(map(str, raster.slice))}\n")
    buf.write("x1,x2_or_t,label,avg_t\n")
    xs, ys = raster.coords
    names = [lab.name for lab in BasinLabel]
    for j in range(raster.grid_h):
        for i in range(raster.grid_w):
            buf.write(f"{xs[i]:.17g},{ys[j]:.17g},{names[raster.labels[j, i]]},"
                      f"{raster.averages[j, i]:.17g}\n")
    return buf.getvalue()


def write_csv(raster, path):
    with open(path, "w", newline="") as fh:
        fh.write(raster_csv(raster))
