"""Pure numpy version of the orbit kernels (same integer base arithmetic)."""

import numpy as np


def skew_averages(x1, x2, t0, n, burn, a, b, c, d, w1, w2, amp, bits, out, start, stop):
    mask = np.uint64((1 << bits) - 1)
    scale = 2.0 * np.pi / float(1 << bits)
    u = lambda v: np.uint64(v % (1 << 64))
    ua, ub, uc, ud, uw1, uw2 = (u(v) for v in (a, b, c, d, w1, w2))
    n1 = np.array(x1[start:stop], dtype=np.uint64)
    n2 = np.array(x2[start:stop], dtype=np.uint64)
    t = np.array(t0[start:stop], dtype=float)
    acc = np.zeros_like(t)
    with np.errstate(over="ignore"):
        for s in range(n):
            if s >= burn:
                acc = acc + t
            k = amp * np.cos(scale * ((uw1 * n1 + uw2 * n2) & mask).astype(float))
            t = t + k * t * (1.0 - t)
            m1 = (ua * n1 + ub * n2) & mask
            n2 = (uc * n1 + ud * n2) & mask
            n1 = m1
    out[start:stop] = acc / float(n - burn)
