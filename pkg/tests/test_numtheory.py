import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanskew.errors import NoPairInBudget, PrecisionExhausted
from kanskew.numtheory import (
    as_rational,
    continued_fraction,
    diophantine_pairs,
    factorize,
    multiplicative_independence,
)


def brute_pairs(alpha, beta, eta, eps, K, L):
    """Double loop over all (k, l) <= (K, L); float screen, then 200-bit residuals."""
    out = []
    with mpmath.workprec(200):
        la, lb, le = (mpmath.log(mpmath.mpf(v.numerator) / v.denominator) for v in (alpha, beta, eta))
        ls = np.arange(1, L + 1)
        for k in range(1, K + 1):
            approx = -k * float(la) + ls * float(lb) - float(le)
            for l in ls[np.abs(approx) < eps + 1e-9]:
                r = -k * la + int(l) * lb - le
                if abs(r) < eps:
                    out.append((k, int(l), float(r)))
    return out


def test_factorize():
    assert factorize(1) == {}
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    big = 1000003 * 999983
    assert factorize(big) == {999983: 1, 1000003: 1}
    assert factorize(2 ** 61 - 1) == {2 ** 61 - 1: 1}
    with pytest.raises(ValueError):
        factorize(0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10 ** 12))
def test_factorize_product(n):
    f = factorize(n)
    assert math.prod(p ** e for p, e in f.items()) == n
    assert all(all(p % d for d in range(2, math.isqrt(p) + 1)) for p in f)


def test_independence_kan():
    assert not multiplicative_independence(Fraction(31, 32), Fraction(33, 32)).dependent
    assert not multiplicative_independence(Fraction(31, 32), Fraction(32, 33)).dependent


def test_dependence_witness():
    v = multiplicative_independence(4, 8)
    assert v.dependent and v.witness == (2, 3)
    v = multiplicative_independence(Fraction(1, 9), 27)
    m, n = v.witness
    assert Fraction(1, 9) ** n == Fraction(27) ** m


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(1, 8), st.integers(1, 8), st.booleans(), st.booleans())
def test_random_dependent(base, a, b, inv_r, inv_s):
    g = Fraction(base, base + 1) if base % 2 else Fraction(base)
    r = g ** (-a if inv_r else a)
    s = g ** (-b if inv_s else b)
    v = multiplicative_independence(r, s)
    assert v.dependent
    m, n = v.witness
    assert math.gcd(m, n) == 1 and n > 0
    assert r ** n == s ** m


def test_independence_rejects():
    with pytest.raises(ValueError):
        multiplicative_independence(1, 2)
    with pytest.raises(ValueError):
        multiplicative_independence(-2, 3)


def test_as_rational():
    assert as_rational("31/32") == Fraction(31, 32)
    assert as_rational(0.5) == Fraction(1, 2)


def test_continued_fraction_exact():
    cf = continued_fraction(Fraction(415, 93), 10)
    assert cf.quotients == (4, 2, 6, 7)
    assert cf.convergent_values()[-1] == Fraction(415, 93)
    assert continued_fraction(1.5, 5).quotients == (1, 2)


def test_continued_fraction_golden():
    with mpmath.workprec(200):
        cf = continued_fraction((1 + mpmath.sqrt(5)) / 2, 40)
    assert set(cf.quotients) == {1}
    p, q = cf.convergents[-1]
    assert (p, q) == (165580141, 102334155)


def test_continued_fraction_precision_exhausted():
    with mpmath.workprec(53):
        x = +mpmath.pi
        with pytest.raises(PrecisionExhausted):
            continued_fraction(x, 60)


def test_continued_fraction_log_ratio():
    with mpmath.workprec(200):
        x = mpmath.log(mpmath.mpf(32) / 33) / mpmath.log(mpmath.mpf(31) / 32)
        cf = continued_fraction(x, 6)
        err = abs(x - mpmath.mpf(31) / 32)
    assert cf.convergent_values()[2] == Fraction(31, 32)
    # the true gap is 4.758e-4
    assert float(err) == pytest.approx(4.758e-4, abs=1e-6)


def test_diophantine_oracle_19_12():
    # 2^19 vs 3^12 with alpha, beta taken as reciprocals
    r = diophantine_pairs(Fraction(1, 2), Fraction(1, 3), 1, 0.02, 1, k_max=30, k_min=19)
    p = r.pairs[0]
    assert (p.k, p.l) == (19, 12)
    assert abs(p.residual) == pytest.approx(0.013551, abs=5e-7)


def test_diophantine_kan_brute_force():
    a, b, e = Fraction(31, 32), Fraction(32, 33), Fraction(1)
    got = diophantine_pairs(a, b, e, 1e-3, 10).pairs
    want = brute_pairs(a, b, e, 1e-3, 10_000, 10_000)[:10]
    assert [(p.k, p.l) for p in got] == [(k, l) for k, l, _ in want]
    for p, (_, _, r) in zip(got, want):
        assert p.residual == pytest.approx(r, abs=1e-15)
    assert (got[0].k, got[0].l) == (1, 1)
    assert abs(got[0].residual - 9.77e-4) < 1e-6
    assert abs(got[9].k / got[9].l - 0.96923) < 1e-3
    for p in got:
        assert p.eta_star == pytest.approx(math.exp(p.residual), rel=1e-14)


def test_diophantine_improving_records():
    a, b = Fraction(31, 32), Fraction(32, 33)
    rec = diophantine_pairs(a, b, Fraction(3, 2), 0.01, 8, improving=True).pairs
    res = [abs(p.residual) for p in rec]
    assert all(x > y for x, y in zip(res, res[1:]))
    assert all(p.k < q.k for p, q in zip(rec, rec[1:]))


def test_diophantine_no_pair():
    with pytest.raises(NoPairInBudget):
        diophantine_pairs(Fraction(1, 2), Fraction(1, 4), Fraction(3, 2), 1e-3, 1, k_max=50)
    with pytest.raises(ValueError):
        diophantine_pairs(2, Fraction(1, 2), 1, 1e-3, 1)


@pytest.mark.parametrize("alpha,beta,eta,eps", [
    (Fraction(1, 2), Fraction(1, 3), Fraction(1), 0.02),
    (Fraction(31, 32), Fraction(32, 33), Fraction(3, 2), 1e-4),
    (Fraction(7, 10), Fraction(5, 9), Fraction(2, 3), 1e-3),
])
def test_diophantine_corpus_brute_force(alpha, beta, eta, eps):
    got = diophantine_pairs(alpha, beta, eta, eps, 5, k_max=10_000).pairs
    want = brute_pairs(alpha, beta, eta, eps, 10_000, 10_000)[:5]
    assert [(p.k, p.l) for p in got] == [(k, l) for k, l, _ in want]
