"""Exact and high-precision arithmetic for log-ratio independence and Diophantine pairs."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import FactorizationBudgetExceeded, NoPairInBudget, PrecisionExhausted

LOG_PREC = 160  # bits; comfortably above the 128 required for k, l up to 1e6


def as_rational(value):
    """Fraction from int/str ('31/32')/Fraction; floats are taken exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


# --- factorization ----------------------------------------------------------

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % q for q in range(2, int(p ** 0.5) + 1))]


def _is_probable_prime(n):
    if n < 2:
        return False
    for p in _SMALL_PRIMES[:12]:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for n < 3.3e24, probabilistic beyond
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n, budget, rng):
    if n % 2 == 0:
        return 2
    for _ in range(8):
        c = rng.randrange(1, n)
        x = y = rng.randrange(2, n)
        d = 1
        steps = 0
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
            steps += 1
            if steps > budget:
                raise FactorizationBudgetExceeded(f"Pollard rho budget exhausted on {n}")
        if d != n:
            return d
    raise FactorizationBudgetExceeded(f"could not split {n}")


def factorize(n, rho_budget=200_000):
    """Prime factorization {p: e} of a positive integer (trial division then Pollard rho)."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out = {}
    for p in _SMALL_PRIMES:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    rng = random.Random(12345)
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if _is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_rho(m, rho_budget, rng)
        stack.extend((d, m // d))
    return dict(sorted(out.items()))


def exponent_vector(r):
    """Prime exponents of a positive rational: numerator positive, denominator negative."""
    r = as_rational(r)
    if r <= 0:
        raise ValueError("rational must be positive")
    vec = dict(factorize(r.numerator))
    for p, e in factorize(r.denominator).items():
        vec[p] = vec.get(p, 0) - e
    return {p: e for p, e in vec.items() if e}


@dataclass(frozen=True)
class IndependenceVerdict:
    dependent: bool
    witness: tuple = None  # (m, n) with r**n == s**m

    @property
    def label(self):
        return "dependent" if self.dependent else "independent"


def multiplicative_independence(r, s):
    """Decide whether ln r / ln s is rational, exactly, via prime exponent vectors.

    The logs are rationally dependent iff the exponent vectors are parallel; the
    witness (m, n) then satisfies r**n == s**m with gcd(m, n) = 1, n > 0.
    """
    r, s = as_rational(r), as_rational(s)
    if r <= 0 or s <= 0:
        raise ValueError("r and s must be positive")
    if r == 1 or s == 1:
        raise ValueError("r and s must differ from 1")
    er, es = exponent_vector(r), exponent_vector(s)
    if set(er) != set(es):
        return IndependenceVerdict(False)
    ratio = None
    for p in er:
        q = Fraction(er[p], es[p])
        if ratio is None:
            ratio = q
        elif q != ratio:
            return IndependenceVerdict(False)
    # er = ratio * es  =>  r**den = s**num
    m, n = ratio.numerator, ratio.denominator
    if r ** n != s ** m:
        raise AssertionError("witness identity failed")  # cannot happen for parallel vectors
    return IndependenceVerdict(True, (m, n))


# --- continued fractions -----------------------------------------------------

@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple
    convergents: tuple  # (p, q) pairs

    def convergent_values(self):
        return [Fraction(p, q) for p, q in self.convergents]


def _cf_of_fraction(x, depth):
    out = []
    while len(out) < depth:
        a = math.floor(x)
        out.append(a)
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return out


def continued_fraction(x, depth, rel_error=None):
    """Partial quotients and convergents of x > 0, certified against its precision.

    Ints, Fractions and floats are exact unless ``rel_error`` is given; mpf
    values carry relative uncertainty 2^-(prec-2).  The expansions of both
    ends of the uncertainty interval must agree on every returned quotient.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if isinstance(x, mpmath.mpf):
        exact = _mpf_to_fraction(x)
        eps = rel_error if rel_error is not None else 2.0 ** (-mpmath.mp.prec + 2)
    else:
        exact = Fraction(x)
        eps = rel_error or 0
    err = abs(exact) * Fraction(eps)
    lo, hi = exact - err, exact + err
    if lo <= 0:
        raise ValueError("x must be positive")
    a_lo = _cf_of_fraction(lo, depth)
    a_hi = _cf_of_fraction(hi, depth)
    quotients = []
    for i in range(min(depth, max(len(a_lo), len(a_hi)))):
        if i >= len(a_lo) or i >= len(a_hi) or a_lo[i] != a_hi[i]:
            if lo == hi:
                break
            raise PrecisionExhausted(
                f"only {len(quotients)} quotients are certified at this precision"
            )
        quotients.append(a_lo[i])
    convs = []
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    convs.append((p1, q1))
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        convs.append((p1, q1))
    return ContinuedFraction(tuple(quotients), tuple(convs))


def _mpf_to_fraction(x):
    man, exp = mpmath.mpf(x).man_exp
    return Fraction(int(man)) * (Fraction(2) ** int(exp))


# --- Diophantine pairs -------------------------------------------------------

@dataclass(frozen=True)
class DiophantinePair:
    k: int
    l: int
    residual: float  # -k ln(alpha) + l ln(beta) - ln(eta)
    eta_star: float  # alpha^-k beta^l


@dataclass(frozen=True)
class PairSearch:
    pairs: list
    dependence_suspected: bool


def _hp_logs(alpha, beta, eta):
    def lg(v):
        if isinstance(v, Fraction):
            return mpmath.log(mpmath.mpf(v.numerator)) - mpmath.log(mpmath.mpf(v.denominator))
        return mpmath.log(mpmath.mpf(v))

    return lg(alpha), lg(beta), lg(eta)


def diophantine_pairs(alpha, beta, eta, epsilon, max_terms, k_max=100_000, k_min=1,
                      improving=False):
    """Pairs (k, l), k ascending then l, with |-k ln a + l ln b - ln eta| < epsilon.

    For each k the admissible l form the integer points of an interval of
    width 2 epsilon / |ln b| around the real solution, so the per-k scan is
    exhaustive.  Residuals use 160-bit logarithms.  ``alpha``/``beta``/``eta``
    may be floats or Fractions (Fractions keep the logs exact to working precision).

    With ``improving=True`` only record pairs are kept, one l per k: each has
    strictly smaller |residual| than every earlier one, so alpha^-k beta^l -> eta.
    """
    if epsilon <= 0 or max_terms < 1:
        raise ValueError("epsilon and max_terms must be positive")
    with mpmath.workprec(LOG_PREC):
        la, lb, le = _hp_logs(alpha, beta, eta)
        if not (la < 0 and lb < 0):
            raise ValueError("alpha and beta must lie in (0,1)")
        eps = mpmath.mpf(epsilon)
        width = eps / abs(lb)
        pairs = []
        suspicion = False
        fla, flb, fle = float(la), float(lb), float(le)
        for k in range(k_min, k_max + 1):
            lstar = (fle + k * fla) / flb
            lo = max(1, math.ceil(lstar - float(width) - 1e-9))
            hi = math.floor(lstar + float(width) + 1e-9)
            if improving:
                # only the best l for this k can be a record
                lo = hi = max(1, round(lstar))
            for l in range(lo, hi + 1):
                if improving and pairs:
                    # cheap float screen before the high-precision residual
                    if abs(-k * fla + l * flb - fle) > abs(pairs[-1].residual) + 1e-9:
                        continue
                res = -k * la + l * lb - le
                if improving and pairs and abs(res) >= abs(pairs[-1].residual):
                    continue
                if abs(res) < eps:
                    if res == 0:
                        suspicion = True
                    eta_star = mpmath.exp(-k * la + l * lb)
                    pairs.append(DiophantinePair(k, l, float(res), float(eta_star)))
                    if len(pairs) >= max_terms:
                        return PairSearch(pairs, suspicion)
    if not pairs:
        raise NoPairInBudget(f"no pair with |residual| < {epsilon} for k <= {k_max}")
    return PairSearch(pairs, suspicion)
