"""Rigorous orbit engines used by the height computations.

``ArchOrbit`` iterates a complex ball (mpmath center, radius) so every
escape decision and every log-magnitude is enclosed, even for orbits whose
exact rational representation would double in size at each step.

``PadicOrbit`` iterates exactly: first on the rational point itself, then,
once the numbers get large, on a closed p-adic disk D(a, p^-m) holding the
point.  The image of such a disk under a polynomial is again a disk, of
radius max_k |T_k(a)|_p p^(-m k) with T_k the Taylor coefficients at a, so
the disk orbit is computed with exact integers and never loses rigor.  A
disk that lands inside an earlier one certifies a bounded orbit.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
from mpmath import mpf

from .arith import valuation
from .poly import PolyQ, rational_bits

DEFAULT_SWITCH_BITS = 4096
DEFAULT_DIGITS = 96


def default_precision(d: int, max_iter: int) -> int:
    return 96 + int(1.5 * max_iter * math.log2(max(d, 2)))


def _to_mp(x, prec):
    """mpc value of x and a bound on the conversion error."""
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        c = mpmath.mpc(mpf(x.numerator) / x.denominator)
        den = x.denominator
        exact = den & (den - 1) == 0 and abs(x.numerator).bit_length() <= prec
        return c, (mpf(0) if exact else abs(c) * mpf(2) ** (1 - prec))
    return mpmath.mpc(complex(x)), mpf(0)


class ArchOrbit:
    """Ball iteration of phi at ``prec`` bits of working precision.

    The new radius bounds (a) the spread of phi over the previous ball,
    sum_i |a_i| ((|c| + r)^i - |c|^i), (b) rounding in the Horner evaluation
    of the center, (c) rounding of the coefficients; it is then inflated by
    a relative margin covering rounding in the radius arithmetic itself.
    """

    def __init__(self, phi, z, prec: int):
        self.prec = prec
        self.d = phi.degree
        with mpmath.workprec(prec):
            self.u = mpf(2) ** (-prec)
            pairs = [_to_mp(a, prec) for a in phi.coeffs]
            self.coeffs = [c for c, _ in pairs]
            self.coeff_err = [e for _, e in pairs]
            self.abs_coeffs = [abs(c) + e for c, e in pairs]
            self.center, self.radius = _to_mp(z, prec)
            self.margin = 1 + 16 * (self.d + 2) * self.u

    def abs_lo(self):
        with mpmath.workprec(self.prec):
            return max(abs(self.center) * (1 - 2 * self.u) - self.radius, mpf(0))

    def abs_hi(self):
        with mpmath.workprec(self.prec):
            return (abs(self.center) * (1 + 2 * self.u) + self.radius) * (1 + 2 * self.u)

    @property
    def exact_point(self) -> bool:
        return self.radius == 0

    def step(self):
        with mpmath.workprec(self.prec):
            c, r = self.center, self.radius
            x = abs(c) * (1 + 2 * self.u)
            val = mpmath.mpc(0)
            pabs = mpf(0)
            cerr = mpf(0)
            for a, aa, e in zip(reversed(self.coeffs), reversed(self.abs_coeffs), reversed(self.coeff_err)):
                val = val * c + a
                pabs = pabs * x + aa
                cerr = cerr * x + e
            spread = mpf(0)
            if r > 0:
                xr = x + r
                for i, a in enumerate(self.abs_coeffs):
                    if i == 0 or a == 0:
                        continue
                    s = mpf(0)
                    for j in range(i):
                        s += xr**j * x ** (i - 1 - j)
                    spread += a * r * s
            rounding = 8 * (self.d + 1) * self.u * pabs
            self.center = val
            self.radius = (spread + rounding + cerr) * self.margin
        return self.center, self.radius


# --- p-adic disks ---------------------------------------------------------------------


def reduce_center(x: Fraction, p: int, m: int) -> Fraction:
    """A short rational b with v_p(x - b) >= m."""
    if x == 0:
        return x
    v = valuation(x, p)
    if v >= m:
        return Fraction(0)
    unit = x / Fraction(p) ** v
    mod = p ** (m - v)
    t = unit.numerator * pow(unit.denominator, -1, mod) % mod
    return Fraction(t) * Fraction(p) ** v


class PadicOrbit:
    """Exact orbit of z under phi at the prime p, switching to disks when large.

    ``m is None`` means the state is the exact point ``center``; otherwise it
    is the closed disk of radius p^(-m) about ``center``.
    """

    def __init__(self, phi: PolyQ, z, p: int, *, switch_bits: int = DEFAULT_SWITCH_BITS,
                 digits: int = DEFAULT_DIGITS):
        self.phi = phi
        self.p = p
        self.d = phi.degree
        self.switch_bits = switch_bits
        self.digits = digits
        self.center = Fraction(z)
        self.m: int | None = None
        self.history: list[tuple[Fraction, int | None]] = [(self.center, None)]

    def abs_exponent(self):
        """(e, exact): |w|_p = p^e if exact else |w|_p <= p^e.  e is None for w = 0."""
        if self.center == 0:
            if self.m is None:
                return None, True
            return -self.m, False
        e = -valuation(self.center, self.p)
        if self.m is None or -e < self.m:
            return e, True
        return -self.m, False

    def _to_disk(self):
        v = valuation(self.center, self.p) if self.center != 0 else 0
        self.m = min(v, 0) + self.digits
        self.center = reduce_center(self.center, self.p, self.m)

    def step(self):
        if self.m is None and rational_bits(self.center) * self.d > self.switch_bits:
            self._to_disk()
        if self.m is None:
            self.center = self.phi(self.center)
        else:
            taylor = self.phi.taylor(self.center)
            new_m = None
            for k in range(1, len(taylor)):
                t = taylor[k]
                if t != 0:
                    cand = valuation(t, self.p) + k * self.m
                    new_m = cand if new_m is None else min(new_m, cand)
            # enlarging the disk keeps rigor and stops super-attracting
            # orbits from doubling the stored precision each step
            w = taylor[0]
            cap = (min(valuation(w, self.p), 0) if w != 0 else 0) + self.digits
            self.m = min(new_m, cap)
            self.center = reduce_center(w, self.p, self.m)
        self.history.append((self.center, self.m))

    def returned(self) -> bool:
        """Whether the current state lies inside an earlier one (bounded orbit)."""
        c, m = self.history[-1]
        for c0, m0 in self.history[:-1]:
            if m0 is None:
                if m is None and c == c0:
                    return True
                continue
            if m is not None and m < m0:
                continue
            diff = c - c0
            if diff == 0 or valuation(diff, self.p) >= m0:
                return True
        return False
