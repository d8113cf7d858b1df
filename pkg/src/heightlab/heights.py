"""Certified local Green's functions, critical escape rates and canonical heights.

Every result is a :class:`BoundedValue`, an interval written as center and
radius.  Two facts make the enclosures rigorous:

* Escape estimate.  Write A = log|a_d|_v / (d-1).  Archimedean: for |w| > C,
  G(w) = log|w| + A + eps with -log 2 <= eps <= log(3/2).  p-adic: for
  |w|_p > R = max{|a_i/a_d|^(1/(d-i)), |a_d|^(-1/(d-1))} the leading term
  dominates forever and G(w) = log|w|_p + A exactly.

* Tail bound.  G >= 0 everywhere, and
      archimedean: G(w) <= max(log|w|, log C) + A + log(3/2)
      p-adic:      G(w) <= max(log|w|_p, log R) + A.
  The first follows from the escape estimate and the maximum principle on
  the disk |w| <= C.  For the second, if |w|_p <= R then every term of phi(w)
  is at most |a_d| R^d, so G(w) = G(phi(w))/d <= (log|a_d| + d log R + A)/d
  = log R + A, by induction on the escape time.  Both give
  |G - log+|w|| <= K_v with
      K_inf = log C + |A| + log 2,   K_p = |log R| + |A|,
  and K_p = 0 at good places.  Summing over places, |h - hhat| <= B(phi)
  = sum_v K_v, which is the radius of the naive method after division by d^n.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import mpmath
from mpmath import mpf

from .arith import ARCH, Place, lambda_plus, prime_factors, to_rational, valuation, weil_height
from .errors import ResourceError
from .orbits import ArchOrbit, PadicOrbit, default_precision
from .poly import (
    NormalForm,
    PolyQ,
    _require_dynamical,
    bad_places,
    escape_exponent,
    exact_escape_exponent,
    iterate,
    log_escape_radius,
    normal_form_poly,
    rational_bits,
)

ARCH_MAX_ITER = 64
PADIC_MAX_ITER = 32
DEFAULT_TARGET = 1e-12
EXACT_BITS = 2048
NAIVE_BIT_CAP = 1 << 16

LOG2 = math.log(2)
LOG3_2 = math.log(1.5)
_ULP = 2.0**-50


def _round_slack(x: float) -> float:
    return abs(x) * _ULP


@dataclass(frozen=True)
class BoundedValue:
    """The closed interval [value - error, value + error]."""

    value: float
    error: float

    def __post_init__(self):
        if not (self.error >= 0 and math.isfinite(self.error)):
            raise ValueError(f"error must be finite and nonnegative, got {self.error}")

    @classmethod
    def exact(cls, x: float) -> "BoundedValue":
        return cls(float(x), 0.0)

    @classmethod
    def from_interval(cls, lo, hi) -> "BoundedValue":
        if hi < lo:
            raise ValueError("empty interval")
        mid = (lo + hi) / 2
        v = float(mid)
        err = float(max(hi - mid, mid - lo)) * (1 + _ULP) + abs(v - float(mid)) + _round_slack(v)
        return cls(v, err)

    @property
    def lo(self) -> float:
        return self.value - self.error

    @property
    def hi(self) -> float:
        return self.value + self.error

    def __add__(self, other: "BoundedValue") -> "BoundedValue":
        v = self.value + other.value
        return BoundedValue(v, self.error + other.error + _round_slack(v))

    def scale(self, s: float) -> "BoundedValue":
        v = self.value * s
        return BoundedValue(v, abs(s) * self.error + _round_slack(v))

    def intersects(self, other: "BoundedValue") -> bool:
        return abs(self.value - other.value) <= self.error + other.error

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error}


def enclosure_max(values: Iterable[BoundedValue]) -> BoundedValue:
    """An enclosure of max_i x_i given enclosures of each x_i."""
    values = list(values)
    if not values:
        raise ValueError("empty max")
    lo = max(b.lo for b in values)
    hi = max(b.hi for b in values)
    return BoundedValue.from_interval(lo, hi)


def enclosure_sum(values: Iterable[BoundedValue]) -> BoundedValue:
    total = BoundedValue(0.0, 0.0)
    for b in values:
        total = total + b
    return total


class Status(str, enum.Enum):
    ESCAPED = "escaped"
    BOUNDED = "bounded-certified"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class OrbitRecord:
    point: object
    place: Place
    escape_index: Optional[int]
    iterations_used: int
    status: Status

    def __post_init__(self):
        if (self.escape_index is not None) != (self.status is Status.ESCAPED):
            raise ValueError("escape_index is present exactly when the orbit escaped")

    def to_json(self) -> dict:
        pt = self.point
        if isinstance(pt, Fraction):
            pt = f"{pt.numerator}/{pt.denominator}"
        else:
            pt = {"re": complex(pt).real, "im": complex(pt).imag}
        return {
            "point": pt,
            "place": str(self.place),
            "escape_index": self.escape_index,
            "iterations_used": self.iterations_used,
            "status": self.status.value,
        }


# --- archimedean ---------------------------------------------------------------------


def _exact_cycle(phi: PolyQ, z: Fraction, max_iter: int) -> Optional[int]:
    """Steps until the exact orbit repeats a value, while numbers stay small."""
    seen = {z}
    w = z
    for n in range(1, max_iter + 1):
        if rational_bits(w) * phi.degree > EXACT_BITS:
            return None
        w = phi(w)
        if w in seen:
            return n
        seen.add(w)
    return None


def _is_exact_input(phi, z) -> bool:
    return isinstance(phi, PolyQ) and isinstance(z, (int, Fraction))


def _arch_A(orbit: ArchOrbit):
    """Interval for log|a_d| / (d-1)."""
    ad = abs(orbit.coeffs[-1])
    e = orbit.coeff_err[-1]
    slack = mpf(2) ** (8 - orbit.prec)
    lo = mpmath.log(ad - e) / (orbit.d - 1)
    hi = mpmath.log(ad + e) / (orbit.d - 1)
    return lo - slack * (1 + abs(lo)), hi + slack * (1 + abs(hi))


def _log_plus(x):
    return mpmath.log(x) if x > 1 else mpf(0)


def _green_arch_run(phi, z, target_error, max_iter, prec):
    d = phi.degree
    orbit = ArchOrbit(phi, z, prec)
    with mpmath.workprec(prec):
        slack = mpf(2) ** (8 - prec)
        logC_hi = mpf(log_escape_radius(phi, ARCH)) + mpf("1e-12")
        C_hi = mpmath.exp(logC_hi)
        A_lo, A_hi = _arch_A(orbit)
        half_eps = (mpmath.log(2) + mpmath.log(mpf(3) / 2)) / 2
        tail_const = mpmath.log(mpf(3) / 2)
        escape_index = None
        zero_centers = []
        n = 0
        while True:
            if escape_index is None and orbit.abs_lo() > C_hi:
                escape_index = n
            scale = mpf(d) ** (-n)
            if escape_index is not None:
                trunc = scale * half_eps
                if trunc <= target_error / 2 or n >= max_iter:
                    lo, hi = orbit.abs_lo(), orbit.abs_hi()
                    if lo <= 0:
                        return None, None, math.inf, 1.0
                    L_lo, L_hi = mpmath.log(lo), mpmath.log(hi)
                    L_lo, L_hi = L_lo - slack * (1 + abs(L_lo)), L_hi + slack * (1 + abs(L_hi))
                    g_lo = scale * (L_lo + A_lo - mpmath.log(2))
                    g_hi = scale * (L_hi + A_hi + tail_const)
                    rounding = scale * ((L_hi - L_lo) + (A_hi - A_lo)) / 2
                    rec = OrbitRecord(z, ARCH, escape_index, n, Status.ESCAPED)
                    return BoundedValue.from_interval(g_lo, g_hi), rec, float(rounding), float(trunc)
            else:
                hi = orbit.abs_hi()
                upper = scale * (max(_log_plus(hi), logC_hi) + A_hi + tail_const)
                if upper <= target_error / 2 or n >= max_iter:
                    rounding = scale * (_log_plus(hi) - _log_plus(abs(orbit.center)))
                    rec = OrbitRecord(z, ARCH, None, n, Status.UNDECIDED)
                    return BoundedValue.from_interval(mpf(0), upper), rec, float(rounding), float(upper)
                if orbit.radius == 0:
                    c = orbit.center
                    if any(c == c0 for c0 in zero_centers):
                        rec = OrbitRecord(z, ARCH, None, n, Status.BOUNDED)
                        return BoundedValue(0.0, 0.0), rec, 0.0, 1.0
                    zero_centers.append(c)
            orbit.step()
            n += 1


def green_arch(phi, z, target_error: float = DEFAULT_TARGET, *, max_iter: int = ARCH_MAX_ITER,
               prec: Optional[int] = None) -> tuple[BoundedValue, OrbitRecord]:
    """Enclosure of the archimedean escape rate G(z) = lim d^-n log+|phi^n(z)|.

    Once the ball orbit provably leaves the disk of radius C, iteration
    continues until d^-n (log 3)/2 drops below the target.  Orbits that do
    not escape get the tail interval [0, d^-n (max(log+|w|, log C) + A +
    log(3/2))].  Exactly periodic rational orbits give 0 with radius 0.
    Precision doubles (up to three times) while rounding exceeds 10% of the
    truncation radius.
    """
    _require_dynamical(phi)
    if target_error <= 0:
        raise ValueError("target_error must be positive")
    if _is_exact_input(phi, z):
        z = Fraction(z)
        n = _exact_cycle(phi, z, max_iter)
        if n is not None:
            return BoundedValue(0.0, 0.0), OrbitRecord(z, ARCH, None, n, Status.BOUNDED)
    prec = prec or default_precision(phi.degree, max_iter)
    best = None
    for _ in range(4):
        bv, rec, rounding, trunc = _green_arch_run(phi, z, target_error, max_iter, prec)
        if bv is not None:
            best = (bv, rec)
            if rounding <= 0.1 * trunc:
                break
        prec *= 2
    if best is None:
        raise ResourceError("archimedean orbit lost all precision")
    return best


# --- p-adic ------------------------------------------------------------------------


@dataclass(frozen=True)
class PadicGreen:
    """G_p(z) / log p lies in [lo, hi]; both ends exact rationals."""

    p: int
    lo: Fraction
    hi: Fraction
    record: OrbitRecord

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def enclosure(self) -> BoundedValue:
        lp = math.log(self.p)
        lo, hi = float(self.lo) * lp, float(self.hi) * lp
        if self.is_exact:
            return BoundedValue(lo, _round_slack(lo))
        return BoundedValue.from_interval(lo - _round_slack(lo), hi + _round_slack(hi))


def padic_threshold_exponent(phi: PolyQ, p: int) -> Fraction:
    """Exponent of the radius beyond which the escape formula is used.

    max(C, R): equal to C except where C is too small for the leading term
    to dominate (possible when p divides 2d).
    """
    return max(escape_exponent(phi, p), exact_escape_exponent(phi, p))


def green_nonarch_exact(phi: PolyQ, z, p: int, max_iter: int = PADIC_MAX_ITER) -> PadicGreen:
    """G_p(z) as an exact multiple of log p, or an exact bracket for it."""
    _require_dynamical(phi)
    z = to_rational(z)
    d = phi.degree
    A = Fraction(-valuation(phi.leading, p), d - 1)
    eR = exact_escape_exponent(phi, p)
    eT = padic_threshold_exponent(phi, p)
    orbit = PadicOrbit(phi, z, p)
    n = 0
    while True:
        e, exact = orbit.abs_exponent()
        if e is not None and exact and e > eT:
            g = (e + A) / Fraction(d) ** n
            return PadicGreen(p, g, g, OrbitRecord(z, Place(p), n, n, Status.ESCAPED))
        tail = (eR if e is None else max(e, eR)) + A
        if tail <= 0 or (n > 0 and orbit.returned()):
            return PadicGreen(p, Fraction(0), Fraction(0), OrbitRecord(z, Place(p), None, n, Status.BOUNDED))
        if n >= max_iter:
            hi = tail / Fraction(d) ** n
            return PadicGreen(p, Fraction(0), hi, OrbitRecord(z, Place(p), None, n, Status.UNDECIDED))
        orbit.step()
        n += 1


def green_nonarch(phi: PolyQ, z, p: int, max_iter: int = PADIC_MAX_ITER) -> tuple[BoundedValue, OrbitRecord]:
    g = green_nonarch_exact(phi, z, p, max_iter)
    return g.enclosure(), g.record


def green(phi, z, v: Place, target_error: float = DEFAULT_TARGET, *, arch_max_iter: int = ARCH_MAX_ITER,
          padic_max_iter: int = PADIC_MAX_ITER, prec: Optional[int] = None):
    if v.is_archimedean:
        return green_arch(phi, z, target_error, max_iter=arch_max_iter, prec=prec)
    return green_nonarch(phi, z, v.p, padic_max_iter)


def critical_escape(nf: NormalForm, v: Place, target_error: float = DEFAULT_TARGET, **caps) -> BoundedValue:
    """M_v(f_c) = max_i G_v(c_i); the critical points of f_c are the c_i."""
    f = normal_form_poly(nf)
    if not v.is_archimedean and not nf.exact:
        raise ValueError("p-adic escape rates need exact parameters")
    return enclosure_max(green(f, c, v, target_error, **caps)[0] for c in nf.c)


# --- tail constants ------------------------------------------------------------------


def local_defect_bound(phi: PolyQ, v: Place) -> float:
    """K_v with |G_v(w) - log+|w|_v| <= K_v for every w (an upper bound, rounded up)."""
    _require_dynamical(phi)
    d = phi.degree
    if v.is_archimedean:
        A = math.log(abs(complex(phi.leading))) / (d - 1)
        k = log_escape_radius(phi, ARCH) + abs(A) + LOG2
        return k * (1 + 1e-12) + 1e-12
    A = Fraction(-valuation(phi.leading, v.p), d - 1)
    eR = exact_escape_exponent(phi, v.p)
    k = float(abs(eR) + abs(A)) * math.log(v.p)
    return k * (1 + _ULP)


def naive_defect_bound(phi: PolyQ) -> float:
    """B(phi) = sum_v K_v, so |h(x) - hhat(x)| <= B(phi) for all rational x."""
    places = [ARCH] + sorted(bad_places(phi))
    return sum(local_defect_bound(phi, v) for v in places) * (1 + 1e-12)


# --- canonical heights ---------------------------------------------------------------


def _lambda_plus_enclosure(x: Fraction, p: int) -> BoundedValue:
    val = lambda_plus(x, Place(p))
    return BoundedValue(val, _round_slack(val))


def canonical_height_local_method(phi: PolyQ, alpha, target_error: float = DEFAULT_TARGET, *,
                                  arch_max_iter: int = ARCH_MAX_ITER, padic_max_iter: int = PADIC_MAX_ITER,
                                  prec: Optional[int] = None) -> BoundedValue:
    """hhat(alpha) = G_inf + sum over bad p of G_p + sum over other p of log+|alpha|_p."""
    _require_dynamical(phi)
    alpha = to_rational(alpha)
    bad = sorted(v.p for v in bad_places(phi))
    parts = [green_arch(phi, alpha, target_error, max_iter=arch_max_iter, prec=prec)[0]]
    parts += [green_nonarch(phi, alpha, p, padic_max_iter)[0] for p in bad]
    parts += [_lambda_plus_enclosure(alpha, p) for p in prime_factors(alpha.denominator) if p not in bad]
    return enclosure_sum(parts)


def _padic_abs_after(phi: PolyQ, z: Fraction, p: int, n: int):
    """abs_exponent of phi^n(z) at p; past R the recursion e -> d e - v(a_d) is exact."""
    eR = exact_escape_exponent(phi, p)
    vd = valuation(phi.leading, p)
    orbit = PadicOrbit(phi, z, p)
    for k in range(n):
        e, exact = orbit.abs_exponent()
        if e is not None and exact and e > eR:
            for _ in range(n - k):
                e = phi.degree * e - vd
            return e, True
        orbit.step()
    return orbit.abs_exponent()


def _naive_decomposed(phi: PolyQ, alpha: Fraction, n: int, prec: Optional[int]) -> tuple:
    """Interval for h(phi^n(alpha)) built place by place, for orbits too big to store."""
    d = phi.degree
    prec = prec or default_precision(d, n)
    orbit = ArchOrbit(phi, alpha, prec)
    for _ in range(n):
        orbit.step()
    with mpmath.workprec(prec):
        slack = mpf(2) ** (8 - prec)
        lo = _log_plus(orbit.abs_lo()) * (1 - slack)
        hi = _log_plus(orbit.abs_hi()) * (1 + slack)
    primes = set(prime_factors(alpha.denominator))
    for a in phi.coeffs:
        primes.update(prime_factors(a.denominator))
    lo_p, hi_p = [], []
    for p in sorted(primes):
        e, exact = _padic_abs_after(phi, alpha, p, n)
        e = Fraction(0) if e is None else Fraction(max(e, 0))
        lo_p.append((p, e if exact else Fraction(0)))
        hi_p.append((p, e))
    with mpmath.workprec(prec):
        for p, e in lo_p:
            lo += mpf(e.numerator) / e.denominator * mpmath.log(p) * (1 - slack)
        for p, e in hi_p:
            hi += mpf(e.numerator) / e.denominator * mpmath.log(p) * (1 + slack)
        scale = mpf(d) ** (-n)
        return lo * scale, hi * scale


def canonical_height_naive_method(phi: PolyQ, alpha, n: int, *, bit_cap: int = NAIVE_BIT_CAP,
                                  prec: Optional[int] = None) -> BoundedValue:
    """d^-n h(phi^n(alpha)) with radius d^-n B(phi).

    Small orbits are iterated exactly.  Past ``bit_cap`` the height of
    phi^n(alpha) is assembled from its local contributions instead, each
    enclosed rigorously.
    """
    _require_dynamical(phi)
    if n < 1:
        raise ValueError("n must be positive")
    alpha = to_rational(alpha)
    d = phi.degree
    tail = naive_defect_bound(phi) / d**n
    try:
        w = iterate(phi, alpha, n, bit_cap=bit_cap)[-1]
        h = weil_height(w) / d**n
        return BoundedValue(h, tail + 4 * _round_slack(h))
    except ResourceError:
        pass
    lo, hi = _naive_decomposed(phi, alpha, n, prec)
    core = BoundedValue.from_interval(lo, hi)
    return BoundedValue(core.value, core.error + tail)


def is_preperiodic(phi: PolyQ, alpha, *, max_iter: int = ARCH_MAX_ITER,
                   target_error: float = DEFAULT_TARGET) -> Optional[bool]:
    """True/False when decided, None when undecided within the caps.

    True only on an exact repeat in the orbit.  False when hhat(alpha) is
    certified positive, either from the local-method enclosure or because
    h(phi^n(alpha)) exceeds B(phi) for an exactly computed iterate.
    """
    _require_dynamical(phi)
    alpha = to_rational(alpha)
    B = naive_defect_bound(phi)
    seen = {alpha}
    w = alpha
    for _ in range(max_iter):
        if weil_height(w) > B:
            return False
        if rational_bits(w) * phi.degree > EXACT_BITS:
            break
        w = phi(w)
        if w in seen:
            return True
        seen.add(w)
    h = canonical_height_local_method(phi, alpha, target_error, arch_max_iter=max_iter)
    if h.lo > 0:
        return False
    return None


__all__ = [
    "BoundedValue",
    "OrbitRecord",
    "PadicGreen",
    "Status",
    "canonical_height_local_method",
    "canonical_height_naive_method",
    "critical_escape",
    "enclosure_max",
    "enclosure_sum",
    "green",
    "green_arch",
    "green_nonarch",
    "green_nonarch_exact",
    "is_preperiodic",
    "local_defect_bound",
    "naive_defect_bound",
    "padic_threshold_exponent",
]

