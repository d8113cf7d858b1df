"""Dense univariate polynomials, the normal form f_c, reduction and escape radii.

Coefficients are stored lowest degree first, ``coeffs[i]`` multiplying
``z**i``.  :class:`PolyQ` is exact over Q, :class:`PolyC` is its complex
floating-point mirror used for root finding and for conjugates that are not
defined over Q.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence, Union

from .arith import (
    ARCH,
    Place,
    format_rational,
    lambda_plus,
    prime_factors,
    to_rational,
    valuation,
)
from .errors import NumericError, ParseError, ResourceError

DEFAULT_BIT_CAP = 10**6
DEFAULT_DEGREE_CAP = 256


def _trim(coeffs):
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class _Poly:
    __slots__ = ("coeffs",)
    _zero = 0

    def __init__(self, coeffs):
        coeffs = _trim(self._coerce(c) for c in coeffs)
        if not coeffs:
            coeffs = (self._coerce(0),)
        object.__setattr__(self, "coeffs", coeffs)

    @staticmethod
    def _coerce(c):
        return c

    def __setattr__(self, name, value):
        raise AttributeError("polynomials are immutable")

    @property
    def degree(self) -> int:
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, z):
        acc = self._coerce(0) * z
        for a in reversed(self.coeffs):
            acc = acc * z + a
        return acc

    def __eq__(self, other):
        return type(self) is type(other) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((type(self).__name__, self.coeffs))

    def __repr__(self):
        return f"{type(self).__name__}({list(self.coeffs)!r})"

    def __add__(self, other):
        other = self._lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return type(self)(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return type(self)(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = [self._coerce(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return type(self)(out)

    __rmul__ = __mul__

    def _lift(self, other):
        if isinstance(other, _Poly):
            if type(other) is not type(self):
                return type(self)(other.coeffs)
            return other
        return type(self)([other])

    def scale(self, s):
        return type(self)(s * c for c in self.coeffs)

    def derivative(self):
        if len(self.coeffs) == 1:
            return type(self)([0])
        return type(self)(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def compose(self, inner):
        """``self(inner(z))`` by Horner's rule over polynomials."""
        inner = self._lift(inner)
        acc = type(self)([0])
        for a in reversed(self.coeffs):
            acc = acc * inner + a
        return acc

    def taylor(self, center):
        """Coefficients of ``self(center + t)`` in t (synthetic division)."""
        b = list(self.coeffs)
        n = len(b)
        for k in range(n):
            for i in range(n - 2, k - 1, -1):
                b[i] = b[i] + center * b[i + 1]
        return b


class PolyQ(_Poly):
    """Polynomial with exact rational coefficients."""

    __slots__ = ()

    @staticmethod
    def _coerce(c):
        return to_rational(c) if not isinstance(c, Fraction) else c

    def bit_length(self) -> int:
        return max(max(abs(c.numerator).bit_length(), c.denominator.bit_length()) for c in self.coeffs)

    def to_complex(self) -> "PolyC":
        return PolyC(complex(c) for c in self.coeffs)

    def __str__(self) -> str:
        return format_poly(self)


class PolyC(_Poly):
    """Polynomial with complex floating-point coefficients."""

    __slots__ = ()

    @staticmethod
    def _coerce(c):
        return complex(c)

    def to_complex(self) -> "PolyC":
        return self


Poly = Union[PolyQ, PolyC]


def parse_poly(text: str) -> PolyQ:
    """Parse ``"a_0,a_1,...,a_d"`` (each ``num/den``), lowest degree first."""
    fields = [f.strip() for f in text.split(",")]
    coeffs = []
    for i, f in enumerate(fields):
        try:
            coeffs.append(to_rational(f))
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad coefficient {f!r}", position=i) from exc
    phi = PolyQ(coeffs)
    if phi.degree < 1:
        raise ParseError("polynomial must have degree >= 1")
    return phi


def format_poly(phi: PolyQ) -> str:
    return ",".join(format_rational(c) for c in phi.coeffs)


def _require_dynamical(phi: _Poly):
    if phi.degree < 2:
        raise ValueError(f"need degree >= 2, got {phi.degree}")


# --- evaluation and iteration -------------------------------------------------


def evaluate(phi: PolyQ, z) -> Fraction:
    return phi(to_rational(z))


def rational_bits(x: Fraction) -> int:
    return max(abs(x.numerator).bit_length(), x.denominator.bit_length())


def iterate(phi: PolyQ, z, n: int, *, bit_cap: int = DEFAULT_BIT_CAP) -> list[Fraction]:
    """Exact orbit ``[z, phi(z), ..., phi^n(z)]``.

    Raises :class:`ResourceError` as soon as a numerator or denominator would
    exceed ``bit_cap`` bits.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    w = to_rational(z)
    orbit = [w]
    d = max(phi.degree, 1)
    for k in range(n):
        # the next value has roughly d times the bits; refuse before computing it
        if rational_bits(w) * d + phi.bit_length() > bit_cap:
            raise ResourceError(f"orbit exceeds {bit_cap} bits at step {k + 1}")
        w = phi(w)
        orbit.append(w)
    return orbit


def compose_power(phi: _Poly, k: int, *, degree_cap: int = DEFAULT_DEGREE_CAP) -> _Poly:
    """Coefficient form of the k-th iterate."""
    if k < 1:
        raise ValueError("k must be positive")
    if phi.degree**k > degree_cap:
        raise ResourceError(f"degree {phi.degree}^{k} exceeds cap {degree_cap}")
    out = phi
    for _ in range(k - 1):
        out = phi.compose(out)
    return out


def derivative(phi: _Poly) -> _Poly:
    return phi.derivative()


# --- normal form ---------------------------------------------------------------


@dataclass(frozen=True)
class NormalForm:
    """Parameters c = (c_1, ..., c_{d-1}) of f_c, with f_c(0) = 0 and f_c' = prod(z - c_i)."""

    d: int
    c: tuple

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("normal form needs d >= 2")
        if len(self.c) != self.d - 1:
            raise ValueError(f"need {self.d - 1} parameters, got {len(self.c)}")
        c = tuple(to_rational(x) if isinstance(x, (int, str)) else x for x in self.c)
        object.__setattr__(self, "c", c)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.c)

    def poly(self):
        return normal_form_poly(self)

    def __str__(self) -> str:
        return format_normal_form(self)


def parse_normal_form(text: str) -> NormalForm:
    """Parse ``"d; c_1,...,c_{d-1}"``."""
    try:
        head, _, tail = text.partition(";")
        d = int(head.strip())
    except ValueError as exc:
        raise ParseError(f"bad degree in {text!r}", position=0) from exc
    fields = [f.strip() for f in tail.split(",") if f.strip()]
    c = []
    for i, f in enumerate(fields):
        try:
            c.append(to_rational(f))
        except ValueError as exc:
            raise ParseError(f"bad parameter {f!r}", position=i + 1) from exc
    try:
        return NormalForm(d, tuple(c))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_normal_form(nf: NormalForm) -> str:
    def fmt(x):
        return format_rational(x) if isinstance(x, Fraction) else repr(complex(x))

    return f"{nf.d}; " + ",".join(fmt(x) for x in nf.c)


def elementary_symmetric(values: Sequence, m: int):
    if m == 0:
        return 1
    total = 0
    for combo in combinations(values, m):
        prod = 1
        for x in combo:
            prod = prod * x
        total = total + prod
    return total


def normal_form_poly(nf: NormalForm) -> _Poly:
    """f_c: coefficient of z^j is (-1)^(d-j) e_{d-j}(c) / j."""
    d = nf.d
    coeffs = [0] * (d + 1)
    for j in range(1, d + 1):
        e = elementary_symmetric(nf.c, d - j)
        sign = -1 if (d - j) % 2 else 1
        if nf.exact:
            coeffs[j] = Fraction(sign) * Fraction(e) / j
        else:
            coeffs[j] = sign * complex(e) / j
    out = PolyQ(coeffs) if nf.exact else PolyC(coeffs)
    # characterizing properties of f_c
    assert out(0) == 0
    if nf.exact:
        crit = PolyQ([1])
        for ci in nf.c:
            crit = crit * PolyQ([-ci, 1])
        assert out.derivative() == crit
    return out


# --- reduction and coefficient heights -------------------------------------------


def bad_places(phi: PolyQ) -> frozenset:
    """Primes where |a_d|_p != 1 or some |a_i|_p > 1."""
    _require_dynamical(phi)
    primes = set(prime_factors(phi.leading.numerator))
    for a in phi.coeffs:
        primes.update(prime_factors(a.denominator))
    return frozenset(Place(p) for p in primes)


def coefficient_support(phi: PolyQ) -> tuple:
    """Primes dividing some coefficient's numerator or denominator."""
    primes = set()
    for a in phi.coeffs:
        if a != 0:
            primes.update(prime_factors(a.numerator))
            primes.update(prime_factors(a.denominator))
    return tuple(Place(p) for p in sorted(primes))


def coefficient_height_local(phi: PolyQ, v: Place) -> float:
    """max_i log max{1, |a_i|_v}."""
    return max(lambda_plus(a, v) for a in phi.coeffs)


def coefficient_height_global(phi: PolyQ) -> float:
    """h(phi) = sum over places of the local coefficient heights."""
    places = (ARCH,) + tuple(Place(p) for p in sorted({p for a in phi.coeffs for p in prime_factors(a.denominator)}))
    return sum(v.local_degree * coefficient_height_local(phi, v) for v in places)


# --- escape radii ------------------------------------------------------------------


def escape_exponent(phi: PolyQ, p: int) -> Fraction:
    """Exact e with C_{phi,p} = p**e.

    C = |2d|_p * max{1, |a_i/a_d|_p^(1/(d-i)), |a_d|_p^(-1/(d-1))}.
    """
    _require_dynamical(phi)
    d = phi.degree
    vd = valuation(phi.leading, p)
    best = Fraction(0)
    for i, a in enumerate(phi.coeffs[:-1]):
        if a != 0:
            best = max(best, Fraction(vd - valuation(a, p), d - i))
    best = max(best, Fraction(vd, d - 1))
    return -valuation(2 * d, p) + best


def exact_escape_exponent(phi: PolyQ, p: int) -> Fraction:
    """Exact e with R = p**e, R = max{|a_i/a_d|_p^(1/(d-i)), |a_d|_p^(-1/(d-1))}.

    For |z|_p > R the leading term strictly dominates at every later step, so
    |phi^n(z)|_p = |a_d|_p^((d^n-1)/(d-1)) |z|_p^(d^n) and the escape formula
    holds with zero error.  Unlike C_{phi,p}, R carries no |2d|_p factor.
    """
    _require_dynamical(phi)
    d = phi.degree
    vd = valuation(phi.leading, p)
    best = Fraction(vd, d - 1)
    for i, a in enumerate(phi.coeffs[:-1]):
        if a != 0:
            best = max(best, Fraction(vd - valuation(a, p), d - i))
    return best


def log_escape_radius(phi: _Poly, v: Place) -> float:
    _require_dynamical(phi)
    if not v.is_archimedean:
        if not isinstance(phi, PolyQ):
            raise ValueError("p-adic escape radius needs exact coefficients")
        return float(escape_exponent(phi, v.p)) * math.log(v.p)
    d = phi.degree
    ad = abs(complex(phi.leading))
    terms = [0.0, -math.log(ad) / (d - 1)]
    for i, a in enumerate(phi.coeffs[:-1]):
        if a != 0:
            terms.append((math.log(abs(complex(a))) - math.log(ad)) / (d - i))
    return math.log(2 * d) + max(terms)


def escape_radius(phi: _Poly, v: Place) -> float:
    """C_{phi,v}; for p-adic places computed from exact valuations."""
    if not v.is_archimedean:
        e = escape_exponent(phi, v.p)
        return float(Fraction(v.p) ** e) if e.denominator == 1 else v.p ** float(e)
    return math.exp(log_escape_radius(phi, v))


def in_escape_region(phi: _Poly, z, v: Place) -> bool:
    """True iff |z|_v > C_{phi,v} (the closed disk is excluded).

    Exact for rational phi and z; floating point otherwise.
    """
    _require_dynamical(phi)
    if not v.is_archimedean:
        z = to_rational(z)
        if z == 0:
            return False
        return -valuation(z, v.p) > escape_exponent(phi, v.p)
    if isinstance(phi, PolyQ) and isinstance(z, (Fraction, int)):
        return _arch_exceeds_exact(phi, abs(Fraction(z)))
    zc = abs(complex(z))
    if zc == 0:
        return False
    return math.log(zc) > log_escape_radius(phi, v)


def _arch_exceeds_exact(phi: PolyQ, r: Fraction) -> bool:
    d = phi.degree
    ad = abs(phi.leading)
    s = r / (2 * d)
    if s <= 1:
        return False
    if s ** (d - 1) * ad <= 1:
        return False
    for i, a in enumerate(phi.coeffs[:-1]):
        if a != 0 and s ** (d - i) <= abs(a) / ad:
            return False
    return True


# --- affine conjugation ------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """mu(z) = scale * z + shift."""

    scale: object
    shift: object = 0

    def __call__(self, z):
        return self.scale * z + self.shift

    def inverse(self) -> "AffineMap":
        return AffineMap(1 / self.scale, -self.shift / self.scale)

    @property
    def exact(self) -> bool:
        return isinstance(self.scale, (Fraction, int)) and isinstance(self.shift, (Fraction, int))

    def conjugate(self, phi: _Poly) -> _Poly:
        """mu^{-1} o phi o mu."""
        cls = PolyQ if (isinstance(phi, PolyQ) and self.exact) else PolyC
        phi = cls(phi.coeffs)
        inner = cls([self.shift, self.scale])
        outer = phi.compose(inner) - self.shift
        return outer.scale(1 / self.scale) if cls is PolyC else outer.scale(Fraction(1) / self.scale)


@dataclass(frozen=True)
class Conjugation:
    """Result of :func:`conjugate_to_normal_form`."""

    nf: NormalForm  # numeric parameters
    mu: AffineMap  # numeric
    exact: NormalForm | None = None
    exact_mu: AffineMap | None = None
    residual: float = 0.0


def rational_root(x: Fraction, k: int) -> Fraction | None:
    """The real k-th root of x if it is rational, else None."""
    if k == 1:
        return x
    if x < 0:
        if k % 2 == 0:
            return None
        r = rational_root(-x, k)
        return None if r is None else -r
    num = _int_root(x.numerator, k)
    den = _int_root(x.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    lo, hi = 0, 1 << ((n.bit_length() + k - 1) // k + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def _order_key(z: complex):
    z = complex(z)
    # math.atan2, not cmath.phase: the latter raises on subnormal imaginary parts
    return (round(abs(z), 12), round(math.atan2(z.imag, z.real), 12))


def rational_fixed_points(phi: PolyQ, approx: Sequence[complex]) -> list[Fraction]:
    """Rational roots of phi(z) - z, located from numerical approximations.

    A rational root p/q has q dividing the leading numerator of the cleared
    polynomial, so rounding each approximation with that denominator bound
    and verifying exactly finds all of them.
    """
    g = phi - PolyQ([0, 1])
    lcm = 1
    for a in g.coeffs:
        lcm = lcm * a.denominator // math.gcd(lcm, a.denominator)
    lead = abs(g.leading.numerator * (lcm // g.leading.denominator))
    found = []
    for r in approx:
        r = complex(r)
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
            continue
        cand = Fraction(r.real).limit_denominator(max(lead, 1))
        if g(cand) == 0 and cand not in found:
            found.append(cand)
    if g.coeffs[0] == 0 and Fraction(0) not in found:
        found.append(Fraction(0))
    return sorted(found, key=lambda x: _order_key(complex(x)))


def conjugate_to_normal_form(phi: _Poly, *, tol: float = 1e-8) -> Conjugation:
    """Affine conjugate of phi in the form f_c.

    mu(z) = (a_d d)^(-1/(d-1)) z + gamma with gamma the fixed point of
    smallest modulus (ties: smallest argument) and the principal root branch.
    The exact branch is taken when a rational fixed point exists and
    (a_d d)^(1/(d-1)) is rational; gamma is then the smallest rational one.
    """
    from .roots import all_roots, fixed_points

    _require_dynamical(phi)
    d = phi.degree
    fps = fixed_points(phi)
    numeric_fps = sorted(fps.roots, key=_order_key)

    exact_nf = exact_mu = None
    if isinstance(phi, PolyQ):
        rat = rational_fixed_points(phi, fps.roots)
        root = rational_root(phi.leading * d, d - 1)
        if rat and root is not None:
            exact_mu = AffineMap(1 / root, rat[0])
            g = exact_mu.conjugate(phi)
            gprime = g.derivative()
            if gprime.leading != 1 or g(0) != 0:
                raise NumericError("exact conjugation failed its own check")
            c_roots = all_roots(gprime.to_complex()).roots
            c_exact = _rational_critical_points(gprime, c_roots)
            if c_exact is not None:
                exact_nf = NormalForm(d, tuple(c_exact))
                if normal_form_poly(exact_nf) != g:
                    raise NumericError("exact normal form mismatch")

    if exact_mu is not None:
        mu = AffineMap(complex(exact_mu.scale), complex(exact_mu.shift))
    else:
        gamma = numeric_fps[0]
        s = complex(phi.leading) * d
        scale = cmath.exp(-cmath.log(s) / (d - 1))
        mu = AffineMap(scale, complex(gamma))
    g = mu.conjugate(PolyC(phi.coeffs))
    gprime = g.derivative()
    crit = sorted(all_roots(gprime).roots, key=_order_key)
    nf = NormalForm(d, tuple(crit))
    if exact_nf is not None:
        nf = NormalForm(d, tuple(complex(x) for x in exact_nf.c))
    f = normal_form_poly(nf).to_complex()
    resid = max(abs(a - b) / (1 + abs(b)) for a, b in zip(g.coeffs, f.coeffs + (0,) * (len(g.coeffs) - len(f.coeffs))))
    if abs(gprime.leading - 1) > tol or abs(g(0)) > tol * max(1.0, max(abs(a) for a in g.coeffs)) or resid > tol:
        raise NumericError(f"normal form conjugation did not verify (residual {resid:.3g})", resid)
    return Conjugation(nf=nf, mu=mu, exact=exact_nf, exact_mu=exact_mu, residual=resid)


def _rational_critical_points(gprime: PolyQ, approx) -> list[Fraction] | None:
    """Rational roots (with multiplicity) of a monic g', or None if any is irrational."""
    lcm = 1
    for a in gprime.coeffs:
        lcm = lcm * a.denominator // math.gcd(lcm, a.denominator)
    out = []
    rest = gprime
    for r in sorted(approx, key=_order_key):
        r = complex(r)
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
            return None
        cand = Fraction(r.real).limit_denominator(max(lcm, 1))
        q, rem = _divide_linear(rest, cand)
        if rem != 0:
            return None
        out.append(cand)
        rest = q
    return sorted(out, key=lambda x: _order_key(complex(x)))


def _divide_linear(p: PolyQ, r: Fraction):
    """Synthetic division by (z - r): returns (quotient, remainder)."""
    coeffs = list(p.coeffs)
    n = len(coeffs) - 1
    q = [Fraction(0)] * n
    acc = Fraction(0)
    for i in range(n, 0, -1):
        acc = coeffs[i] + acc * r
        q[i - 1] = acc
    rem = coeffs[0] + acc * r
    return PolyQ(q if q else [0]), rem
