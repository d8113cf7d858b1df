"""Exact rationals, places of Q, absolute values and Weil heights.

Rationals are plain :class:`fractions.Fraction` objects.  Every p-adic
quantity is carried as an integer valuation and only turned into a float
(``valuation * log p``) at the boundary, so identities such as the product
formula can be checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Union

from sympy import factorint, isprime

Rational = Fraction
RationalLike = Union[Fraction, int, str]

INF = "inf"


@dataclass(frozen=True, order=True)
class Place:
    """An absolute value of Q: the archimedean one (``p is None``) or p-adic."""

    p: int | None = None
    local_degree: int = 1

    def __post_init__(self):
        if self.p is not None and not _is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.local_degree < 1:
            raise ValueError("local_degree must be positive")

    @property
    def is_archimedean(self) -> bool:
        return self.p is None

    def __str__(self) -> str:
        return INF if self.p is None else str(self.p)

    @classmethod
    def parse(cls, text: str) -> "Place":
        text = text.strip().lower()
        if text in (INF, "infinity", "oo", "arch"):
            return ARCH
        return cls(int(text))


ARCH = Place()


@lru_cache(maxsize=4096)
def _is_prime(n: int) -> bool:
    return bool(isprime(n))


@lru_cache(maxsize=4096)
def prime_factors(n: int) -> tuple[int, ...]:
    """Sorted distinct primes dividing ``|n|`` (empty for 0 and +-1)."""
    n = abs(n)
    if n < 2:
        return ()
    return tuple(sorted(factorint(n)))


def to_rational(x: RationalLike) -> Fraction:
    """Parse ``"num/den"`` strings (or pass through ints and Fractions)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse rational {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def valuation(x: RationalLike, p: int) -> int:
    """p-adic valuation by repeated exact division."""
    x = to_rational(x)
    if x == 0:
        raise ValueError("valuation of zero is infinite")
    return _int_valuation(x.numerator, p) - _int_valuation(x.denominator, p)


def _int_valuation(n: int, p: int) -> int:
    n = abs(n)
    # p^(2^i) ladder: orbit numerators can carry huge p-powers
    ladder = [p]
    while n % ladder[-1] == 0:
        ladder.append(ladder[-1] * ladder[-1])
    k = 0
    for i in reversed(range(len(ladder) - 1)):
        if n % ladder[i] == 0:
            n //= ladder[i]
            k += 1 << i
    return k


def log_int(n: int) -> float:
    """Natural log of a positive (possibly huge) integer."""
    if n <= 0:
        raise ValueError("log of non-positive integer")
    return math.log(n)


def abs_v(x: RationalLike, v: Place) -> Fraction:
    """|x|_v as an exact rational (valid for every place of Q)."""
    x = to_rational(x)
    if v.is_archimedean:
        return abs(x)
    if x == 0:
        return Fraction(0)
    return Fraction(v.p) ** (-valuation(x, v.p))


def log_abs(x: RationalLike, v: Place) -> float:
    """log|x|_v for nonzero x."""
    x = to_rational(x)
    if x == 0:
        raise ValueError("log|0|_v is -infinity")
    if v.is_archimedean:
        return log_int(abs(x.numerator)) - log_int(x.denominator)
    return -valuation(x, v.p) * math.log(v.p)


def lambda_plus(x: RationalLike, v: Place) -> float:
    """log max{1, |x|_v}."""
    x = to_rational(x)
    if x == 0:
        return 0.0
    if v.is_archimedean:
        if abs(x.numerator) <= x.denominator:
            return 0.0
        return log_int(abs(x.numerator)) - log_int(x.denominator)
    e = -valuation(x, v.p)
    return e * math.log(v.p) if e > 0 else 0.0


def weil_height(x: RationalLike) -> float:
    """h(x) = log max{|num|, den}."""
    x = to_rational(x)
    return log_int(max(abs(x.numerator), x.denominator, 1))


def support(x: RationalLike) -> tuple[Place, ...]:
    """The archimedean place plus every prime dividing num or den."""
    x = to_rational(x)
    primes = sorted(set(prime_factors(x.numerator)) | set(prime_factors(x.denominator)))
    return (ARCH,) + tuple(Place(p) for p in primes)


def abs_product(x: RationalLike, places: Iterable[Place]) -> Fraction:
    """prod_v |x|_v^{n_v} over the given places, exactly."""
    x = to_rational(x)
    out = Fraction(1)
    for v in places:
        out *= abs_v(x, v) ** v.local_degree
    return out


def height_product(x: RationalLike, places: Iterable[Place]) -> Fraction:
    """prod_v max{1, |x|_v}^{n_v}, exactly; its log is sum_v n_v lambda_plus."""
    x = to_rational(x)
    out = Fraction(1)
    for v in places:
        out *= max(Fraction(1), abs_v(x, v)) ** v.local_degree
    return out


def product_formula_defect(x: RationalLike, places: Iterable[Place]) -> float:
    """sum_v n_v log|x|_v over ``places``.

    The sum is formed as the log of an exact product, so it is exactly 0.0
    whenever ``places`` covers the support of ``x``.
    """
    x = to_rational(x)
    if x == 0:
        raise ValueError("product formula needs x != 0")
    prod = abs_product(x, places)
    return log_int(prod.numerator) - log_int(prod.denominator)
