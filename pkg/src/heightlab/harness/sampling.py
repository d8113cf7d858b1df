"""Seeded samplers for rationals, polynomials and normal forms."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from ..arith import ARCH, valuation
from ..poly import NormalForm, PolyQ, escape_exponent, escape_radius


def rng_for(seed: int, stream: str) -> random.Random:
    """Independent deterministic stream per (seed, purpose)."""
    return random.Random(f"{seed}:{stream}")


def random_rational(rng: random.Random, bound: int, *, nonzero: bool = False) -> Fraction:
    """Uniform numerator in [-bound, bound] over denominator in [1, bound]."""
    while True:
        x = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
        if x != 0 or not nonzero:
            return x


def random_poly(rng: random.Random, d: int, bound: int) -> PolyQ:
    coeffs = [random_rational(rng, bound) for _ in range(d)]
    coeffs.append(random_rational(rng, bound, nonzero=True))
    return PolyQ(coeffs)


def random_poly_with_exact_conjugation(rng: random.Random, d: int, bound: int) -> PolyQ:
    """phi = (z - gamma) q(z) + gamma with (d a_d)^(1/(d-1)) rational.

    gamma is a rational fixed point, so the normal-form conjugation of phi
    is defined over the rationals.
    """
    gamma = random_rational(rng, bound)
    s = random_rational(rng, bound, nonzero=True)
    lead = s ** (d - 1) / d
    q = PolyQ([random_rational(rng, bound) for _ in range(d - 1)] + [lead])
    return (PolyQ([-gamma, 1]) * q) + PolyQ([gamma])


def random_normal_form(rng: random.Random, d: int, bound: int) -> NormalForm:
    return NormalForm(d, tuple(random_rational(rng, bound) for _ in range(d - 1)))


def random_unit(rng: random.Random, p: int, bound: int) -> Fraction:
    """A rational of height <= bound that is a p-adic unit."""
    while True:
        x = random_rational(rng, bound, nonzero=True)
        if valuation(x, p) == 0:
            return x


def escaping_point(rng: random.Random, phi: PolyQ, v, bound: int) -> Fraction:
    """A rational z with |z|_v > C_{phi,v}, or just outside for the archimedean case."""
    if v.is_archimedean:
        C = escape_radius(phi, ARCH)
        den = rng.randint(1, 4)
        num = math.floor(C * rng.uniform(1.0, 3.0) * den) + 1
        return Fraction(rng.choice((-1, 1)) * num, den)
    e = math.floor(escape_exponent(phi, v.p)) + 1 + rng.randint(0, 2)
    return Fraction(v.p) ** (-e) * random_unit(rng, v.p, bound)


def padic_point_beyond(rng: random.Random, phi: PolyQ, p: int, exponent, bound: int) -> Fraction:
    """A rational with |z|_p = p^e for some integer e > exponent."""
    e = math.floor(exponent) + 1 + rng.randint(0, 2)
    return Fraction(p) ** (-e) * random_unit(rng, p, bound)


__all__ = [
    "escaping_point",
    "padic_point_beyond",
    "random_normal_form",
    "random_poly",
    "random_poly_with_exact_conjugation",
    "random_rational",
    "random_unit",
    "rng_for",
]
