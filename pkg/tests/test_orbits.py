from fractions import Fraction

import mpmath
from hypothesis import given, strategies as st

from heightlab.arith import valuation
from heightlab.poly import PolyQ, iterate
from heightlab.orbits import ArchOrbit, PadicOrbit, reduce_center
from conftest import rationals

polys = st.lists(rationals(12), min_size=3, max_size=4).filter(lambda c: c[-1] != 0).map(PolyQ)


@given(polys, rationals(12), st.sampled_from([64, 128]))
def test_ball_contains_exact_orbit(phi, z, prec):
    exact = iterate(phi, z, 6, bit_cap=10**7)
    orbit = ArchOrbit(phi, z, prec)
    for w in exact[1:]:
        c, r = orbit.step()
        with mpmath.workprec(4 * prec + 4096):
            assert abs(mpmath.mpf(w.numerator) / w.denominator - c) <= r


@given(rationals(10**9), st.sampled_from([2, 3, 5]), st.integers(1, 40))
def test_reduce_center_is_close(x, p, m):
    b = reduce_center(x, p, m)
    assert x == b or valuation(x - b, p) >= m


@given(polys, rationals(12), st.sampled_from([2, 3, 5]))
def test_padic_disks_contain_exact_orbit(phi, z, p):
    orbit = PadicOrbit(phi, z, p, switch_bits=64, digits=12)
    exact = iterate(phi, z, 5, bit_cap=10**7)
    for w in exact[1:]:
        orbit.step()
        if orbit.m is None:
            assert orbit.center == w
        else:
            assert w == orbit.center or valuation(w - orbit.center, p) >= orbit.m
