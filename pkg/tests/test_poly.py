import cmath
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from heightlab.arith import ARCH, Place, prime_factors, valuation
from heightlab.errors import ParseError, ResourceError
from heightlab.poly import (
    AffineMap,
    NormalForm,
    PolyC,
    PolyQ,
    bad_places,
    coefficient_height_global,
    coefficient_height_local,
    compose_power,
    conjugate_to_normal_form,
    derivative,
    escape_radius,
    evaluate,
    format_normal_form,
    in_escape_region,
    iterate,
    log_escape_radius,
    normal_form_poly,
    parse_normal_form,
    parse_poly,
)
from conftest import rationals

F = Fraction
Z2 = PolyQ([0, 0, 1])
HALF_Z2 = PolyQ([0, 0, F(1, 2)])


def test_evaluate_examples():
    assert evaluate(HALF_Z2, 4) == 8
    assert evaluate(PolyQ([-1, 0, 1]), 0) == -1
    assert evaluate(Z2, F(3, 2)) == F(9, 4)


def test_iterate_examples():
    assert iterate(HALF_Z2, 4, 3) == [4, 8, 32, 512]
    assert iterate(PolyQ([-1, 0, 1]), 0, 2) == [0, -1, 0]
    assert iterate(PolyQ([F(1, 3), 5, 7]), F(2, 9), 0) == [F(2, 9)]


def test_iterate_bit_cap():
    with pytest.raises(ResourceError):
        iterate(Z2, 3, 40, bit_cap=1000)


def test_compose_power_examples():
    assert compose_power(Z2, 3) == PolyQ([0] * 8 + [1])
    assert compose_power(HALF_Z2, 2) == PolyQ([0, 0, 0, 0, F(1, 8)])
    assert compose_power(normal_form_poly(NormalForm(2, (F(1),))), 1) == PolyQ([0, -1, F(1, 2)])
    with pytest.raises(ResourceError):
        compose_power(Z2, 9)


def test_derivative_examples():
    assert derivative(PolyQ([0, -1, F(1, 2)])) == PolyQ([-1, 1])
    assert derivative(PolyQ([0, 0, 0, F(1, 3)])) == PolyQ([0, 0, 1])
    assert derivative(PolyQ([5])) == PolyQ([0])


def test_normal_form_examples():
    assert normal_form_poly(NormalForm(2, (F(0),))) == HALF_Z2
    assert normal_form_poly(NormalForm(2, (F(1),))) == PolyQ([0, -1, F(1, 2)])
    assert normal_form_poly(NormalForm(3, (F(1), F(-1)))) == PolyQ([0, -1, 0, F(1, 3)])


def test_normal_form_text_round_trip():
    nf = parse_normal_form("3; 1/2, -4")
    assert nf == NormalForm(3, (F(1, 2), F(-4)))
    assert parse_normal_form(format_normal_form(nf)) == nf
    with pytest.raises(ParseError):
        parse_normal_form("x; 1")
    with pytest.raises(ParseError):
        parse_normal_form("3; 1")


def test_parse_poly():
    assert parse_poly("1/2, 0, -3") == PolyQ([F(1, 2), 0, -3])
    with pytest.raises(ParseError) as err:
        parse_poly("1,zz,3")
    assert err.value.position == 1
    with pytest.raises(ParseError):
        parse_poly("4")


def test_bad_places_examples():
    assert bad_places(PolyQ([1, 0, 1])) == frozenset()
    assert bad_places(HALF_Z2) == {Place(2)}
    assert bad_places(PolyQ([F(1, 5), 0, 3])) == {Place(3), Place(5)}


def test_escape_radius_examples():
    assert escape_radius(Z2, ARCH) == pytest.approx(4)
    assert escape_radius(HALF_Z2, ARCH) == pytest.approx(8)
    assert escape_radius(HALF_Z2, Place(2)) == pytest.approx(0.25)


def test_in_escape_region_examples():
    assert in_escape_region(Z2, 5, ARCH)
    assert not in_escape_region(Z2, 4, ARCH)
    assert not in_escape_region(HALF_Z2, 4, Place(2))


def test_coefficient_heights():
    assert coefficient_height_local(HALF_Z2, Place(2)) == pytest.approx(math.log(2))
    assert coefficient_height_local(PolyQ([8, 0, 1]), ARCH) == pytest.approx(math.log(8))
    assert coefficient_height_local(PolyQ([1, 0, 1]), Place(3)) == 0
    assert coefficient_height_global(Z2) == 0
    assert coefficient_height_global(HALF_Z2) == pytest.approx(math.log(2))
    assert coefficient_height_global(PolyQ([0, -3, F(1, 2)])) == pytest.approx(math.log(3) + math.log(2))


def test_conjugate_2z2():
    conj = conjugate_to_normal_form(PolyQ([0, 0, 2]))
    assert conj.exact == NormalForm(2, (F(0),))
    assert conj.exact_mu == AffineMap(F(1, 4), F(0))
    assert conj.exact_mu.conjugate(PolyQ([0, 0, 2])) == HALF_Z2


def test_conjugate_already_normal():
    f = PolyQ([0, -1, F(1, 2)])
    conj = conjugate_to_normal_form(f)
    assert conj.exact is not None
    # a translate between the fixed points 0 and 4; c is recovered up to that relabeling
    g = conj.exact_mu.conjugate(f)
    assert g == normal_form_poly(conj.exact)
    assert conj.exact_mu.scale == 1


def test_conjugate_z2_plus_z():
    phi = PolyQ([0, 1, 1])
    conj = conjugate_to_normal_form(phi)
    assert conj.exact_mu == AffineMap(F(1, 2), F(0))
    # mu^-1 phi mu = 2((z/2)^2 + z/2) = z^2/2 + z, whose derivative z + 1 has root -1
    assert conj.exact == NormalForm(2, (F(-1),))
    assert conj.exact_mu.conjugate(phi) == PolyQ([0, 1, F(1, 2)])


def test_conjugate_numeric_branch():
    phi = PolyQ([1, 0, 3])  # fixed points irrational
    conj = conjugate_to_normal_form(phi)
    assert conj.exact is None
    f = normal_form_poly(conj.nf)
    mu = conj.mu
    for z in (0.3 + 0.1j, -1.2, 2j):
        lhs = (phi.to_complex()(mu(z)) - mu.shift) / mu.scale
        assert abs(lhs - f(z)) < 1e-8 * (1 + abs(z) ** 2)


nf_params = st.integers(2, 4).flatmap(
    lambda d: st.tuples(st.just(d), st.lists(rationals(50), min_size=d - 1, max_size=d - 1)))


@given(nf_params)
def test_normal_form_characterization(params):
    d, c = params
    f = normal_form_poly(NormalForm(d, tuple(c)))
    crit = PolyQ([1])
    for ci in c:
        crit = crit * PolyQ([-ci, 1])
    assert derivative(f) == crit
    assert f(0) == 0


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=2), st.integers(2, 3))
def test_integral_normal_form_bad_at_primes_dividing_d(c, d):
    c = (c * d)[: d - 1]
    f = normal_form_poly(NormalForm(d, tuple(F(x) for x in c)))
    assert {Place(p) for p in prime_factors(d)} <= bad_places(f)


@given(st.lists(rationals(20), min_size=3, max_size=4).filter(lambda c: c[-1] != 0), st.integers(1, 3), rationals(20))
def test_compose_power_matches_iteration(coeffs, k, z):
    phi = PolyQ(coeffs)
    assert compose_power(phi, k)(z) == iterate(phi, z, k)[-1]


@given(st.lists(rationals(30), min_size=3, max_size=4).filter(lambda c: c[-1] != 0),
       st.sampled_from([ARCH, Place(2), Place(3)]))
def test_escape_radius_at_least_two_d(coeffs, v):
    phi = PolyQ(coeffs)
    d = phi.degree
    two_d = math.log(2 * d) if v.is_archimedean else -valuation(2 * d, v.p) * math.log(v.p)
    assert log_escape_radius(phi, v) >= two_d - 1e-12


@given(st.lists(rationals(8), min_size=3, max_size=4).filter(lambda c: c[-1] != 0))
def test_numeric_conjugation_identity(coeffs):
    phi = PolyQ(coeffs)
    conj = conjugate_to_normal_form(phi)
    f = normal_form_poly(conj.nf)
    if conj.exact_mu is not None:
        g = conj.exact_mu.conjugate(phi)
        assert g(0) == 0 and g.derivative().leading == 1
        # a rational mu can still give irrational critical points (z + z^3/3: c = +-i)
        if conj.exact is not None:
            assert g == normal_form_poly(conj.exact)
    mu = conj.mu
    d = phi.degree
    for z in (0.5, -0.25 + 0.75j, 1.5j):
        lhs = (PolyC(phi.coeffs)(mu(z)) - mu.shift) / mu.scale
        assert abs(lhs - f(z)) < 1e-8 * (1 + abs(z) ** d) * max(1.0, max(abs(a) for a in f.coeffs))


def test_root_ordering_tolerates_subnormal_imaginary_part():
    from heightlab.poly import _order_key

    assert _order_key(complex(3.17, -5e-324)) == (3.17, 0.0)


def test_rational_map_with_irrational_critical_points():
    conj = conjugate_to_normal_form(PolyQ([0, 1, 0, Fraction(1, 3)]))
    assert conj.exact is None and conj.exact_mu is not None
    assert sorted(abs(c.imag) for c in conj.nf.c) == pytest.approx([1, 1])
