import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from heightlab.arith import ARCH, Place, lambda_plus
from heightlab.heights import (
    BoundedValue,
    OrbitRecord,
    Status,
    canonical_height_local_method,
    canonical_height_naive_method,
    critical_escape,
    green,
    green_arch,
    green_nonarch,
    green_nonarch_exact,
    is_preperiodic,
    naive_defect_bound,
)
from heightlab.poly import AffineMap, NormalForm, PolyQ, bad_places, iterate
from conftest import rationals

F = Fraction
LOG2 = math.log(2)
Z2 = PolyQ([0, 0, 1])
HALF_Z2 = PolyQ([0, 0, F(1, 2)])
CHEB = PolyQ([-1, 0, 1])


def _mp_green(phi, z, n=40):
    """Plain high-precision iteration, d^-n (log|phi^n(z)| + A) once huge; no enclosure arithmetic."""
    with mpmath.workdps(60):
        A = mpmath.log(abs(mpmath.mpf(phi.leading.numerator) / phi.leading.denominator)) / (phi.degree - 1)
        w = mpmath.mpf(z.numerator) / z.denominator
        cs = [mpmath.mpf(c.numerator) / c.denominator for c in phi.coeffs]
        for k in range(n):
            w = mpmath.polyval(cs[::-1], w)
            if abs(w) > mpmath.mpf(10) ** 10**6:
                return float((mpmath.log(abs(w)) + A) / phi.degree ** (k + 1)), k + 1
        return float(max(mpmath.log(abs(w)), 0) / phi.degree**n), n


# --- BoundedValue / OrbitRecord ---------------------------------------------------------


def test_bounded_value_rejects_bad_radius():
    with pytest.raises(ValueError):
        BoundedValue(1.0, -1e-3)
    with pytest.raises(ValueError):
        BoundedValue(1.0, math.inf)


@given(st.floats(-1e6, 1e6), st.floats(0, 1e3), st.floats(-1e6, 1e6), st.floats(0, 1e3), st.floats(-50, 50))
def test_bounded_value_arithmetic_is_conservative(a, ea, b, eb, s):
    x, y = BoundedValue(a, ea), BoundedValue(b, eb)
    t = x + y
    assert t.error >= ea + eb
    for u in (x.lo, x.hi):
        for v in (y.lo, y.hi):
            assert t.lo <= u + v + 1e-9 * (1 + abs(u + v)) and u + v - 1e-9 * (1 + abs(u + v)) <= t.hi
    sc = x.scale(s)
    assert sc.error >= abs(s) * ea


@given(st.floats(-1e6, 1e6), st.floats(0, 1e6))
def test_from_interval_contains_endpoints(lo, width):
    hi = lo + width
    b = BoundedValue.from_interval(lo, hi)
    assert b.contains(lo) and b.contains(hi)


def test_orbit_record_invariant():
    OrbitRecord(F(1), ARCH, 3, 3, Status.ESCAPED)
    with pytest.raises(ValueError):
        OrbitRecord(F(1), ARCH, None, 3, Status.ESCAPED)
    with pytest.raises(ValueError):
        OrbitRecord(F(1), ARCH, 2, 3, Status.BOUNDED)
    assert OrbitRecord(F(1, 2), Place(2), None, 4, Status.UNDECIDED).to_json() == {
        "point": "1/2", "place": "2", "escape_index": None, "iterations_used": 4, "status": "undecided"}


# --- Green's functions ----------------------------------------------------------------


def test_green_arch_examples():
    g, rec = green_arch(Z2, 3)
    assert g.contains(math.log(3)) and g.error < 1e-11
    assert rec.status is Status.ESCAPED
    g, _ = green_arch(HALF_Z2, 4)
    assert g.contains(LOG2) and g.error < 1e-11
    g, rec = green_arch(CHEB, 0)
    assert g.value == 0 and g.error == 0 and rec.status is Status.BOUNDED


def test_green_arch_undecided_is_honest():
    # z^2 - 2 keeps [-2, 2] invariant, so G(3/2) = 0, but no exact cycle is visible
    g, rec = green_arch(PolyQ([-2, 0, 1]), F(3, 2), max_iter=6)
    assert rec.status is Status.UNDECIDED and rec.escape_index is None
    assert g.contains(0.0) and g.error > 0


def test_green_arch_complex_input():
    g, _ = green_arch(Z2, 3j)
    assert g.contains(math.log(3))


def test_green_nonarch_examples():
    g, rec = green_nonarch(HALF_Z2, 4, 2, 10)
    assert g.contains(0.0) and g.error <= 2.0**-10
    g = green_nonarch_exact(HALF_Z2, F(1, 2), 2, 5)
    assert g.is_exact and g.lo == 2  # 2 log 2, stored as a multiple of log 2
    assert green_nonarch(HALF_Z2, F(1, 2), 2, 5)[0].contains(2 * LOG2)
    for z in (0, 5, -7):
        assert green_nonarch(PolyQ([1, 0, 1]), z, 3, 1)[0] == BoundedValue(0.0, 0.0)


def test_critical_escape_examples():
    assert critical_escape(NormalForm(2, (F(0),)), ARCH).value == 0
    M = critical_escape(NormalForm(2, (F(4),)), ARCH)
    ref, _ = _mp_green(PolyQ([0, -4, F(1, 2)]), F(4))
    assert M.lo > 0 and abs(M.value - ref) <= M.error + 1e-9
    M3 = critical_escape(NormalForm(3, (F(0), F(0))), ARCH)
    assert M3.value == 0 and M3.error == 0


polys = st.lists(rationals(8), min_size=3, max_size=4).filter(lambda c: c[-1] != 0).map(PolyQ)


@given(polys, rationals(8))
def test_green_arch_matches_plain_iteration(phi, z):
    g, rec = green_arch(phi, z)
    if rec.status is not Status.ESCAPED:
        return
    ref, n = _mp_green(phi, z)
    if n == 40:
        return
    # at |w| > 10^(10^6) the escape estimate leaves an error of at most d^-n log 2
    tail = LOG2 / phi.degree**n
    assert abs(g.value - ref) <= g.error + tail


@given(polys, rationals(8), st.sampled_from([2, 3, 5]))
def test_green_nonarch_matches_exact_iterates(phi, z, p):
    g = green_nonarch(phi, z, p)[0]
    orbit = iterate(phi, z, 6, bit_cap=10**7)
    approx = lambda_plus(orbit[-1], Place(p)) / phi.degree**6
    d = phi.degree
    A = abs(math.log(abs(float(phi.leading))))
    # K_p <= |log R| + |A|; R is bounded by the coefficient ratios
    K = A + max(abs(math.log(abs(float(a / phi.leading)))) for a in phi.coeffs if a != 0) + 10 * math.log(p)
    assert abs(g.value - approx) <= g.error + K / d**6


@given(polys, rationals(8), st.sampled_from([ARCH, Place(2), Place(3)]))
def test_transformation_rule(phi, z, v):
    g1, _ = green(phi, phi(z), v)
    g0, _ = green(phi, z, v)
    assert g1.intersects(g0.scale(phi.degree))


@given(polys, rationals(8), st.sampled_from([2, 3, 5, 7]))
def test_good_reduction_local_height(phi, z, p):
    if Place(p) in bad_places(phi):
        return
    g = green_nonarch_exact(phi, z, p)
    assert g.is_exact and g.lo * math.log(p) == pytest.approx(lambda_plus(z, Place(p)), abs=1e-12)


# --- canonical heights ----------------------------------------------------------------


def test_local_method_examples():
    for phi, a in ((Z2, 2), (HALF_Z2, 4)):
        h = canonical_height_local_method(phi, a)
        assert h.contains(LOG2) and h.error <= 1e-9
    assert canonical_height_local_method(CHEB, 0).contains(0.0)


def test_naive_method_examples():
    h = canonical_height_naive_method(Z2, 2, 5)
    assert h.value == pytest.approx(LOG2, abs=1e-15)
    assert h.error == pytest.approx(naive_defect_bound(Z2) / 32, rel=1e-9)
    h = canonical_height_naive_method(HALF_Z2, 4, 6)
    assert h.value == pytest.approx(65 / 64 * LOG2, abs=1e-15)
    assert h.contains(LOG2)
    assert canonical_height_naive_method(CHEB, 0, 4).value == 0
    with pytest.raises(ValueError):
        canonical_height_naive_method(Z2, 2, 0)


def test_naive_method_at_depth_40():
    for phi, a in ((Z2, 2), (HALF_Z2, 4)):
        h = canonical_height_naive_method(phi, a, 40)
        assert h.contains(LOG2) and h.error <= 1e-9


def test_is_preperiodic_examples():
    assert is_preperiodic(CHEB, 0) is True
    assert is_preperiodic(Z2, 2) is False
    assert is_preperiodic(Z2, 1) is True


@given(polys, rationals(8))
def test_methods_agree(phi, a):
    loc = canonical_height_local_method(phi, a)
    nai = canonical_height_naive_method(phi, a, 30)
    assert loc.intersects(nai)
    assert loc.hi >= 0 and nai.hi >= 0


@given(polys, rationals(8))
def test_homogeneity(phi, a):
    h0 = canonical_height_local_method(phi, a)
    h1 = canonical_height_local_method(phi, phi(a))
    assert h1.intersects(h0.scale(phi.degree))


@given(polys, rationals(8), rationals(6, nonzero=True), rationals(6))
def test_conjugation_invariance(phi, a, s, t):
    mu = AffineMap(s, t)
    psi = mu.conjugate(phi)
    h_phi = canonical_height_local_method(phi, a)
    h_psi = canonical_height_local_method(psi, mu.inverse()(a))
    assert h_phi.intersects(h_psi)


def test_preperiodic_points_have_zero_height():
    rng = random.Random(5)
    for _ in range(20):
        g = F(rng.randint(-6, 6), rng.randint(1, 6))
        q = PolyQ([F(rng.randint(-5, 5), rng.randint(1, 5)), F(rng.randint(1, 5), rng.randint(1, 5))])
        phi = PolyQ([-g, 1]) * q + PolyQ([g])  # g is fixed
        assert is_preperiodic(phi, g) is True
        assert canonical_height_local_method(phi, g).contains(0.0)
