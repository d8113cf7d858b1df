"""Subset selection by the escape/clustering dichotomy.

Given X, either enough iterates f^k(alpha), k in X, lie beyond the escape
radius (take those), or more than d^3 (#X - 3)/(d^3 + 1) of them have
f^(k+3)(alpha) inside the disk; sorting those into at most d^3 classes then
leaves a class of more than (#X - 3)/(d^3 + 1).  Archimedean classes are
the nearest period-3 points (roots of f^3(y) - y); p-adic classes are the
finest ultrametric balls that give at most d^3 classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from ..arith import ARCH, Place, valuation
from ..errors import HeightlabError
from ..heights import green_arch, green_nonarch_exact, is_preperiodic
from ..orbits import ArchOrbit, PadicOrbit
from ..poly import NormalForm, PolyC, coefficient_height_local, compose_power, escape_exponent, exact_escape_exponent, log_escape_radius, normal_form_poly
from ..roots import all_roots, preimages
from .report import LemmaReport, SampleSpec
from .sampling import random_normal_form, random_rational, rng_for


def threshold(size: int, d: int) -> int:
    """ceil((#X - 3) / (d^3 + 1)), never negative."""
    return max(0, -((3 - size) // (d**3 + 1)))


@dataclass
class PigeonholeResult:
    status: str  # "ok", "refused-preperiodic", "refused-undecided"
    Y: list
    threshold: int
    branch: str = ""
    certificate: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.status != "ok" or len(self.Y) >= self.threshold

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "Y": list(self.Y),
            "threshold": self.threshold,
            "branch": self.branch,
            "certificate": self.certificate,
        }


# --- orbit data at one place -----------------------------------------------------------


def _arch_orbit(f, alpha, K: int):
    """mp centers of f^k(alpha), k <= K, recomputed at higher precision until tight."""
    prec = 128 + int(8 * K * math.log2(f.degree))
    for _ in range(5):
        orbit = ArchOrbit(f, alpha, prec)
        pts = [(orbit.center, orbit.radius)]
        for _ in range(K):
            pts.append(orbit.step())
        tight = all(r <= abs(c) * mpmath.mpf(2) ** -40 or r < mpmath.mpf(2) ** -80 for c, r in pts)
        if tight:
            return [c for c, _ in pts], prec, True
        prec *= 2
    return [c for c, _ in pts], prec, False


def _padic_orbit(f, alpha, p: int, K: int):
    """States of f^k(alpha), k <= K, at p.

    A state is (center, m) with m None for exact points, or ("abs", e) once
    the orbit is past the radius where |f(w)| = |a_d| |w|^d and increasing;
    from there only the exponent is tracked.
    """
    d = f.degree
    vd = valuation(f.leading, p)
    start = max(exact_escape_exponent(f, p), Fraction(vd, d - 1))
    orbit = PadicOrbit(f, alpha, p)
    states = [(orbit.center, orbit.m)]
    while len(states) <= K:
        e, exact = orbit.abs_exponent()
        if e is not None and exact and e > start:
            while len(states) <= K:
                e = d * e - vd
                states.append(("abs", e))
            break
        orbit.step()
        states.append((orbit.center, orbit.m))
    return states


def _padic_abs_exp(state, p):
    c, m = state
    if c == "abs":
        return m, True
    if c == 0:
        return (None if m is None else -m), m is None
    e = -valuation(c, p)
    if m is None or -e < m:
        return e, True
    return -m, False


def _padic_diff_val(a, b, p):
    """Lower bound on v(a - b) for two states, exact when the disks allow it."""
    if a[0] == "abs" or b[0] == "abs":
        # the later point is strictly larger than anything before it
        ea, _ = _padic_abs_exp(a, p)
        eb, _ = _padic_abs_exp(b, p)
        return -max(x for x in (ea, eb) if x is not None)
    (ca, ma), (cb, mb) = a, b
    cap = min(x for x in (ma, mb) if x is not None) if (ma is not None or mb is not None) else None
    diff = ca - cb
    if diff == 0:
        return math.inf if cap is None else cap
    v = valuation(diff, p)
    return v if cap is None else min(v, cap)


def _ultrametric_classes(keys, vals, limit):
    """Finest partition of keys into balls {v(x - y) >= r} with at most ``limit`` classes."""
    radii = sorted({vals[a][b] for a in keys for b in keys if a != b}, reverse=True)
    best = [[k] for k in keys] if len(keys) <= limit else None
    for r in radii:
        if best is not None:
            break
        classes = []
        for k in keys:
            for cl in classes:
                if vals[cl[0]][k] >= r:
                    cl.append(k)
                    break
            else:
                classes.append([k])
        if len(classes) <= limit:
            best = classes
    return best if best is not None else [list(keys)]


# --- selection -------------------------------------------------------------------------


def pigeonhole_select(nf: NormalForm, alpha, X, v: Place, *, check_preperiodic: bool = True) -> PigeonholeResult:
    X = sorted(set(int(k) for k in X))
    if any(k < 1 for k in X):
        raise ValueError("X must contain positive integers")
    d = nf.d
    f = normal_form_poly(nf)
    alpha = Fraction(alpha)
    t = threshold(len(X), d)
    if check_preperiodic:
        pp = is_preperiodic(f, alpha)
        if pp is None:
            return PigeonholeResult("refused-undecided", [], t)
        if pp:
            return PigeonholeResult("refused-preperiodic", [], t)
    K = (max(X) if X else 0) + 3
    lam_f = coefficient_height_local(f, v)

    if v.is_archimedean:
        pts, prec, tight = _arch_orbit(f, alpha, K)
        with mpmath.workprec(prec):
            C = mpmath.exp(mpmath.mpf(log_escape_radius(f, ARCH)))
            in_B = [abs(w) > C for w in pts]

            def log_dist(i, j):
                diff = abs(pts[i] - pts[j])
                return float(mpmath.log(diff)) if diff > 0 else -math.inf

        lam_hat = green_arch(f, alpha)[0].lo
    else:
        p = v.p
        states = _padic_orbit(f, alpha, p, K)
        eC = escape_exponent(f, p)
        in_B = []
        for s in states:
            e, exact = _padic_abs_exp(s, p)
            in_B.append(e is not None and exact and e > eC)
        tight = True

        def log_dist(i, j):
            val = _padic_diff_val(states[i], states[j], p)
            return -float(val) * math.log(p) if val != math.inf else -math.inf

        g = green_nonarch_exact(f, alpha, p)
        lam_hat = float(g.lo) * math.log(p)

    escaping = [k for k in X if in_B[k]]
    cert = {"place": str(v), "escaping": len(escaping), "orbit_tight": tight, "lambda_f": lam_f, "lambda_hat_lo": lam_hat}
    if len(escaping) * (d**3 + 1) >= len(X) - 3:
        Y, branch = escaping, "escape"
    else:
        G = [k for k in X if not in_B[k + 3]]
        if v.is_archimedean:
            groups, alt = _group_by_periodic_points(f, pts, G, prec)
            branch = "periodic-grouping"
            cert["alt_largest_group"] = alt
        else:
            vals = {a: {b: _padic_diff_val(states[a], states[b], v.p) for b in G} for a in G}
            groups = _ultrametric_classes(G, vals, d**3) if G else []
            branch = "ultrametric-grouping"
        Y = max(groups, key=lambda g: (len(g), [-k for k in g]), default=[])
        cert["groups"] = len(groups)
        if v.is_archimedean:
            cert["alt_grouping_differs"] = cert["alt_largest_group"] != len(Y)
    Y = sorted(Y)
    pair_values = []
    for a, i in enumerate(Y):
        for j in Y[a + 1:]:
            pair_values.append(lam_f + d * (d - 1) * log_dist(i, j) - d ** (j + 3) * lam_hat)
    finite_vals = [x for x in pair_values if math.isfinite(x)]
    cert["C2_hat"] = max(finite_vals) if finite_vals else None
    cert["pair_values"] = pair_values
    cert["size_bound_holds"] = len(Y) >= t
    return PigeonholeResult("ok", Y, t, branch, cert)


def _group_by_periodic_points(f, pts, G, prec):
    """Group k in G by the nearest root of f^3(y) - y; also report the f^-3(0) grouping."""
    fc = f.to_complex()
    per3 = compose_power(fc, 3) - PolyC([0, 1])
    try:
        beta = all_roots(per3).roots
    except HeightlabError:
        beta = ()
    groups = {}
    for k in G:
        w = complex(pts[k]) if abs(pts[k]) < 1e300 else complex(1e300)
        idx = min(range(len(beta)), key=lambda b: abs(w - beta[b])) if beta else 0
        groups.setdefault(idx, []).append(k)
    try:
        zeros = preimages(fc, 0, 3).roots
    except HeightlabError:
        zeros = ()
    alt = {}
    for k in G:
        w = complex(pts[k]) if abs(pts[k]) < 1e300 else complex(1e300)
        idx = min(range(len(zeros)), key=lambda b: abs(w - zeros[b])) if zeros else 0
        alt.setdefault(idx, []).append(k)
    alt_size = max((len(g) for g in alt.values()), default=0)
    return list(groups.values()), alt_size




def check_pigeonhole(spec: SampleSpec) -> LemmaReport:
    """|Y| >= ceil((#X - 3)/(d^3 + 1)) on seeded instances, the #X = 3 case first.

    Instances whose alpha is preperiodic or undecided are refused by the
    selector; they are recorded and redrawn, and do not count toward the
    sample total.
    """
    rng = rng_for(spec.rng_seed, "pigeonhole")
    places = spec.place_objects
    instances = [(NormalForm(2, (Fraction(0),)), Fraction(3), [1, 2, 3], ARCH)]
    details, refused = [], 0
    attempts = 0
    while len(details) < spec.samples and attempts < 10 * spec.samples:
        if instances:
            nf, alpha, X, v = instances.pop()
        else:
            d = rng.choice(spec.degrees)
            nf = random_normal_form(rng, d, spec.coefficient_height_bound)
            alpha = random_rational(rng, spec.alpha_height_bound)
            top = rng.randint(3, 21 if d == 2 else 12)
            X = sorted(rng.sample(range(1, top + 1), rng.randint(1, top)))
            v = rng.choice(places)
        attempts += 1
        res = pigeonhole_select(nf, alpha, X, v)
        if res.status != "ok":
            refused += 1
            continue
        cert = res.certificate
        details.append({"index": len(details), "nf": str(nf), "alpha": str(alpha), "X": X, "place": str(v),
                        "branch": res.branch, "Y": res.Y, "threshold": res.threshold,
                        "size_bound_holds": len(res.Y) >= res.threshold, "C2_hat": cert["C2_hat"],
                        "alt_grouping_differs": cert.get("alt_grouping_differs")})
    ok = all(r["size_bound_holds"] for r in details)
    c2 = [r["C2_hat"] for r in details if r["C2_hat"] is not None]
    fitted = {"C2_hat": max(c2) if c2 else None,
              "escape_branch": sum(r["branch"] == "escape" for r in details),
              "alt_grouping_differs": sum(bool(r["alt_grouping_differs"]) for r in details)}
    notes = [] if len(details) >= spec.samples else [f"only {len(details)} instances after {attempts} draws"]
    passed = ok and len(details) >= spec.samples
    return LemmaReport("pigeonhole", len(details), fitted["C2_hat"], fitted, passed, details, refused, notes,
                       spec.to_json())


__all__ = ["PigeonholeResult", "check_pigeonhole", "pigeonhole_select", "threshold"]
