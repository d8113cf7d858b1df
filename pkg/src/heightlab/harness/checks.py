"""Checks of the explicit inequalities, one LemmaReport each.

A check never raises on a failed inequality; the failure is report content.
Pass/fail is computed from the recorded per-sample observations only.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction

from ..arith import ARCH, Place, format_rational, log_abs, prime_factors, valuation
from ..heights import (
    LOG2,
    LOG3_2,
    canonical_height_local_method,
    green_arch,
    green_nonarch_exact,
    padic_threshold_exponent,
)
from ..poly import (
    AffineMap,
    PolyQ,
    bad_places,
    coefficient_height_local,
    conjugate_to_normal_form,
    escape_exponent,
    format_poly,
    in_escape_region,
    iterate,
    log_escape_radius,
    normal_form_poly,
)
from ..errors import HeightlabError
from .report import LemmaReport, SampleSpec, fit_line
from .sampling import (
    escaping_point,
    padic_point_beyond,
    random_normal_form,
    random_poly,
    random_poly_with_exact_conjugation,
    random_rational,
    rng_for,
)

_FLOAT_SLACK = 1e-13


def _exp_str(q: Fraction, p: int) -> str:
    return f"{format_rational(q)}*log({p})"


def _arch_A(phi) -> float:
    return math.log(abs(float(phi.leading))) / (phi.degree - 1)


def _padic_A(phi: PolyQ, p: int) -> Fraction:
    return Fraction(-valuation(phi.leading, p), phi.degree - 1)


def _green_v(phi, z, v: Place, spec: SampleSpec):
    """(lo, hi) for G_v(z), exact Fractions of log p at finite places."""
    if v.is_archimedean:
        g, _ = green_arch(phi, z, spec.target_error, max_iter=spec.arch_max_iter, prec=spec.precision)
        return g
    return green_nonarch_exact(phi, z, v.p, spec.padic_max_iter)


# --- escape estimate ------------------------------------------------------------------


def epsilon_sample(phi: PolyQ, z: Fraction, v: Place, spec: SampleSpec) -> dict:
    """One escape-estimate observation; ``skipped`` is set when |z|_v <= C."""
    row = {"d": phi.degree, "phi": format_poly(phi), "place": str(v), "z": format_rational(z)}
    if not in_escape_region(phi, z, v):
        row["skipped"] = "not beyond the escape radius"
        return row
    if v.is_archimedean:
        g, rec = green_arch(phi, z, spec.target_error, max_iter=spec.arch_max_iter, prec=spec.precision)
        L = log_abs(z, ARCH)
        A = _arch_A(phi)
        eps = g.value - L - A
        err = g.error + _FLOAT_SLACK * (1 + abs(L) + abs(A))
        ok = eps - err <= LOG3_2 and eps + err >= -LOG2
        row.update(eps=eps, eps_error=err, complies=ok, iterations=rec.iterations_used)
        return row
    p = v.p
    g = green_nonarch_exact(phi, z, p, spec.padic_max_iter)
    base = -valuation(z, p) + _padic_A(phi, p)
    row.update(
        eps_lo=_exp_str(g.lo - base, p),
        eps_hi=_exp_str(g.hi - base, p),
        eps=float(g.lo - base) * math.log(p) if g.is_exact else None,
        complies=g.is_exact and g.lo == base,
        p_divides_2d=(2 * phi.degree) % p == 0,
        status=g.record.status.value,
    )
    return row


def check_epsilon_bounds(spec: SampleSpec) -> LemmaReport:
    """eps = G(z) - log|z| - log|a_d|/(d-1) for z beyond the escape radius.

    Archimedean: the eps enclosure must meet [-log 2, log 3/2].  Finite
    places: eps must be exactly 0.  With ``padic_radius="coefficient"`` the finite
    samples are drawn just beyond C; with ``"exact"`` beyond max(C, R).
    """
    rng = rng_for(spec.rng_seed, "eps")
    places = spec.place_objects
    H = spec.coefficient_height_bound
    details, skipped = [], 0
    arch_eps = []
    finite_bad = defaultdict(int)
    finite_count = 0
    max_defect = 0.0
    for i in range(spec.samples):
        d = rng.choice(spec.degrees)
        phi = random_poly(rng, d, H)
        v = rng.choice(places)
        if v.is_archimedean:
            z = escaping_point(rng, phi, v, H)
        else:
            radius = escape_exponent if spec.padic_radius == "coefficient" else padic_threshold_exponent
            z = padic_point_beyond(rng, phi, v.p, radius(phi, v.p), H)
        row = {"index": i, **epsilon_sample(phi, z, v, spec)}
        details.append(row)
        if "skipped" in row:
            skipped += 1
            continue
        if v.is_archimedean:
            arch_eps.append(row["eps"])
            max_defect = max(max_defect, abs(row["eps"]))
        else:
            finite_count += 1
            if row["eps"] is not None:
                max_defect = max(max_defect, abs(row["eps"]))
            if not row["complies"]:
                finite_bad[v.p] += 1
    arch_ok = all(r.get("complies", True) for r in details if r["place"] == "inf")
    finite_ok = not finite_bad
    fitted = {
        "arch_eps_min": min(arch_eps) if arch_eps else 0.0,
        "arch_eps_max": max(arch_eps) if arch_eps else 0.0,
        "arch_samples": len(arch_eps),
        "finite_samples": finite_count,
        "finite_nonzero": sum(finite_bad.values()),
    }
    notes = []
    if finite_bad:
        by_p = ", ".join(f"p={p}: {n}" for p, n in sorted(finite_bad.items()))
        only_2d = all(r["p_divides_2d"] for r in details if r.get("complies") is False and "p_divides_2d" in r)
        notes.append(f"nonzero finite eps ({by_p}); all at primes dividing 2d: {only_2d}")
    return LemmaReport("eps-bounds", spec.samples - skipped, max_defect, fitted, arch_ok and finite_ok,
                       details, skipped, notes, spec.to_json())


# --- transformation rule ------------------------------------------------------------


def transformation_sample(phi: PolyQ, z: Fraction, v: Place, spec: SampleSpec) -> dict:
    """G(phi(z)) against d G(z) at one place."""
    d = phi.degree
    row = {"d": d, "phi": format_poly(phi), "z": format_rational(z), "place": str(v)}
    g0 = _green_v(phi, z, v, spec)
    g1 = _green_v(phi, phi(z), v, spec)
    if v.is_archimedean:
        dg = g0.scale(d)
        ok = g1.intersects(dg)
        defect = abs(g1.value - dg.value)
        row.update(lhs=g1.value, lhs_error=g1.error, rhs=dg.value, rhs_error=dg.error)
    else:
        lo, hi = max(g1.lo, d * g0.lo), min(g1.hi, d * g0.hi)
        ok = lo <= hi
        defect = 0.0 if ok else float(lo - hi) * math.log(v.p)
        row.update(lhs=_exp_str(g1.lo, v.p) if g1.is_exact else [_exp_str(g1.lo, v.p), _exp_str(g1.hi, v.p)],
                   rhs=_exp_str(d * g0.lo, v.p) if g0.is_exact else [_exp_str(d * g0.lo, v.p), _exp_str(d * g0.hi, v.p)])
    row.update(complies=ok, defect=defect)
    return row


def check_transformation_rule(spec: SampleSpec) -> LemmaReport:
    """G(phi(z)) against d G(z): the enclosures must meet."""
    rng = rng_for(spec.rng_seed, "transform")
    places = spec.place_objects
    details = []
    for i in range(spec.samples):
        d = rng.choice(spec.degrees)
        phi = random_poly(rng, d, spec.coefficient_height_bound)
        z = random_rational(rng, spec.alpha_height_bound)
        v = rng.choice(places)
        details.append({"index": i, **transformation_sample(phi, z, v, spec)})
    passed = all(r["complies"] for r in details)
    max_defect = max((r["defect"] for r in details), default=0.0)
    return LemmaReport("transformation-rule", len(details), max_defect, {}, passed, details, 0, [], spec.to_json())


# --- constants tied to the critical escape rate ------------------------------------------


def _critical_escape_bounds(nf, v: Place, spec: SampleSpec):
    """(lo, hi) of M_v(f_c) as floats; exact Fractions of log p for finite v."""
    f = normal_form_poly(nf)
    if v.is_archimedean:
        gs = [green_arch(f, c, spec.target_error, max_iter=spec.arch_max_iter, prec=spec.precision)[0] for c in nf.c]
        return max(g.lo for g in gs), max(g.hi for g in gs)
    gs = [green_nonarch_exact(f, c, v.p, spec.padic_max_iter) for c in nf.c]
    return max(g.lo for g in gs), max(g.hi for g in gs)


def _normal_form_sweep(spec: SampleSpec, stream: str):
    """Yield (scale, nf, f) with nf drawn at each coefficient-height scale."""
    rng = rng_for(spec.rng_seed, stream)
    per_scale = max(1, spec.samples // max(1, len(spec.height_scales)))
    for H in spec.height_scales:
        for _ in range(per_scale):
            d = rng.choice(spec.degrees)
            nf = random_normal_form(rng, d, H)
            yield H, nf, normal_form_poly(nf)


def _defect_trend(table, spec: SampleSpec, prefix: str):
    """Per (place, d): the largest defect, per-scale maxima, and the trend verdict.

    The defect may not trend upward as the coefficient height lambda_v(f)
    grows: the least-squares slope of defect against lambda_v(f), over the
    samples in the upper half of the observed lambda range, must stay below
    the slope tolerance.  A bounded defect can rise at small heights (inside
    the connectedness locus) before leveling off; only the large-height
    regime says anything about boundedness.
    """
    fitted, ok = {}, True
    for (v, d), rows in sorted(table.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
        ys = [y for _, _, y in rows]
        fitted[f"{prefix}_{v}_d{d}"] = max(ys)
        for H in sorted({h for h, _, _ in rows}):
            fitted[f"{prefix}_{v}_d{d}_H{H}"] = max(y for h, _, y in rows if h == H)
        positive = sorted(x for _, x, _ in rows if x > 0)
        cut = positive[len(positive) // 2] if positive else math.inf
        upper = [(x, y) for _, x, y in rows if x >= cut]
        xs = [x for x, _ in upper]
        slope = fit_line(xs, [y for _, y in upper])[0] if len(set(xs)) > 1 else 0.0
        fitted[f"{prefix}_slope_{v}_d{d}"] = slope
        ok = ok and slope <= spec.slope_tolerance
    return fitted, ok


def check_escape_radius_vs_M(spec: SampleSpec) -> LemmaReport:
    """xi_v = log C_{f_c,v} - M_v(f_c) stays bounded as the parameters grow.

    Archimedean places: the per-scale maximum may not trend upward.  Finite
    places: xi must vanish at every sampled prime p > 2d.
    """
    details = []
    table = defaultdict(list)
    nonzero_finite = set()
    for k, (H, nf, f) in enumerate(_normal_form_sweep(spec, "xi")):
        d = nf.d
        for v in spec.place_objects:
            lo, hi = _critical_escape_bounds(nf, v, spec)
            if v.is_archimedean:
                xi = log_escape_radius(f, v) - hi
                table[(v, d)].append((H, coefficient_height_local(f, v), xi))
                details.append({"index": k, "scale": H, "nf": str(nf), "place": str(v), "log_C": log_escape_radius(f, v),
                                "M_hi": float(hi), "xi": xi})
            else:
                xi_exp = escape_exponent(f, v.p) - hi
                if xi_exp > 0:
                    nonzero_finite.add((v.p, d))
                details.append({"index": k, "scale": H, "nf": str(nf), "place": str(v),
                                "xi": float(xi_exp) * math.log(v.p), "xi_exact": _exp_str(xi_exp, v.p)})
    fitted, ok = _defect_trend(table, spec, "xi")
    outside = sorted((p, d) for p, d in nonzero_finite if p > 2 * d)
    fitted["finite_primes_with_positive_xi"] = [f"{p}(d={d})" for p, d in sorted(nonzero_finite)]
    passed = ok and not outside
    notes = [] if not outside else [f"positive xi at primes above 2d: {outside}"]
    max_defect = max((r["xi"] for r in details), default=None)
    return LemmaReport("escape-radius-vs-M", len(details), max_defect, fitted, passed, details, 0, notes, spec.to_json())


def check_coeff_vs_escape(spec: SampleSpec) -> LemmaReport:
    """eta = lambda_v(f) - d M_v(f) stays bounded as the parameters grow."""
    details = []
    table = defaultdict(list)
    for k, (H, nf, f) in enumerate(_normal_form_sweep(spec, "eta")):
        d = nf.d
        for v in spec.place_objects:
            lo, hi = _critical_escape_bounds(nf, v, spec)
            lam = coefficient_height_local(f, v)
            M_lo = float(lo) if v.is_archimedean else float(lo) * math.log(v.p)
            eta = lam - d * M_lo
            table[(v, d)].append((H, lam, eta))
            details.append({"index": k, "scale": H, "nf": str(nf), "place": str(v), "lambda": lam, "M_lo": M_lo, "eta": eta})
    fitted, ok = _defect_trend(table, spec, "eta")
    max_defect = max((r["eta"] for r in details), default=None)
    return LemmaReport("coeff-vs-escape", len(details), max_defect, fitted, ok, details, 0, [], spec.to_json())


# --- good reduction ------------------------------------------------------------------


def _vexp(x: Fraction, p: int):
    """log|x|_p / log p, or None for x = 0."""
    return None if x == 0 else -valuation(x, p)


def good_reduction_sample(phi: PolyQ, alpha: Fraction, p: int, spec: SampleSpec) -> dict:
    """At a good prime p: G_p(alpha) = log+|alpha|_p exactly, and for i < j <= max_j
    lambda_p(phi) + d(d-1) log|phi^i(alpha) - phi^j(alpha)|_p <= (d-1) d^(j+1) G_p(alpha),
    everything in exact multiples of log p."""
    if Place(p) in bad_places(phi):
        raise ValueError(f"{p} is a bad prime for {format_poly(phi)}")
    d = phi.degree
    g = green_nonarch_exact(phi, alpha, p, spec.padic_max_iter)
    lam_plus = Fraction(max(0, -valuation(alpha, p))) if alpha != 0 else Fraction(0)
    local_ok = g.is_exact and g.lo == lam_plus
    lam_phi = Fraction(max(max(0, -valuation(a, p)) for a in phi.coeffs if a != 0))
    orbit = iterate(phi, alpha, spec.max_j)
    worst = None
    ineq_ok = True
    pairs = 0
    for j in range(1, spec.max_j + 1):
        rhs = (d - 1) * d ** (j + 1) * g.hi
        for ii in range(j):
            e = _vexp(orbit[ii] - orbit[j], p)
            pairs += 1
            if e is None:
                continue
            gap = lam_phi + d * (d - 1) * e - rhs
            worst = gap if worst is None else max(worst, gap)
            if gap > 0:
                ineq_ok = False
    return {
        "d": d, "phi": format_poly(phi), "p": p, "alpha": format_rational(alpha),
        "G_p": _exp_str(g.lo, p) if g.is_exact else None, "lambda_plus": _exp_str(lam_plus, p),
        "local_equal": local_ok, "max_gap": _exp_str(worst, p) if worst is not None else None,
        "max_gap_value": float(worst) * math.log(p) if worst is not None else None,
        "pairs": pairs, "inequality_holds": ineq_ok, "complies": local_ok and ineq_ok,
    }


def check_good_reduction(spec: SampleSpec) -> LemmaReport:
    """Local height and the orbit-gap inequality at good primes, exactly."""
    rng = rng_for(spec.rng_seed, "good")
    primes = spec.finite_primes
    if not primes:
        raise ValueError("good-reduction check needs finite places")
    details = []
    for i in range(spec.samples):
        while True:
            d = rng.choice(spec.degrees)
            phi = random_poly(rng, d, spec.coefficient_height_bound)
            good = [p for p in primes if Place(p) not in bad_places(phi)]
            if good:
                break
        p = rng.choice(good)
        alpha = random_rational(rng, spec.alpha_height_bound)
        details.append({"index": i, **good_reduction_sample(phi, alpha, p, spec)})
    passed = all(r["complies"] for r in details)
    gaps = [r["max_gap_value"] for r in details if r["max_gap_value"] is not None]
    max_defect = max(max(gaps, default=0.0), 0.0)
    fitted = {"pairs_checked": sum(r["pairs"] for r in details)}
    return LemmaReport("good-reduction", len(details), max_defect, fitted, passed, details, 0, [], spec.to_json())


# --- basin inequality ----------------------------------------------------------------


def basin_sample(f: PolyQ, alpha: Fraction, v: Place, J: int, spec: SampleSpec) -> dict:
    """lambda_v(f) + d(d-1) log|f^i(a) - f^j(a)|_v - d^(j+3) (upper hhat_v(a)), maximized over i < j <= J."""
    d = f.degree
    row = {"d": d, "f": format_poly(f), "place": str(v), "alpha": format_rational(alpha)}
    if not in_escape_region(f, alpha, v):
        row["skipped"] = "alpha not beyond the escape radius"
        return row
    lam = coefficient_height_local(f, v)
    g = _green_v(f, alpha, v, spec)
    lam_hat_hi = g.hi if v.is_archimedean else float(g.hi) * math.log(v.p)
    orbit = iterate(f, alpha, J)
    c1 = -math.inf
    for j in range(1, J + 1):
        for i in range(j):
            diff = orbit[i] - orbit[j]
            if diff == 0:
                continue
            lhs = lam + d * (d - 1) * log_abs(diff, v)
            c1 = max(c1, lhs - d ** (j + 3) * lam_hat_hi)
    row.update(lambda_f=lam, lambda_hat_hi=lam_hat_hi, C1=c1)
    return row


def check_basin_inequality(spec: SampleSpec) -> LemmaReport:
    """C1 over alpha beyond the escape radius; may not trend upward with lambda_v(f)."""
    details, skipped = [], 0
    table = defaultdict(list)
    rng = rng_for(spec.rng_seed, "basin-alpha")
    J = min(spec.max_j, 4)
    for k, (H, nf, f) in enumerate(_normal_form_sweep(spec, "basin")):
        v = rng.choice(spec.place_objects)
        alpha = escaping_point(rng, f, v, spec.alpha_height_bound)
        row = {"index": k, "scale": H, "nf": str(nf), **basin_sample(f, alpha, v, J, spec)}
        details.append(row)
        if "skipped" in row:
            skipped += 1
            continue
        if math.isfinite(row["C1"]):
            table[(v, nf.d)].append((H, row["lambda_f"], row["C1"]))
    fitted, ok = _defect_trend(table, spec, "C1")
    values = [r["C1"] for r in details if "C1" in r and math.isfinite(r["C1"])]
    return LemmaReport("basin-inequality", len(details) - skipped, max(values, default=None), fitted, ok,
                       details, skipped, [], spec.to_json())


# --- conjugation --------------------------------------------------------------------


def conjugation_pair(phi: PolyQ, mu: AffineMap, alpha: Fraction, spec: SampleSpec):
    """Enclosures of hhat_phi(alpha) and hhat_psi(mu^-1(alpha)), psi = mu^-1 phi mu."""
    psi = mu.conjugate(phi)
    beta = mu.inverse()(alpha)
    kw = dict(arch_max_iter=spec.arch_max_iter, padic_max_iter=spec.padic_max_iter, prec=spec.precision)
    h1 = canonical_height_local_method(phi, alpha, spec.target_error, **kw)
    h2 = canonical_height_local_method(psi, beta, spec.target_error, **kw)
    return psi, beta, h1, h2


def check_conjugation_invariance(spec: SampleSpec) -> LemmaReport:
    rng = rng_for(spec.rng_seed, "conj")
    cases = [
        (PolyQ([0, 0, 2]), AffineMap(Fraction(1, 4), Fraction(0)), Fraction(1)),
        (PolyQ([0, 0, 1]), AffineMap(Fraction(1), Fraction(0)), Fraction(3, 2)),
        (PolyQ([0, 0, 1]), AffineMap(Fraction(1), Fraction(1)), Fraction(2)),
    ]
    while len(cases) < spec.samples:
        d = rng.choice(spec.degrees)
        phi = random_poly(rng, d, spec.coefficient_height_bound)
        mu = AffineMap(random_rational(rng, spec.coefficient_height_bound, nonzero=True),
                       random_rational(rng, spec.coefficient_height_bound))
        cases.append((phi, mu, random_rational(rng, spec.alpha_height_bound)))
    details = []
    max_defect = 0.0
    for i, (phi, mu, alpha) in enumerate(cases):
        psi, beta, h1, h2 = conjugation_pair(phi, mu, alpha, spec)
        ok = h1.intersects(h2)
        defect = abs(h1.value - h2.value)
        max_defect = max(max_defect, defect)
        details.append({
            "index": i, "phi": format_poly(phi), "mu": [format_rational(mu.scale), format_rational(mu.shift)],
            "alpha": format_rational(alpha), "psi": format_poly(psi), "beta": format_rational(beta),
            "h_phi": h1.value, "h_phi_error": h1.error, "h_psi": h2.value, "h_psi_error": h2.error,
            "complies": ok, "defect": defect,
        })
    passed = all(r["complies"] for r in details)
    return LemmaReport("conjugation-invariance", len(details), max_defect, {}, passed, details, 0, [], spec.to_json())


def check_bookkeeping(spec: SampleSpec) -> LemmaReport:
    """bad(f_c) is inside bad(phi) together with the primes dividing d."""
    rng = rng_for(spec.rng_seed, "bookkeeping")
    details, skipped = [], 0
    for i in range(spec.samples):
        d = rng.choice(spec.degrees)
        phi = random_poly_with_exact_conjugation(rng, d, spec.coefficient_height_bound)
        row = {"index": i, "d": d, "phi": format_poly(phi)}
        try:
            conj = conjugate_to_normal_form(phi)
        except HeightlabError as exc:
            skipped += 1
            row["skipped"] = f"conjugation failed: {exc}"
            details.append(row)
            continue
        if conj.exact_mu is None:
            skipped += 1
            row["skipped"] = "no exact rational conjugation"
            details.append(row)
            continue
        f = conj.exact_mu.conjugate(phi)
        allowed = {v.p for v in bad_places(phi)} | set(prime_factors(d))
        got = {v.p for v in bad_places(f)}
        ok = got <= allowed
        row.update(f=format_poly(f), bad_f=sorted(got), bad_phi=sorted(v.p for v in bad_places(phi)),
                   extra=sorted(got - allowed), complies=ok)
        details.append(row)
    passed = all(r.get("complies", True) for r in details)
    decided = sum(1 for r in details if "complies" in r)
    return LemmaReport("bookkeeping", decided, None, {"exact_conjugations": decided}, passed and decided > 0,
                       details, skipped, [], spec.to_json())


__all__ = [
    "basin_sample",
    "check_basin_inequality",
    "check_bookkeeping",
    "check_coeff_vs_escape",
    "check_conjugation_invariance",
    "check_epsilon_bounds",
    "check_escape_radius_vs_M",
    "check_good_reduction",
    "check_transformation_rule",
    "conjugation_pair",
    "epsilon_sample",
    "good_reduction_sample",
    "transformation_sample",
]

