"""Parameter sweeps: pre-image proximity along c = (t, 0, ..., 0), and a minimal-height floor."""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from fractions import Fraction

from ..arith import ARCH
from ..errors import HeightlabError
from ..heights import canonical_height_local_method, critical_escape, is_preperiodic
from ..poly import NormalForm, bad_places, coefficient_height_global, escape_radius, normal_form_poly
from ..roots import proximity_statistic
from .report import LemmaReport, SampleSpec, fit_line
from .sampling import random_rational, rng_for

DEFAULT_T_GRID = (10, 100, 1000, 10000)
_RADII = (0, Fraction(1, 64), Fraction(1, 16), Fraction(1, 4), Fraction(1, 2), Fraction(255, 256))
_ANGLES = 8


def _alpha_grid(C: float):
    """Polar grid inside the closed disk |z| <= C, plus the center."""
    pts = []
    for r in _RADII:
        if r == 0:
            pts.append(0j)
            continue
        pts.extend(float(r) * C * cmath.exp(2j * math.pi * k / _ANGLES) for k in range(_ANGLES))
    return pts


def check_preimage_proximity(spec: SampleSpec) -> LemmaReport:
    """S(t) = max over alpha of the pre-image proximity, against M(f_c).

    The fitted slope of S against M, over samples with M >= m_threshold,
    may not exceed -1/(d-1) plus the slope tolerance; delta-hat is the
    largest S + M/(d-1) on those samples.
    """
    grid = spec.c_grid or DEFAULT_T_GRID
    details, fitted, passed, notes = [], {}, True, []
    for d in spec.degrees:
        pts = []
        for t in grid:
            nf = NormalForm(d, (Fraction(t),) + (Fraction(0),) * (d - 2))
            f = normal_form_poly(nf)
            M = critical_escape(nf, ARCH, spec.target_error, arch_max_iter=spec.arch_max_iter, prec=spec.precision)
            C = escape_radius(f, ARCH)
            alphas = [a for a in _alpha_grid(C) if abs(a) <= C]
            try:
                values = [proximity_statistic(nf, a) for a in alphas]
            except HeightlabError as exc:
                notes.append(f"d={d} t={t}: {exc}")
                details.append({"d": d, "t": t, "M": M.value, "error": str(exc)})
                continue
            k = max(range(len(values)), key=values.__getitem__)
            S = values[k]
            row = {"d": d, "t": t, "M": M.value, "M_radius": M.error, "S": S, "argmax_alpha": [alphas[k].real, alphas[k].imag],
                   "alphas": len(alphas), "in_fit": M.value >= spec.m_threshold}
            details.append(row)
            if row["in_fit"]:
                pts.append((M.value, S))
        bound = -1.0 / (d - 1)
        if len(pts) < 2:
            notes.append(f"d={d}: fewer than two grid points with M >= {spec.m_threshold}")
            passed = False
            continue
        slope, intercept = fit_line([m for m, _ in pts], [s for _, s in pts])
        delta = max(s - bound * m for m, s in pts)
        fitted[f"slope_d{d}"] = slope
        fitted[f"intercept_d{d}"] = intercept
        fitted[f"delta_hat_d{d}"] = delta
        passed = passed and slope <= bound + spec.slope_tolerance and math.isfinite(delta)
    max_defect = max((fitted[k] for k in fitted if k.startswith("delta_hat")), default=None)
    return LemmaReport("preimage-proximity", len(details), max_defect, fitted, passed, details, 0, notes, spec.to_json())


# --- minimal height ------------------------------------------------------------------


def _dyadic(rng, bound: int) -> Fraction:
    """n / 2^k with |n| <= bound and 2^k <= bound."""
    k = rng.randint(0, max(0, bound.bit_length() - 1))
    return Fraction(rng.randint(-bound, bound), 2**k)


def min_height_experiment(spec: SampleSpec) -> LemmaReport:
    """Floor of h_hat(alpha) / max(h(f_c), 1) over non-preperiodic alpha.

    Normal forms f_c of degree 2 with c in Z[1/2], so f_c has bad reduction
    at 2 only.  The verdict is on the (2, s <= 1) buckets: the minimum ratio
    must be positive and move by less than 10% between the first half of the
    samples and all of them.
    """
    rng = rng_for(spec.rng_seed, "min-height")
    d = 2
    details, excluded = [], {"preperiodic": 0, "undecided": 0}
    accepted = 0
    attempts = 0
    while accepted < spec.samples and attempts < 20 * spec.samples:
        attempts += 1
        nf = NormalForm(d, (_dyadic(rng, spec.coefficient_height_bound),))
        f = normal_form_poly(nf)
        alpha = random_rational(rng, spec.alpha_height_bound)
        pp = is_preperiodic(f, alpha, max_iter=spec.arch_max_iter)
        if pp is not False:
            excluded["preperiodic" if pp else "undecided"] += 1
            continue
        h = canonical_height_local_method(f, alpha, spec.target_error, arch_max_iter=spec.arch_max_iter,
                                          padic_max_iter=spec.padic_max_iter, prec=spec.precision)
        hf = coefficient_height_global(f)
        s = len(bad_places(f))
        details.append({"index": accepted, "nf": str(nf), "alpha": str(alpha), "h_hat_lo": h.lo, "h_hat_hi": h.hi,
                        "h_f": hf, "s": s, "ratio": h.lo / max(hf, 1.0)})
        accepted += 1
    buckets = defaultdict(list)
    for r in details:
        buckets[(d, r["s"])].append(r)
    fitted = {}
    for (dd, s), rows in sorted(buckets.items()):
        fitted[f"min_ratio_d{dd}_s{s}"] = min(r["ratio"] for r in rows)
        fitted[f"count_d{dd}_s{s}"] = len(rows)
    core = [r["ratio"] for r in details if r["s"] <= 1]
    half = core[: len(core) // 2]
    skipped = sum(excluded.values())
    fitted.update(excluded_preperiodic=excluded["preperiodic"], excluded_undecided=excluded["undecided"])
    notes = []
    if accepted < spec.samples:
        notes.append(f"only {accepted} non-preperiodic samples after {attempts} draws")
    if len(half) == 0:
        return LemmaReport("min-height", accepted, None, fitted, False, details, skipped, notes, spec.to_json())
    floor_all, floor_half = min(core), min(half)
    change = abs(floor_all - floor_half) / floor_half if floor_half > 0 else math.inf
    fitted.update(floor_half=floor_half, floor_all=floor_all, relative_change=change)
    passed = floor_all > 0 and change < 0.1 and accepted >= spec.samples
    return LemmaReport("min-height", accepted, floor_all, fitted, passed, details, skipped, notes, spec.to_json())


__all__ = ["DEFAULT_T_GRID", "check_preimage_proximity", "min_height_experiment"]
