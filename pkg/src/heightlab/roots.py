"""Complex root finding: Aberth-Ehrlich iteration with residual certification.

Pre-images under an iterate are found layer by layer (d roots of
``phi(z) = w`` per node) and then Newton-polished against the iterate
itself, evaluated by repeated application of phi.  This avoids expanding
phi^k into coefficient form, whose coefficient spread ruins double
precision for the large-parameter normal forms the harness sweeps.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import mpmath

from .arith import ARCH
from .errors import NumericError, ResourceError
from .poly import DEFAULT_DEGREE_CAP, NormalForm, PolyC, PolyQ, escape_radius, normal_form_poly

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 500
LOG_FLOOR = -80.0  # sentinel for coincident points


@dataclass(frozen=True)
class RootSet:
    """All roots of a polynomial, repeated according to multiplicity."""

    roots: tuple
    residual: float
    degree: int = field(default=-1)

    def __post_init__(self):
        if self.degree == -1:
            object.__setattr__(self, "degree", len(self.roots))
        if len(self.roots) != self.degree:
            raise ValueError("root count must equal the degree")

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def clusters(self, tol: float = 1e-6) -> list[tuple[complex, int]]:
        """Group numerically coincident roots into (center, multiplicity)."""
        out: list[list] = []
        for r in self.roots:
            for entry in out:
                if abs(entry[0] - r) <= tol * max(1.0, abs(r)):
                    entry[1] += 1
                    break
            else:
                out.append([r, 1])
        return [(complex(c), m) for c, m in out]

    def to_json(self) -> dict:
        return {
            "roots": [{"re": c.real, "im": c.imag, "multiplicity": m} for c, m in self.clusters()],
            "residual": self.residual,
        }


def _abs_eval(coeffs, x: float) -> float:
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * x + abs(a)
    return acc


def _relative_residual(coeffs, r) -> float:
    val = 0
    for a in reversed(coeffs):
        val = val * r + a
    scale = _abs_eval(coeffs, abs(r))
    if scale == 0:
        return 0.0
    return float(abs(val) / scale)


def _root_scale(coeffs, n) -> float:
    """Twice the Fujiwara-type bound on the root moduli; 1.0 when all lower terms vanish."""
    # in logs, so subnormal or huge coefficient ratios neither overflow nor vanish
    log_lead = float(mpmath.log(abs(coeffs[-1])))
    best = None
    for k in range(1, n + 1):
        a = coeffs[n - k]
        if a != 0:
            t = (float(mpmath.log(abs(a))) - log_lead - (math.log(2) if k == n else 0.0)) / k
            best = t if best is None else max(best, t)
    if best is None:
        return 1.0
    return math.exp(min(max(best + math.log(2), -700.0), 700.0))


def _initial_guesses(coeffs, n, ctx):
    radius = _root_scale(coeffs, n)
    # deterministic jitter keeps symmetric starts off the symmetry axes
    guesses = [radius * cmath.exp(1j * (2 * math.pi * k / n + 0.4)) for k in range(n)]
    return guesses if ctx is None else [ctx.mpc(g) for g in guesses]


def _aberth(coeffs, ctx=None, max_iter=MAX_ITER, eps=2.0**-50):
    n = len(coeffs) - 1
    dcoeffs = [i * coeffs[i] for i in range(1, n + 1)]
    z = _initial_guesses(coeffs, n, ctx)
    # steps are judged relative to each root; the floor is half a lower bound on
    # the root moduli (the bound for the reversed polynomial), so tiny roots converge
    floor = max(0.25 / _root_scale(coeffs[::-1], n) if coeffs[0] != 0 else 0.0, 1e-300)
    for _ in range(max_iter):
        moved = 0.0
        for i in range(n):
            zi = z[i]
            p = 0
            for a in reversed(coeffs):
                p = p * zi + a
            if p == 0:
                continue
            dp = 0
            for a in reversed(dcoeffs):
                dp = dp * zi + a
            s = 0
            for j in range(n):
                if j != i:
                    diff = zi - z[j]
                    if diff != 0:
                        s += 1 / diff
            if dp == 0:
                ratio_inv = s
                w = 1 / ratio_inv if ratio_inv != 0 else abs(zi) * 1e-3 + 1e-3
            else:
                ratio = p / dp
                denom = 1 - ratio * s
                w = ratio / denom if denom != 0 else ratio
            z[i] = zi - w
            moved = max(moved, float(abs(w)) / max(floor, float(abs(z[i]))))
        if moved < eps:
            break
    return z


def all_roots(p, tol: float = DEFAULT_TOL) -> RootSet:
    """All complex roots of ``p`` with max relative residual <= tol.

    The residual of a root r is |p(r)| / sum|a_i||r|^i.  Falls back once to
    40-digit arithmetic before giving up.
    """
    if isinstance(p, PolyQ):
        p = p.to_complex()
    if p.degree < 1:
        raise ValueError("need degree >= 1")
    coeffs = list(p.coeffs)
    if abs(coeffs[-1]) < 1e-300:
        raise ValueError("leading coefficient underflows")
    zeros = 0
    while coeffs[0] == 0:
        coeffs.pop(0)
        zeros += 1
    roots: list[complex] = [0j] * zeros
    if len(coeffs) == 2:
        roots.append(-coeffs[0] / coeffs[1])
    elif len(coeffs) > 2:
        found = [complex(r) for r in _aberth(coeffs)]
        found = [_newton_polish(coeffs, r) for r in found]
        worst = max(_relative_residual(coeffs, r) for r in found)
        if worst > tol:
            with mpmath.workdps(40):
                mcoeffs = [mpmath.mpc(c) for c in coeffs]
                mroots = _aberth(mcoeffs, ctx=mpmath, eps=mpmath.mpf(2) ** -120)
                found = [complex(r) for r in mroots]
            found = [_newton_polish(coeffs, r) for r in found]
            worst = max(_relative_residual(coeffs, r) for r in found)
            if worst > tol:
                raise NumericError(f"root finding did not converge (residual {worst:.3g})", worst)
        roots.extend(found)
    residual = max((_relative_residual(p.coeffs, r) for r in roots), default=0.0)
    return RootSet(tuple(roots), residual, p.degree)


def _newton_polish(coeffs, r, steps: int = 3):
    dcoeffs = [i * coeffs[i] for i in range(1, len(coeffs))]
    best, best_res = r, _relative_residual(coeffs, r)
    for _ in range(steps):
        p = 0
        for a in reversed(coeffs):
            p = p * r + a
        dp = 0
        for a in reversed(dcoeffs):
            dp = dp * r + a
        if dp == 0:
            break
        r = r - p / dp
        res = _relative_residual(coeffs, r)
        if res < best_res:
            best, best_res = r, res
        else:
            break
    return best


def fixed_points(phi, tol: float = DEFAULT_TOL) -> RootSet:
    """Roots of phi(z) - z."""
    if phi.degree < 2:
        raise ValueError("need degree >= 2")
    g = phi.to_complex() - PolyC([0, 1])
    return all_roots(g, tol)


def _iterate_with_scale(coeffs, y, k):
    """phi^k(y), d/dy phi^k(y), and a magnitude scale for the evaluation."""
    dcoeffs = [i * coeffs[i] for i in range(1, len(coeffs))]
    w, dw, s = y, 1, abs(y)
    for _ in range(k):
        p = 0
        for a in reversed(coeffs):
            p = p * w + a
        dp = 0
        for a in reversed(dcoeffs):
            dp = dp * w + a
        dw = dw * dp
        w = p
        s = _abs_eval(coeffs, s)
    return w, dw, s


def _iterate_residual(coeffs, y, k, target):
    w, _, s = _iterate_with_scale(coeffs, y, k)
    return abs(w - target) / (s + abs(target)) if (s + abs(target)) else 0.0


def preimages(phi, target, k: int, tol: float = DEFAULT_TOL, *, degree_cap: int = DEFAULT_DEGREE_CAP) -> RootSet:
    """All y with phi^k(y) = target, d^k of them counted with multiplicity."""
    if k < 1:
        raise ValueError("k must be positive")
    phi = phi.to_complex()
    d = phi.degree
    if d**k > degree_cap:
        raise ResourceError(f"degree {d}^{k} exceeds cap {degree_cap}")
    target = complex(target)
    layer = [target]
    for _ in range(k):
        nxt = []
        for w in layer:
            nxt.extend(all_roots(phi - w, tol).roots)
        layer = nxt
    coeffs = phi.coeffs
    polished = []
    for y in layer:
        best, best_res = y, _iterate_residual(coeffs, y, k, target)
        for _ in range(3):
            w, dw, _ = _iterate_with_scale(coeffs, y, k)
            if dw == 0:
                break
            y = y - (w - target) / dw
            res = _iterate_residual(coeffs, y, k, target)
            if res < best_res:
                best, best_res = y, res
            else:
                break
        polished.append(best)
    residual = max(_iterate_residual(coeffs, y, k, target) for y in polished)
    if residual > tol:
        raise NumericError(f"pre-images did not verify (residual {residual:.3g})", residual)
    return RootSet(tuple(polished), residual, d**k)


def _log_dist(a: complex, b: complex) -> float:
    dist = abs(a - b)
    if dist == 0:
        return LOG_FLOOR
    return max(math.log(dist), LOG_FLOOR)


def proximity_statistic(nf: NormalForm, alpha, tol: float = DEFAULT_TOL) -> float:
    """max over y in f^-3(alpha) of min over beta in f^-3(0) of log|y - beta|.

    Distances below exp(-80) are reported as the sentinel -80.  If alpha
    lies in the escape region the hypothesis fails; the value is still
    returned and a warning is logged.
    """
    f = normal_form_poly(nf).to_complex()
    if abs(complex(alpha)) > escape_radius(f, ARCH):
        log.warning("alpha=%r lies in the escape region of f_c; bound does not apply", alpha)
    zeros = preimages(f, 0, 3, tol).roots
    ys = preimages(f, alpha, 3, tol).roots
    return max(min(_log_dist(y, b) for b in zeros) for y in ys)
