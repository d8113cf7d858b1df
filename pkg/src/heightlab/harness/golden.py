"""Recorded outputs of the run-derived examples.

Each fixture is a JSON document stored under ``fixtures/``.  They are only
rewritten by :func:`regenerate` (the CLI's ``--fixtures-regen``); tests
recompute each case and compare byte for byte.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from ..arith import ARCH
from ..heights import critical_escape
from ..poly import NormalForm, coefficient_height_local, log_escape_radius, normal_form_poly
from .pigeonhole import pigeonhole_select
from .report import _clean

FIXTURE_DIR = Path(__file__).with_name("fixtures")


def _summary(lemma_id: str) -> dict:
    from . import run_lemma

    data = run_lemma(lemma_id).to_json()
    data.pop("details")
    return data


def _full(lemma_id: str) -> dict:
    from . import run_lemma

    return run_lemma(lemma_id).to_json()


def _pigeonhole_c10() -> dict:
    res = pigeonhole_select(NormalForm(2, (Fraction(10),)), Fraction(1), range(1, 22), ARCH)
    return res.to_json()


def _xi_rows() -> dict:
    rows = []
    for c in (0, 1, 10, 100):
        nf = NormalForm(2, (Fraction(c),))
        f = normal_form_poly(nf)
        M = critical_escape(nf, ARCH)
        logC = log_escape_radius(f, ARCH)
        rows.append({"c": c, "log_C": logC, "M": M.to_json(), "xi_upper": logC - M.lo})
    return {"rows": rows}


def _eta_rows() -> dict:
    rows = []
    for t in (10, 100, 1000):
        nf = NormalForm(2, (Fraction(t),))
        f = normal_form_poly(nf)
        M = critical_escape(nf, ARCH)
        lam = coefficient_height_local(f, ARCH)
        rows.append({"t": t, "lambda": lam, "M": M.to_json(), "eta_upper": lam - 2 * M.lo})
    return {"rows": rows}


CASES = {
    "pigeonhole-c10": _pigeonhole_c10,
    "escape-radius-vs-M-d2": _xi_rows,
    "coeff-vs-escape-d2": _eta_rows,
    "preimage-proximity": lambda: _full("preimage-proximity"),
    "min-height-d2": lambda: _full("min-height"),
    "eps-bounds-default": lambda: _summary("eps-bounds"),
}


def render(name: str) -> str:
    return json.dumps(_clean(CASES[name]()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def path_for(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def load(name: str) -> str:
    return path_for(name).read_text(encoding="utf-8")


def regenerate(names=None) -> list[Path]:
    """Recompute and overwrite fixtures; returns the paths written."""
    FIXTURE_DIR.mkdir(exist_ok=True)
    written = []
    for name in names or sorted(CASES):
        path = path_for(name)
        path.write_text(render(name), encoding="utf-8")
        written.append(path)
    return written


__all__ = ["CASES", "FIXTURE_DIR", "load", "path_for", "regenerate", "render"]
