"""Numerical checks of the explicit inequalities, and the experiments built on them.

``LEMMAS`` maps each check id to its function and the sample spec it runs
with by default.
"""

from .checks import (
    check_basin_inequality,
    check_bookkeeping,
    check_coeff_vs_escape,
    check_conjugation_invariance,
    check_epsilon_bounds,
    check_escape_radius_vs_M,
    check_good_reduction,
    check_transformation_rule,
)
from .experiments import check_preimage_proximity, min_height_experiment
from .pigeonhole import PigeonholeResult, check_pigeonhole, pigeonhole_select
from .report import SCHEMA_VERSION, LemmaReport, SampleSpec

LEMMAS = {
    "eps-bounds": (check_epsilon_bounds, SampleSpec(samples=500)),
    "transformation-rule": (check_transformation_rule, SampleSpec(samples=500)),
    "escape-radius-vs-M": (check_escape_radius_vs_M, SampleSpec(samples=200)),
    "coeff-vs-escape": (check_coeff_vs_escape, SampleSpec(samples=200)),
    "good-reduction": (check_good_reduction, SampleSpec(samples=100)),
    "basin-inequality": (check_basin_inequality, SampleSpec(samples=200)),
    "pigeonhole": (check_pigeonhole, SampleSpec(samples=60)),
    "preimage-proximity": (check_preimage_proximity, SampleSpec()),
    "min-height": (min_height_experiment, SampleSpec(coefficient_height_bound=16, samples=500)),
    "conjugation-invariance": (check_conjugation_invariance, SampleSpec(samples=100)),
    "bookkeeping": (check_bookkeeping, SampleSpec(samples=100)),
}

EXPERIMENTS = {"min-height": "min-height", "preimage": "preimage-proximity"}


def run_lemma(lemma_id: str, spec: SampleSpec | None = None) -> LemmaReport:
    """Run one check; ``spec=None`` uses its default."""
    try:
        fn, default = LEMMAS[lemma_id]
    except KeyError:
        raise KeyError(f"unknown lemma id {lemma_id!r}; known: {', '.join(sorted(LEMMAS))}") from None
    return fn(default if spec is None else spec)


__all__ = [
    "EXPERIMENTS",
    "LEMMAS",
    "SCHEMA_VERSION",
    "LemmaReport",
    "PigeonholeResult",
    "SampleSpec",
    "check_basin_inequality",
    "check_bookkeeping",
    "check_coeff_vs_escape",
    "check_conjugation_invariance",
    "check_epsilon_bounds",
    "check_escape_radius_vs_M",
    "check_good_reduction",
    "check_pigeonhole",
    "check_preimage_proximity",
    "check_transformation_rule",
    "min_height_experiment",
    "pigeonhole_select",
    "run_lemma",
]
