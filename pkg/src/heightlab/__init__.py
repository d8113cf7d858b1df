"""Canonical heights of polynomial maps over Q, computed with certified enclosures."""

from .arith import ARCH, Place, lambda_plus, log_abs, valuation, weil_height
from .errors import HeightlabError, NumericError, ParseError, ResourceError
from .heights import (
    BoundedValue,
    OrbitRecord,
    Status,
    canonical_height_local_method,
    canonical_height_naive_method,
    critical_escape,
    green,
    green_arch,
    green_nonarch,
    is_preperiodic,
)
from .poly import (
    AffineMap,
    NormalForm,
    PolyC,
    PolyQ,
    bad_places,
    conjugate_to_normal_form,
    normal_form_poly,
    parse_normal_form,
    parse_poly,
)

__version__ = "0.1.0"

__all__ = [
    "ARCH",
    "AffineMap",
    "BoundedValue",
    "HeightlabError",
    "NormalForm",
    "NumericError",
    "OrbitRecord",
    "ParseError",
    "Place",
    "PolyC",
    "PolyQ",
    "ResourceError",
    "Status",
    "bad_places",
    "canonical_height_local_method",
    "canonical_height_naive_method",
    "conjugate_to_normal_form",
    "critical_escape",
    "green",
    "green_arch",
    "green_nonarch",
    "is_preperiodic",
    "lambda_plus",
    "log_abs",
    "normal_form_poly",
    "parse_normal_form",
    "parse_poly",
    "valuation",
    "weil_height",
]
