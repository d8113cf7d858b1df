"""Sample specifications, lemma reports, and their serialized forms."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

from ..arith import Place

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SampleSpec:
    """Everything a check needs to draw its samples.  Fixed seed, fixed report."""

    degrees: tuple = (2, 3)
    coefficient_height_bound: int = 8
    alpha_height_bound: int = 8
    samples: int = 100
    places: tuple = ("inf", "2", "3", "5", "7")
    rng_seed: int = 0
    c_grid: tuple = ()
    height_scales: tuple = (4, 64, 1024, 16384)
    arch_max_iter: int = 64
    padic_max_iter: int = 32
    precision: Optional[int] = None
    target_error: float = 1e-12
    max_j: int = 6
    slope_tolerance: float = 0.05
    m_threshold: float = 1.0
    padic_radius: str = "coefficient"

    def __post_init__(self):
        for name in ("degrees", "places", "c_grid", "height_scales"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "places", tuple(str(p) for p in self.places))
        if any(d < 2 for d in self.degrees):
            raise ValueError("degrees must be >= 2")
        if self.padic_radius not in ("coefficient", "exact"):
            raise ValueError("padic_radius is 'coefficient' or 'exact'")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 bits")

    @property
    def place_objects(self) -> tuple:
        return tuple(Place.parse(p) for p in self.places)

    @property
    def finite_primes(self) -> tuple:
        return tuple(v.p for v in self.place_objects if not v.is_archimedean)

    def with_(self, **changes) -> "SampleSpec":
        return replace(self, **changes)

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SampleSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SampleSpec fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SampleSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(x, float):
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


@dataclass
class LemmaReport:
    lemma_id: str
    samples: int
    observed_max_defect: Optional[float]
    fitted_constants: dict
    passed: bool
    details: list = field(default_factory=list)
    skipped: int = 0
    notes: list = field(default_factory=list)
    spec: Optional[dict] = None

    def to_json(self) -> dict:
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "lemma_id": self.lemma_id,
            "samples": self.samples,
            "skipped": self.skipped,
            "observed_max_defect": self.observed_max_defect,
            "fitted_constants": dict(sorted(self.fitted_constants.items())),
            "pass": self.passed,
            "notes": list(self.notes),
            "spec": self.spec,
            "details": self.details,
        })

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv_text(self) -> str:
        rows = [_clean(r) for r in self.details]
        columns = sorted({k for r in rows for k in r})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        consts = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.fitted_constants.items()))
        lines = [f"{self.lemma_id}: {status}  samples={self.samples} skipped={self.skipped}"]
        if self.observed_max_defect is not None:
            lines.append(f"  observed max defect: {_fmt(self.observed_max_defect)}")
        if consts:
            lines.append(f"  fitted: {consts}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "LemmaReport":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {data.get('schema_version')}")
        return cls(
            lemma_id=data["lemma_id"],
            samples=data["samples"],
            observed_max_defect=data["observed_max_defect"],
            fitted_constants=data["fitted_constants"],
            passed=data["pass"],
            details=data["details"],
            skipped=data["skipped"],
            notes=data["notes"],
            spec=data["spec"],
        )


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def fit_line(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    if len(xs) < 2:
        raise ValueError("need at least two points to fit a line")
    res = statistics.linear_regression(xs, ys)
    return res.slope, res.intercept


def trend_slope(scales, values) -> float:
    """Slope of values against log2(scale): growth per doubling."""
    xs = [math.log2(s) for s in scales]
    if len(set(xs)) < 2:
        return 0.0
    return fit_line(xs, list(values))[0]
