"""``heightlab`` command line: single computations, checks, experiments.

Exit codes: 0 pass, 1 an assertion in the report failed, 2 usage or parse
error, 3 a resource cap was hit or a numerical procedure gave up.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .arith import Place, format_rational, to_rational
from .errors import NumericError, ParseError, ResourceError
from .heights import (
    ARCH_MAX_ITER,
    DEFAULT_TARGET,
    PADIC_MAX_ITER,
    canonical_height_local_method,
    canonical_height_naive_method,
    green,
)
from .poly import DEFAULT_DEGREE_CAP, bad_places, conjugate_to_normal_form, format_poly, normal_form_poly, parse_normal_form, parse_poly
from .harness.report import SCHEMA_VERSION, LemmaReport, SampleSpec, _clean

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
CONFIG_ENV = "HEIGHTLAB_CONFIG"
NAIVE_DEFAULT_N = 40


@dataclass(frozen=True)
class Config:
    """CLI defaults; a JSON file with any subset of these keys overrides them."""

    precision: Optional[int] = None  # working bits for archimedean balls; None picks from the orbit length
    max_iter: int = ARCH_MAX_ITER
    padic_max_iter: int = PADIC_MAX_ITER
    degree_cap: int = DEFAULT_DEGREE_CAP
    target_error: float = DEFAULT_TARGET
    slope_tolerance: Optional[float] = None  # None keeps each check's own
    naive_n: int = NAIVE_DEFAULT_N
    format: str = "text"
    seed: Optional[int] = None  # None keeps the spec's rng_seed
    fixtures_regen: bool = False

    def __post_init__(self):
        if self.format not in ("json", "csv", "text"):
            raise ValueError(f"format must be json, csv or text, not {self.format!r}")
        if self.precision is not None and self.precision < 16:
            raise ValueError("precision must be at least 16 bits")
        if self.max_iter < 1 or self.padic_max_iter < 1 or self.naive_n < 0 or self.degree_cap < 2:
            raise ValueError("iteration and degree caps must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "Config":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


# --- output --------------------------------------------------------------------------


def _envelope(command: str, passed: bool, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "pass": passed, "result": _clean(result)}


def _flatten(prefix: str, obj, out: dict):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list):
        out[prefix] = json.dumps(obj)
    else:
        out[prefix] = obj
    return out


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    row = _flatten("", doc, {})
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=sorted(row), lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
        return buf.getvalue()
    return "".join(f"{k}: {v}\n" for k, v in sorted(row.items()))


def _render_report(report: LemmaReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json_text()
    if fmt == "csv":
        return report.to_csv_text()
    return report.to_text()


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- inputs --------------------------------------------------------------------------


def _poly_arg(args, cfg: Config):
    if args.normal_form:
        if args.poly is not None:
            raise ParseError("give either a polynomial or --normal-form, not both")
        phi = normal_form_poly(parse_normal_form(args.normal_form))
    elif args.poly is None:
        raise ParseError("missing polynomial")
    else:
        phi = parse_poly(args.poly)
    if phi.degree > cfg.degree_cap:
        raise ResourceError(f"degree {phi.degree} exceeds cap {cfg.degree_cap}")
    return phi


def _rational_arg(text: str, what: str):
    try:
        return to_rational(text)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad {what} {text!r}") from exc


def _place_arg(text: str) -> Place:
    try:
        return Place.parse(text)
    except ValueError as exc:
        raise ParseError(f"bad place {text!r}: {exc}") from exc


def _spec_for(lemma_id: str, spec_file: Optional[str], cfg: Config) -> SampleSpec:
    from .harness import LEMMAS

    spec = SampleSpec.load(spec_file) if spec_file else LEMMAS[lemma_id][1]
    changes = {}
    if cfg.seed is not None:
        changes["rng_seed"] = cfg.seed
    if cfg.precision is not None:
        changes["precision"] = cfg.precision
    if cfg.slope_tolerance is not None:
        changes["slope_tolerance"] = cfg.slope_tolerance
    if cfg.max_iter != ARCH_MAX_ITER:
        changes["arch_max_iter"] = cfg.max_iter
    if cfg.padic_max_iter != PADIC_MAX_ITER:
        changes["padic_max_iter"] = cfg.padic_max_iter
    if cfg.target_error != DEFAULT_TARGET:
        changes["target_error"] = cfg.target_error
    spec = spec.with_(**changes)
    if any(d > cfg.degree_cap for d in spec.degrees):
        raise ResourceError(f"spec degrees {spec.degrees} exceed cap {cfg.degree_cap}")
    return spec


# --- commands ------------------------------------------------------------------------


def cmd_height(args, cfg: Config) -> int:
    if args.normal_form and args.poly is not None:
        # with --normal-form the positionals are "alpha [method]", parsed one slot to the left
        if args.method != "both" or args.alpha not in ("local", "naive", "both"):
            raise ParseError("give either a polynomial or --normal-form, not both")
        args.poly, args.alpha, args.method = None, args.poly, args.alpha
    phi = _poly_arg(args, cfg)
    alpha = _rational_arg(args.alpha, "alpha")
    result = {"poly": format_poly(phi), "alpha": format_rational(alpha), "method": args.method}
    local = naive = None
    if args.method in ("local", "both"):
        local = canonical_height_local_method(phi, alpha, cfg.target_error, arch_max_iter=cfg.max_iter,
                                              padic_max_iter=cfg.padic_max_iter, prec=cfg.precision)
        result["local"] = local.to_json()
    if args.method in ("naive", "both"):
        naive = canonical_height_naive_method(phi, alpha, cfg.naive_n, prec=cfg.precision)
        result["naive"] = naive.to_json()
        result["naive_n"] = cfg.naive_n
    passed = True
    if local is not None and naive is not None:
        passed = local.intersects(naive)
        result["agreement_defect"] = abs(local.value - naive.value)
        result["agree"] = passed
    _emit(_render(_envelope("height", passed, result), cfg.format), getattr(args, "out", None))
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_green(args, cfg: Config) -> int:
    phi = _poly_arg(args, cfg)
    z = _rational_arg(args.z, "point")
    v = _place_arg(args.place)
    value, record = green(phi, z, v, cfg.target_error, arch_max_iter=cfg.max_iter,
                          padic_max_iter=cfg.padic_max_iter, prec=cfg.precision)
    result = {"poly": format_poly(phi), "z": format_rational(z), "place": str(v), "green": value.to_json(),
              "orbit": record.to_json()}
    _emit(_render(_envelope("green", True, result), cfg.format), getattr(args, "out", None))
    return EXIT_PASS


def _num(x):
    if hasattr(x, "numerator"):
        return format_rational(to_rational(x))
    z = complex(x)
    return {"re": z.real, "im": z.imag}


def cmd_normal_form(args, cfg: Config) -> int:
    phi = _poly_arg(args, cfg)
    conj = conjugate_to_normal_form(phi)
    result = {
        "poly": format_poly(phi),
        "d": conj.nf.d,
        "c": [_num(x) for x in conj.nf.c],
        "mu": {"scale": _num(conj.mu.scale), "shift": _num(conj.mu.shift)},
        "exact": conj.exact is not None,
        "residual": conj.residual,
    }
    if conj.exact is not None:
        result["c_exact"] = [_num(x) for x in conj.exact.c]
        result["normal_form"] = str(conj.exact)
    if conj.exact_mu is not None:
        result["mu_exact"] = {"scale": _num(conj.exact_mu.scale), "shift": _num(conj.exact_mu.shift)}
    _emit(_render(_envelope("normal-form", True, result), cfg.format), getattr(args, "out", None))
    return EXIT_PASS


def cmd_bad_places(args, cfg: Config) -> int:
    phi = _poly_arg(args, cfg)
    primes = sorted(v.p for v in bad_places(phi))
    _emit(_render(_envelope("bad-places", True, {"poly": format_poly(phi), "bad_places": primes}), cfg.format), getattr(args, "out", None))
    return EXIT_PASS


def _regen(names=None):
    from .harness import golden

    for path in golden.regenerate(names):
        print(f"wrote {path}", file=sys.stderr)


def cmd_verify(args, cfg: Config) -> int:
    from .harness import LEMMAS, run_lemma

    if args.lemma_id not in LEMMAS:
        print(f"heightlab: unknown lemma id {args.lemma_id!r}; known: {', '.join(sorted(LEMMAS))}", file=sys.stderr)
        return EXIT_USAGE
    report = run_lemma(args.lemma_id, _spec_for(args.lemma_id, args.spec_file, cfg))
    _emit(_render_report(report, cfg.format), getattr(args, "out", None))
    if cfg.fixtures_regen:
        _regen()
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_experiment(args, cfg: Config) -> int:
    from .harness import EXPERIMENTS, run_lemma

    lemma_id = EXPERIMENTS[args.name]
    report = run_lemma(lemma_id, _spec_for(lemma_id, args.spec_file, cfg))
    _emit(_render_report(report, cfg.format), getattr(args, "out", None))
    if cfg.fixtures_regen:
        _regen()
    return EXIT_PASS if report.passed else EXIT_FAIL


# --- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--precision", type=int, help="working precision in bits for archimedean enclosures")
    common.add_argument("--max-iter", type=int, help="iteration cap for orbit computations")
    common.add_argument("--degree-cap", type=int, help="largest polynomial degree accepted")
    common.add_argument("--format", choices=("json", "csv", "text"), help="output format (default text)")
    common.add_argument("--seed", type=int, help="override the sample spec's rng seed")
    common.add_argument("--fixtures-regen", action="store_true", help="rewrite the recorded fixture files")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--config", help=f"config file (default: ${CONFIG_ENV})")

    parser = argparse.ArgumentParser(prog="heightlab", parents=[common],
                                     description="Canonical heights of polynomial maps over Q.")
    parser.add_argument("--version", action="version", version=f"heightlab {__version__}")
    sub = parser.add_subparsers(dest="command")

    def poly_args(p):
        p.add_argument("poly", nargs="?", help='coefficients lowest degree first, e.g. "0,0,1/2"')
        p.add_argument("--normal-form", help='normal form "d; c1,...,c_{d-1}" instead of coefficients')

    p = sub.add_parser("height", parents=[common], help="canonical height of a rational point")
    poly_args(p)
    p.add_argument("alpha")
    p.add_argument("method", nargs="?", choices=("local", "naive", "both"), default="both")
    p.set_defaults(func=cmd_height)

    p = sub.add_parser("green", parents=[common], help="local escape rate at one place")
    poly_args(p)
    p.add_argument("z")
    p.add_argument("place", help='"inf" or a prime')
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("normal-form", parents=[common], help="affine conjugate of the form f_c")
    poly_args(p)
    p.set_defaults(func=cmd_normal_form)

    p = sub.add_parser("bad-places", parents=[common], help="primes of bad reduction")
    poly_args(p)
    p.set_defaults(func=cmd_bad_places)

    p = sub.add_parser("verify", parents=[common], help="run one check; exit 0 iff it passes")
    p.add_argument("lemma_id")
    p.add_argument("spec_file", nargs="?", help="SampleSpec JSON (default: the check's own)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment and write its report")
    p.add_argument("name", choices=("min-height", "preimage"))
    p.add_argument("spec_file", nargs="?", help="SampleSpec JSON (default: the experiment's own)")
    p.set_defaults(func=cmd_experiment)
    # coefficient lists such as "-1,0,1" are positionals, not options
    for ps in [parser, *sub.choices.values()]:
        ps._negative_number_matcher = _NEGATIVE_INPUT
    return parser


_NEGATIVE_INPUT = re.compile(r"^-\d")

_FLAG_FIELDS = {"precision": "precision", "max_iter": "max_iter", "degree_cap": "degree_cap", "format": "format",
                "seed": "seed", "fixtures_regen": "fixtures_regen"}


def resolve_config(args) -> Config:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    cfg = Config.load(path) if path else Config()
    changes = {field: getattr(args, attr) for attr, field in _FLAG_FIELDS.items() if getattr(args, attr, None) is not None}
    if "max_iter" in changes:
        changes["padic_max_iter"] = changes["max_iter"]
    return replace(cfg, **changes)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"heightlab: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        if cfg.fixtures_regen:
            _regen()
            return EXIT_PASS
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, cfg)
    except ParseError as exc:
        print(f"heightlab: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, NumericError) as exc:
        print(f"heightlab: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (OSError, ValueError) as exc:
        print(f"heightlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
