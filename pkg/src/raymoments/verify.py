"""Seeded verification suites and the command line entry point.

Two suites: ``kernel`` exercises the kernel correspondence between the
generalized Saint Venant operator and the moment transform stack (potential
fields land in both kernels, generic fields in neither), and ``identities``
re-derives every transform-level and operator-level identity on random data.
Reports are deterministic in the configuration and are emitted as text, json
or csv, one record per check.

Exact checks demand a literal zero in rational arithmetic; transform-level
checks run on the exact path where the sampled lines allow it and compare
against the float tolerance otherwise.  For witness checks (a quantity that
must be nonzero) the record's residual holds the witness magnitude.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import random
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .diffops import (
    alternated_derivative,
    alternated_from_saint_venant,
    generalized_saint_venant,
    iterate_d,
    operator_report,
    restriction_relation_residual,
    saint_venant,
    saint_venant_from_alternated,
)
from .moments import (
    MomentExpression,
    PhasePoint,
    collapsed_derivative_residual,
    directional_x_derivative,
    directional_xi_derivative,
    extended_from_moments,
    extended_transform,
    john_power_residual,
    moment_stack,
    moment_transform,
    random_phase_point,
    random_ts_point,
    recover_restricted,
    restriction_contraction_residual,
    symmetrization_split_residual,
    symmetrized_derivative_residual,
    value_diff,
)
from .polygauss import PolyGauss, Polynomial, field_scale_report, random_field, sym_field
from .symtensor import (
    BiSymTensor,
    RawTensor,
    SymTensor,
    all_canonical_tuples,
    restrict,
    symmetrize,
)

WITNESS_THRESHOLD = 1e-6

IDENTITY_CATALOG = {
    "moment-conversion": "extended transform rebuilt from the moment stack on the projected line",
    "sv-alternation-equivalence": "Saint Venant operator equals the pair-symmetrized alternated derivative",
    "sv-alternation-roundtrip": "alternated derivative recovered from Saint Venant output by scaled alternations",
    "restriction-relation": "order-k operator equals symmetrized Saint Venant of the k-fold restrictions",
    "partial-symmetrization": "full symmetrization splits into rotation terms on block-symmetric tensors",
    "restricted-recovery": "restricted-field transform recovered from mixed derivatives of moment data",
    "john-power": "iterated John operator equals the scaled transform of the alternated derivative",
    "collapsed-derivative": "direction-contracted John data collapses to pure spatial derivatives",
    "restriction-contraction": "deeper restriction transform equals direction contraction of the shallower one",
    "integration-by-parts": "direction-contracted spatial gradient lowers the moment order with factor -k",
    "translation-invariance": "zeroth moment data is constant along the ray direction",
    "euler-degree": "direction-contracted direction gradient scales data by its homogeneity degree",
}

KERNEL_CATALOG = {
    "potential-exact-kernel": "potential fields are annihilated exactly by the order-k operator",
    "potential-moments-vanish": "potential fields have vanishing moment stack on sampled lines",
    "potential-symmetrized-derivative": "symmetrized spatial derivatives of restricted moment data vanish on kernel fields",
    "separation-operator-witness": "a generic field has a nonzero operator component",
    "separation-moment-witness": "a generic field has a nonzero moment sample",
    "degenerate-top-order": "the top-order operator acts as the identity",
}


@dataclass
class SuiteConfig:
    n: int = 2
    m: int = 2
    k: int = 1
    seed: int = 7
    degree: int = 2
    samples: int = 20
    tol_float: float = 1e-9
    fmt: str = "text"
    field: SymTensor | None = None

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("dimension n must be at least 2")
        if self.m < 0:
            raise ValueError("rank m must be non-negative")
        if not 0 <= self.k <= self.m:
            raise ValueError(f"order k={self.k} outside [0, m={self.m}]")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if self.samples < 1:
            raise ValueError("need at least one sample")
        if not self.tol_float > 0:
            raise ValueError("tolerance must be positive")
        if self.fmt not in ("json", "csv", "text"):
            raise ValueError(f"unknown format {self.fmt!r}")
        if self.field is not None:
            if self.field.n != self.n or self.field.rank != self.m:
                raise ValueError(
                    f"loaded field has (n, rank) = ({self.field.n}, "
                    f"{self.field.rank}), expected ({self.n}, {self.m})")

    def as_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "k": self.k, "seed": self.seed,
                "degree": self.degree, "samples": self.samples,
                "tol_float": self.tol_float, "format": self.fmt,
                "field_loaded": self.field is not None}


@dataclass
class CheckRecord:
    suite: str
    check_id: str
    identity: str
    residual: float
    exact: bool
    passed: bool

    def as_dict(self) -> dict:
        return {"suite": self.suite, "check_id": self.check_id,
                "identity": self.identity, "residual": self.residual,
                "exact": self.exact, "pass": self.passed}


@dataclass
class SuiteResult:
    name: str
    records: list = dc_field(default_factory=list)
    resamples: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)


def _nonzero_field(n: int, m: int, degree: int, seed: str) -> SymTensor:
    for attempt in range(16):
        f = random_field(n, m, degree, f"{seed}/{attempt}")
        if not f.is_zero():
            return f
    raise RuntimeError("failed to draw a nonzero random field")


def generate_potential(n: int, m: int, k: int, degree: int, seed):
    """A random generator field v and its (k+1)-fold inner derivative f.

    f lies in the kernel of the order-k operator and of the first k+1 moment
    transforms; the Gaussian factor supplies the decay of every iterate.
    """
    if k + 1 > m:
        raise ValueError(f"potential of order k={k} needs rank m > k, got m={m}")
    v = _nonzero_field(n, m - k - 1, degree, f"{seed}:potential")
    return v, iterate_d(v, k + 1)


def _tensor_residual(t) -> Fraction:
    rep = operator_report(t)
    return Fraction(0) if rep.is_zero else rep.max_abs_coefficient


def _relative(a, b) -> float:
    return value_diff(a, b) / max(1.0, abs(float(a)), abs(float(b)))


def suite_kernel(config: SuiteConfig) -> SuiteResult:
    """Kernel correspondence checks for the configured (n, m, k)."""
    config.validate()
    n, m, k = config.n, config.m, config.k
    tol = config.tol_float
    result = SuiteResult("kernel")
    rng = random.Random(f"{config.seed}:kernel:points")
    points = [random_ts_point(n, rng) for _ in range(config.samples)]

    def record(check_id, identity_key, residual, exact, passed):
        result.records.append(CheckRecord(
            "kernel", check_id, KERNEL_CATALOG[identity_key],
            float(residual), exact, passed))

    if k < m:
        _, f = generate_potential(n, m, k, config.degree, f"{config.seed}:kernel")
        scale = max(1.0, float(field_scale_report(f)))
        wk_residual = _tensor_residual(generalized_saint_venant(f, k))
        record("potential-exact-kernel", "potential-exact-kernel",
               wk_residual, True, wk_residual == 0)
        worst = 0.0
        for pt in points:
            for value in moment_stack(f, k, pt):
                worst = max(worst, abs(float(value)))
        record("potential-moments-vanish", "potential-moments-vanish",
               worst, False, worst <= tol * scale)
        pp_rng = random.Random(f"{config.seed}:kernel:sym")
        sym_points = [random_phase_point(n, pp_rng) for _ in range(3)]
        worst = 0.0
        for r in range(k + 1):
            for pt in sym_points:
                worst = max(worst, symmetrized_derivative_residual(f, r, pt))
        record("potential-symmetrized-derivative", "potential-symmetrized-derivative",
               worst, False, worst <= tol * scale)
    else:
        f = _nonzero_field(n, m, config.degree, f"{config.seed}:kernel:top")
        wm = generalized_saint_venant(f, m)
        expected = BiSymTensor(n, 0, m, {((), key): val for key, val in f.items()},
                               zero=f.zero)
        top_residual = _tensor_residual(wm - expected)
        record("degenerate-top-order", "degenerate-top-order",
               top_residual, True, top_residual == 0)

    sep_rng = random.Random(f"{config.seed}:kernel:separation")
    witness = 0.0
    op_witness = Fraction(0)
    for attempt in range(4):
        if config.field is not None:
            g = config.field
        else:
            g = _nonzero_field(n, m, config.degree,
                               f"{config.seed}:kernel:sep/{attempt}")
        op_witness = _tensor_residual(generalized_saint_venant(g, k))
        if op_witness == 0:
            if config.field is not None:
                break  # a loaded kernel field cannot separate; report the failure
            result.resamples += 1
            continue
        witness = 0.0
        sample_count = config.samples
        for round_ in range(3):
            pts = [random_ts_point(n, sep_rng) for _ in range(sample_count)]
            for pt in pts:
                for value in moment_stack(g, k, pt):
                    witness = max(witness, abs(float(value)))
            if witness > WITNESS_THRESHOLD:
                break
            result.resamples += 1
            sample_count *= 2
        break
    record("separation-operator-witness", "separation-operator-witness",
           op_witness, True, op_witness != 0)
    record("separation-moment-witness", "separation-moment-witness",
           witness, False, witness > WITNESS_THRESHOLD)
    return result


def _random_block_symmetric(n: int, m: int, k: int, rng: random.Random) -> RawTensor:
    data = {}
    for idx in itertools.product(range(1, n + 1), repeat=m):
        num = rng.randint(-9, 9)
        if num:
            data[idx] = Fraction(num, rng.choice((1, 2, 3)))
    t = RawTensor(n, m, data)
    if m - k >= 2:
        t = symmetrize(t, tuple(range(1, m - k + 1)))
    if k >= 2:
        t = symmetrize(t, tuple(range(m - k + 1, m + 1)))
    return t


def suite_identities(config: SuiteConfig) -> SuiteResult:
    """Every operator-level and transform-level identity on one random field."""
    config.validate()
    n, m, k = config.n, config.m, config.k
    tol = config.tol_float
    result = SuiteResult("identities")
    f = config.field if config.field is not None else _nonzero_field(
        n, m, config.degree, f"{config.seed}:identities:f")
    rng = random.Random(f"{config.seed}:identities:points")
    points = [random_phase_point(n, rng) for _ in range(config.samples)]
    pick = random.Random(f"{config.seed}:identities:indices")

    def record(check_id, identity_key, residual, exact, passed):
        result.records.append(CheckRecord(
            "identities", check_id, IDENTITY_CATALOG[identity_key],
            float(residual), exact, passed))

    # operator-level identities, certified by exact coefficient arithmetic
    if m >= 1:
        alt = alternated_derivative(f)
        w_direct = saint_venant(f)
        w_from_alt = saint_venant_from_alternated(alt)
        res = _tensor_residual(w_direct - w_from_alt)
        record("sv-alternation-equivalence", "sv-alternation-equivalence",
               res, True, res == 0)
        res = _tensor_residual(alternated_from_saint_venant(w_from_alt) - alt)
        record("sv-alternation-roundtrip", "sv-alternation-roundtrip",
               res, True, res == 0)
        kk = min(k, m - 1)
        res = restriction_relation_residual(f, kk)
        record("restriction-relation", "restriction-relation",
               res, True, res == 0)
    sym_rng = random.Random(f"{config.seed}:identities:blocksym")
    block = _random_block_symmetric(n, max(m, 1), min(k, max(m, 1)), sym_rng)
    res = symmetrization_split_residual(block, min(k, max(m, 1)))
    record("partial-symmetrization", "partial-symmetrization", res, True, res == 0)

    # transform-level identities, one record per sampled line
    for s_idx, pt in enumerate(points):
        tag = f"s{s_idx:02d}"

        q = s_idx % 4
        ts = pt.project()
        ivals = [moment_transform(f, ell, ts) for ell in range(q + 1)]
        lhs = extended_from_moments(ivals, q, pt, m)
        rhs = extended_transform(f, q, pt)
        res = _relative(lhs, rhs)
        record(f"moment-conversion-{tag}", "moment-conversion", res, False, res <= tol)

        r = s_idx % (m + 1)
        fixed = tuple(pick.randint(1, n) for _ in range(r))
        lhs = recover_restricted(f, fixed, pt)
        rhs = extended_transform(restrict(f, fixed), 0, pt)
        res = _relative(lhs, rhs)
        record(f"restricted-recovery-{tag}", "restricted-recovery", res, False,
               res <= tol)

        if m >= 1:
            kk = min(k, m - 1)
            fixed_k = tuple(pick.randint(1, n) for _ in range(kk))
            res = john_power_residual(f, kk, fixed_k, pt)
            record(f"john-power-{tag}", "john-power", res, False, res <= tol)
            res = collapsed_derivative_residual(f, kk, fixed_k, pt)
            record(f"collapsed-derivative-{tag}", "collapsed-derivative", res,
                   False, res <= tol)

        depth = s_idx % (k + 1)
        fixed_r = tuple(pick.randint(1, n) for _ in range(depth))
        res = restriction_contraction_residual(f, fixed_r, k, pt)
        record(f"restriction-contraction-{tag}", "restriction-contraction", res,
               False, res <= tol)

        base = MomentExpression.transform(f, 0)
        drift = abs(float(directional_x_derivative(base, pt)))
        shift = Fraction(1, 3) if pt.is_exact else 1.0 / 3.0
        moved = PhasePoint(
            tuple(a + shift * b for a, b in zip(pt.x, pt.xi)), pt.xi)
        res = max(drift, value_diff(extended_transform(f, 0, moved),
                                    extended_transform(f, 0, pt)))
        record(f"translation-invariance-{tag}", "translation-invariance", res,
               False, res <= tol)

        qq = k if k >= 1 else 1
        lhs = directional_x_derivative(MomentExpression.transform(f, qq), pt)
        rhs = extended_transform(f, qq - 1, pt)
        res = value_diff(lhs, _scale_value(rhs, -qq))
        record(f"integration-by-parts-{tag}", "integration-by-parts", res, False,
               res <= tol)

        qe = s_idx % (k + 1)
        lhs = directional_xi_derivative(MomentExpression.transform(f, qe), pt)
        rhs = extended_transform(f, qe, pt)
        res = value_diff(lhs, _scale_value(rhs, m - qe - 1))
        record(f"euler-degree-{tag}", "euler-degree", res, False, res <= tol)

    return result


def _scale_value(value, c):
    if isinstance(value, float):
        return value * float(c)
    return value.scaled(Fraction(c))


def run_suites(config: SuiteConfig, which: str) -> list[SuiteResult]:
    if which == "kernel":
        return [suite_kernel(config)]
    if which == "identities":
        return [suite_identities(config)]
    if which == "all":
        return [suite_kernel(config), suite_identities(config)]
    raise ValueError(f"unknown suite {which!r}")


# ---------------------------------------------------------------------------
# field (de)serialization
# ---------------------------------------------------------------------------

class FieldParseError(ValueError):
    """Malformed field text; the message carries the position."""


def serialize_field(f: SymTensor) -> str:
    """Render a field as UTF-8 text with exact rational coefficients."""
    components = {}
    for key, value in f.items():
        key_str = ",".join(str(i) for i in key)
        components[key_str] = [
            {"exp": list(exps), "coef": f"{c.numerator}/{c.denominator}"}
            for exps, c in sorted(value.poly.terms.items())
        ]
    obj = {"n": f.n, "rank": f.rank, "components": components}
    return json.dumps(obj, indent=2) + "\n"


def _parse_coef(text, where: str) -> Fraction:
    if not isinstance(text, str):
        raise FieldParseError(f"{where}: coefficient must be a string, "
                              f"got {type(text).__name__}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FieldParseError(f"{where}: bad rational {text!r} ({exc})") from None


def parse_field(text: str) -> SymTensor:
    """Parse serialized field text; inverse of serialize_field, exactly."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FieldParseError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(obj, dict):
        raise FieldParseError("top level must be an object")
    for name in ("n", "rank"):
        if not isinstance(obj.get(name), int) or obj[name] < 0:
            raise FieldParseError(f"field {name!r} must be a non-negative integer")
    n, rank = obj["n"], obj["rank"]
    if n < 1:
        raise FieldParseError("dimension n must be positive")
    components_obj = obj.get("components", {})
    if not isinstance(components_obj, dict):
        raise FieldParseError("'components' must be an object")
    comps = {}
    for key_str, terms in components_obj.items():
        where = f"component {key_str!r}"
        if key_str:
            try:
                indices = tuple(int(part) for part in key_str.split(","))
            except ValueError:
                raise FieldParseError(f"{where}: bad index tuple") from None
        else:
            indices = ()
        if len(indices) != rank:
            raise FieldParseError(f"{where}: expected {rank} indices")
        if any(not 1 <= i <= n for i in indices):
            raise FieldParseError(f"{where}: index outside [1, {n}]")
        key = tuple(sorted(indices))
        if key in comps:
            raise FieldParseError(f"{where}: duplicate canonical component")
        if not isinstance(terms, list):
            raise FieldParseError(f"{where}: terms must be a list")
        poly_terms = {}
        for t_idx, term in enumerate(terms):
            spot = f"{where}, term {t_idx}"
            if not isinstance(term, dict) or set(term) != {"exp", "coef"}:
                raise FieldParseError(f"{spot}: expected keys 'exp' and 'coef'")
            exps = term["exp"]
            if (not isinstance(exps, list) or len(exps) != n
                    or any(not isinstance(e, int) or e < 0 for e in exps)):
                raise FieldParseError(f"{spot}: 'exp' must be {n} non-negative ints")
            exps = tuple(exps)
            if exps in poly_terms:
                raise FieldParseError(f"{spot}: duplicate exponent {list(exps)}")
            poly_terms[exps] = _parse_coef(term["coef"], spot)
        comps[key] = PolyGauss(Polynomial(n, poly_terms))
    return sym_field(n, rank, comps)


# ---------------------------------------------------------------------------
# report rendering and CLI
# ---------------------------------------------------------------------------

def render_report(results: list[SuiteResult], config: SuiteConfig, fmt: str) -> str:
    if fmt == "json":
        obj = {
            "config": config.as_dict(),
            "suites": [
                {"name": r.name, "pass": r.passed, "resamples": r.resamples,
                 "records": [rec.as_dict() for rec in r.records]}
                for r in results
            ],
            "pass": all(r.passed for r in results),
        }
        return json.dumps(obj, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["suite", "check_id", "identity", "residual", "exact",
                         "pass"])
        for r in results:
            for rec in r.records:
                writer.writerow([rec.suite, rec.check_id, rec.identity,
                                 repr(rec.residual), rec.exact, rec.passed])
        return buf.getvalue()
    lines = [f"config: {config.as_dict()}"]
    for r in results:
        for rec in r.records:
            status = "PASS" if rec.passed else "FAIL"
            kind = "exact" if rec.exact else "float"
            lines.append(f"[{status}] {rec.suite}/{rec.check_id} "
                         f"residual={rec.residual:.6e} ({kind}) :: {rec.identity}")
        lines.append(f"suite {r.name}: "
                     f"{'PASS' if r.passed else 'FAIL'} "
                     f"({len(r.records)} checks, {r.resamples} resamples)")
    lines.append("overall: " + ("PASS" if all(r.passed for r in results) else "FAIL"))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raymoments",
        description="Verify momentum ray transform and Saint Venant operator "
                    "identities on random polynomial-Gaussian tensor fields.")
    parser.add_argument("--suite", choices=("kernel", "identities", "all"),
                        default="all")
    parser.add_argument("--n", type=int, default=2, help="ambient dimension")
    parser.add_argument("--m", type=int, default=2, help="tensor rank")
    parser.add_argument("--k", type=int, default=1, help="operator order")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--degree", type=int, default=2,
                        help="polynomial degree of random fields")
    parser.add_argument("--samples", type=int, default=20,
                        help="sampled lines per check family")
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="tolerance for float-path checks")
    parser.add_argument("--format", dest="fmt",
                        choices=("json", "csv", "text"), default="text")
    parser.add_argument("--out", metavar="FILE", default=None,
                        help="write the report to FILE instead of stdout")
    parser.add_argument("--field", metavar="FILE", default=None,
                        help="load the test field from FILE instead of drawing "
                             "it from the seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    loaded = None
    if args.field is not None:
        try:
            with open(args.field, "r", encoding="utf-8") as handle:
                loaded = parse_field(handle.read())
        except OSError as exc:
            parser.error(f"cannot read field file: {exc}")
        except FieldParseError as exc:
            parser.error(f"bad field file: {exc}")
    config = SuiteConfig(n=args.n, m=args.m, k=args.k, seed=args.seed,
                         degree=args.degree, samples=args.samples,
                         tol_float=args.tol, fmt=args.fmt, field=loaded)
    try:
        config.validate()
    except ValueError as exc:
        parser.error(str(exc))
    results = run_suites(config, args.suite)
    report = render_report(results, config, config.fmt)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report)
    else:
        sys.stdout.write(report)
    return 0 if all(r.passed for r in results) else 1


def console_entry() -> None:
    raise SystemExit(main())
