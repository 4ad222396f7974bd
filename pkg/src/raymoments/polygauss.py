"""Exact arithmetic for scalar fields of the form p(x) * exp(-|x|^2).

The polynomial factor carries exact rational coefficients, so the class is
closed under partial differentiation, coordinate multiplication and line
integration, and every operator identity downstream can be certified by
coefficient arithmetic instead of floating point.

Line integrals reduce, after completing the square, to one-dimensional
Gaussian moments; the result of an integral over a rational line is kept in
the exact form coef * sqrt(root) * sqrt(pi) * exp(exponent) with rational
coef, root and exponent (see ExactValue).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .symtensor import SymTensor, all_canonical_tuples

Rational = Fraction

_SQRT_PI = math.sqrt(math.pi)


def is_rational(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def all_rational(values: Iterable) -> bool:
    return all(is_rational(v) for v in values)


def _as_fraction(value) -> Fraction:
    if not is_rational(value):
        raise TypeError(f"expected an exact rational, got {type(value).__name__}")
    return Fraction(value)


class Polynomial:
    """A multivariate polynomial with rational coefficients, stored sparsely.

    ``terms`` maps exponent multi-indices (length-n tuples of naturals) to
    nonzero rational coefficients.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n
        data = {}
        for exps, coef in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != n or any(e < 0 or not isinstance(e, int) for e in exps):
                raise ValueError(f"bad exponent multi-index {exps}")
            coef = _as_fraction(coef)
            if coef:
                data[exps] = coef
        self.terms = data

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> "Polynomial":
        return cls(n, {(0,) * n: _as_fraction(c)})

    @classmethod
    def coordinate(cls, n: int, i: int) -> "Polynomial":
        if not 1 <= i <= n:
            raise ValueError(f"coordinate index {i} outside [1, {n}]")
        exps = tuple(1 if j == i - 1 else 0 for j in range(n))
        return cls(n, {exps: Fraction(1)})

    def _compat(self, other: "Polynomial") -> None:
        if not isinstance(other, Polynomial):
            raise TypeError("expected a Polynomial")
        if self.n != other.n:
            raise ValueError("dimension mismatch")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._compat(other)
        data = dict(self.terms)
        for exps, coef in other.terms.items():
            data[exps] = data.get(exps, Fraction(0)) + coef
        return Polynomial(self.n, data)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other):
        if is_rational(other):
            c = Fraction(other)
            return Polynomial(self.n, {e: k * c for e, k in self.terms.items()})
        self._compat(other)
        data = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exps = tuple(a + b for a, b in zip(e1, e2))
                data[exps] = data.get(exps, Fraction(0)) + c1 * c2
        return Polynomial(self.n, data)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polynomial) and self.n == other.n
                and self.terms == other.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exps, coef in sorted(self.terms.items()):
            mono = "*".join(f"x{i+1}^{e}" for i, e in enumerate(exps) if e)
            bits.append(f"{coef}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(bits) + ")"

    def partial(self, i: int) -> "Polynomial":
        """Partial derivative with respect to the i-th coordinate (1-based)."""
        if not 1 <= i <= self.n:
            raise ValueError(f"coordinate index {i} outside [1, {self.n}]")
        data = {}
        for exps, coef in self.terms.items():
            e = exps[i - 1]
            if e:
                new = exps[: i - 1] + (e - 1,) + exps[i:]
                data[new] = data.get(new, Fraction(0)) + coef * e
        return Polynomial(self.n, data)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self.terms.values()), default=Fraction(0))

    def evaluate(self, xs: Sequence[float]) -> float:
        if len(xs) != self.n:
            raise ValueError("point has wrong dimension")
        total = 0.0
        for exps, coef in self.terms.items():
            term = float(coef)
            for x, e in zip(xs, exps):
                if e:
                    term *= float(x) ** e
            total += term
        return total

    def evaluate_exact(self, xs: Sequence) -> Fraction:
        if len(xs) != self.n:
            raise ValueError("point has wrong dimension")
        total = Fraction(0)
        for exps, coef in self.terms.items():
            term = coef
            for x, e in zip(xs, exps):
                if e:
                    term *= _as_fraction(x) ** e
            total += term
        return total

    def line_coefficients(self, x: Sequence, xi: Sequence) -> list:
        """Coefficients in t of p(x + t*xi), lowest degree first.

        Works on rationals (exact) and on floats alike.
        """
        if len(x) != self.n or len(xi) != self.n:
            raise ValueError("point or direction has wrong dimension")
        exact = all_rational(x) and all_rational(xi)
        zero = Fraction(0) if exact else 0.0
        out = [zero] * (self.total_degree() + 1)
        for exps, coef in self.terms.items():
            # expand prod_i (x_i + t*xi_i)^{e_i} one coordinate at a time
            conv = [Fraction(coef) if exact else float(coef)]
            for xc, vc, e in zip(x, xi, exps):
                if not e:
                    continue
                base = [zero] * (e + 1)
                for j in range(e + 1):
                    base[j] = math.comb(e, j) * (xc ** (e - j)) * (vc ** j)
                new = [zero] * (len(conv) + e)
                for a, ca in enumerate(conv):
                    if ca == 0:
                        continue
                    for b, cb in enumerate(base):
                        new[a + b] += ca * cb
                conv = new
            for d, c in enumerate(conv):
                out[d] += c
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return out


class PolyGauss:
    """The scalar field p(x) * exp(-|x|^2) with rational-coefficient p.

    Closed under partial derivatives, sums, rational scaling and coordinate
    multiplication.  The product of two such fields carries exp(-2|x|^2) and
    leaves the class, so it is rejected.
    """

    __slots__ = ("poly",)

    def __init__(self, poly: Polynomial):
        if not isinstance(poly, Polynomial):
            raise TypeError("expected a Polynomial")
        self.poly = poly

    @property
    def n(self) -> int:
        return self.poly.n

    @classmethod
    def zero(cls, n: int) -> "PolyGauss":
        return cls(Polynomial.zero(n))

    @classmethod
    def gaussian(cls, n: int, c=Fraction(1)) -> "PolyGauss":
        return cls(Polynomial.constant(n, c))

    def _compat(self, other: "PolyGauss") -> None:
        if not isinstance(other, PolyGauss):
            raise TypeError("expected a PolyGauss")
        if self.n != other.n:
            raise ValueError("dimension mismatch")

    def __add__(self, other: "PolyGauss") -> "PolyGauss":
        self._compat(other)
        return PolyGauss(self.poly + other.poly)

    def __neg__(self) -> "PolyGauss":
        return PolyGauss(-self.poly)

    def __sub__(self, other: "PolyGauss") -> "PolyGauss":
        return self + (-other)

    def __mul__(self, other):
        if is_rational(other):
            return PolyGauss(self.poly * other)
        if isinstance(other, PolyGauss):
            raise TypeError("product of two Gaussian-weighted fields leaves the class")
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyGauss) and self.poly == other.poly

    def __bool__(self) -> bool:
        return bool(self.poly)

    def __repr__(self) -> str:
        return f"PolyGauss({self.poly!r} * exp(-|x|^2))"

    def is_zero(self) -> bool:
        return not self.poly

    def fingerprint(self) -> tuple:
        return (self.n, tuple(sorted(self.poly.terms.items())))

    def derive(self, i: int) -> "PolyGauss":
        """Exact partial derivative: (dp/dx_i - 2 x_i p) * exp(-|x|^2)."""
        grad = self.poly.partial(i)
        shifted = Polynomial.coordinate(self.n, i) * self.poly * Fraction(-2)
        return PolyGauss(grad + shifted)

    def multiply_by_coordinate(self, i: int) -> "PolyGauss":
        return PolyGauss(Polynomial.coordinate(self.n, i) * self.poly)

    def evaluate(self, xs: Sequence[float]) -> float:
        norm2 = math.fsum(float(x) * float(x) for x in xs)
        return self.poly.evaluate(xs) * math.exp(-norm2)

    def evaluate_exact(self, xs: Sequence) -> tuple[Fraction, Fraction]:
        """Value split as (polynomial part, exponent): p(x) and -|x|^2."""
        norm2 = sum(_as_fraction(x) ** 2 for x in xs)
        return self.poly.evaluate_exact(xs), -norm2


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of a positive rational, or None if irrational."""
    if q <= 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class ExactValue:
    """An exact real of the form coef * sqrt(root) * sqrt(pi) * exp(exponent).

    All three fields are rational; any perfect-square factor of ``root`` is
    absorbed into ``coef`` at construction, and zero is kept in the canonical
    form (0, 1, 0).  Values on the same line share root and exponent, so sums
    and differences of transform data stay exact.
    """

    coef: Fraction
    root: Fraction = Fraction(1)
    exponent: Fraction = Fraction(0)

    def __post_init__(self):
        coef = _as_fraction(self.coef)
        root = _as_fraction(self.root)
        exponent = _as_fraction(self.exponent)
        if root <= 0:
            raise ValueError("root must be positive")
        r = rational_sqrt(root)
        if r is not None:
            coef, root = coef * r, Fraction(1)
        if not coef:
            root, exponent = Fraction(1), Fraction(0)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "exponent", exponent)

    @property
    def is_zero(self) -> bool:
        return not self.coef

    def scaled(self, c) -> "ExactValue":
        return ExactValue(self.coef * _as_fraction(c), self.root, self.exponent)

    def mul_sqrt(self, q) -> "ExactValue":
        """Multiply by sqrt(q) for positive rational q."""
        q = _as_fraction(q)
        if q <= 0:
            raise ValueError("radicand must be positive")
        return ExactValue(self.coef, self.root * q, self.exponent)

    def __add__(self, other: "ExactValue") -> "ExactValue":
        if not isinstance(other, ExactValue):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.exponent != other.exponent:
            raise ArithmeticError("cannot add exact values with different exponents")
        if self.root == other.root:
            return ExactValue(self.coef + other.coef, self.root, self.exponent)
        ratio = rational_sqrt(other.root / self.root)
        if ratio is None:
            raise ArithmeticError("cannot add exact values with incompatible roots")
        return ExactValue(self.coef + other.coef * ratio, self.root, self.exponent)

    def __neg__(self) -> "ExactValue":
        return ExactValue(-self.coef, self.root, self.exponent)

    def __sub__(self, other: "ExactValue") -> "ExactValue":
        return self + (-other)

    def __mul__(self, c):
        if is_rational(c):
            return self.scaled(c)
        return NotImplemented

    __rmul__ = __mul__

    def __float__(self) -> float:
        if self.is_zero:
            return 0.0
        return (float(self.coef) * math.sqrt(float(self.root)) * _SQRT_PI
                * math.exp(float(self.exponent)))

    @classmethod
    def zero_value(cls) -> "ExactValue":
        return cls(Fraction(0))


def gaussian_moment(k: int) -> Fraction:
    """The integral of t^k exp(-t^2) over the real line, as a multiple of sqrt(pi).

    Zero for odd k; for k = 2j the multiplier is (2j-1)!! / 2^j.
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    if k % 2:
        return Fraction(0)
    j = k // 2
    num = 1
    for odd in range(1, 2 * j, 2):
        num *= odd
    return Fraction(num, 2 ** j)


def _line_data(x: Sequence, xi: Sequence):
    s = sum(v * v for v in xi)
    if not s:
        raise ValueError("direction must be nonzero")
    c = sum(a * b for a, b in zip(x, xi))
    norm2 = sum(a * a for a in x)
    exponent = -(norm2 - c * c / s)
    return s, c, exponent


def line_moment(g: PolyGauss, q: int, x: Sequence, xi: Sequence):
    """Integral of t^q g(x + t*xi) over the real line.

    On rational inputs the result is an ExactValue; on float inputs a float.
    The computation expands g's polynomial along the line, completes the
    square in the exponent and reduces to one-dimensional Gaussian moments.
    """
    if q < 0:
        raise ValueError("moment order must be non-negative")
    if len(x) != g.n or len(xi) != g.n:
        raise ValueError("point or direction has wrong dimension")
    exact = all_rational(x) and all_rational(xi)
    if exact:
        x = [Fraction(v) for v in x]
        xi = [Fraction(v) for v in xi]
    else:
        x = [float(v) for v in x]
        xi = [float(v) for v in xi]
    s, c, exponent = _line_data(x, xi)

    coeffs = g.poly.line_coefficients(x, xi)
    zero = Fraction(0) if exact else 0.0
    coeffs = [zero] * q + coeffs if q else coeffs

    # substitute t = tau - c/s so the exponent becomes -s*tau^2 + exponent
    shift = -c / s
    deg = len(coeffs) - 1
    shifted = [zero] * (deg + 1)
    for j, a in enumerate(coeffs):
        if a == 0:
            continue
        for k in range(j + 1):
            shifted[k] += a * math.comb(j, k) * shift ** (j - k)

    if exact:
        total = Fraction(0)
        for k in range(0, deg + 1, 2):
            if shifted[k]:
                total += shifted[k] * gaussian_moment(k) / s ** (k // 2)
        return ExactValue(total, 1 / s, exponent)
    total = 0.0
    for k in range(0, deg + 1, 2):
        total += shifted[k] * float(gaussian_moment(k)) / s ** (k // 2)
    return total * math.sqrt(math.pi / s) * math.exp(exponent)


def line_moment_quadrature(g: PolyGauss, q: int, x: Sequence, xi: Sequence) -> float:
    """Independent Gauss-Hermite evaluation of the same line integral.

    After the square is completed the integrand is a polynomial in the
    quadrature variable, so the node count makes the rule exact up to
    rounding.  The polynomial factor is evaluated pointwise on the line, not
    through the expansion used by the closed form.
    """
    if q < 0:
        raise ValueError("moment order must be non-negative")
    x = [float(v) for v in x]
    xi = [float(v) for v in xi]
    s, c, exponent = _line_data(x, xi)
    rs = math.sqrt(s)
    deg = g.poly.total_degree() + q
    nodes = deg // 2 + 2
    us, ws = np.polynomial.hermite.hermgauss(nodes)
    total = 0.0
    for u, w in zip(us, ws):
        t = u / rs - c / s
        pt = [a + t * b for a, b in zip(x, xi)]
        total += w * (t ** q if q else 1.0) * g.poly.evaluate(pt)
    return total * math.exp(exponent) / rs


def quadrature_mass(g: PolyGauss, q: int, x: Sequence, xi: Sequence) -> float:
    """Sum of |weight * integrand| over the quadrature nodes.

    The natural magnitude scale for relative comparisons between the closed
    form and the quadrature, robust to cancellation in the integral itself.
    """
    x = [float(v) for v in x]
    xi = [float(v) for v in xi]
    s, c, exponent = _line_data(x, xi)
    rs = math.sqrt(s)
    deg = g.poly.total_degree() + q
    nodes = deg // 2 + 2
    us, ws = np.polynomial.hermite.hermgauss(nodes)
    total = 0.0
    for u, w in zip(us, ws):
        t = u / rs - c / s
        pt = [a + t * b for a, b in zip(x, xi)]
        total += abs(w * (t ** q if q else 1.0) * g.poly.evaluate(pt))
    return total * math.exp(exponent) / rs


def sym_field(n: int, rank: int, components: dict | None = None) -> SymTensor:
    """A symmetric tensor field with PolyGauss components."""
    comps = {}
    for key, value in (components or {}).items():
        if not isinstance(value, PolyGauss):
            raise TypeError("field components must be PolyGauss values")
        if value.n != n:
            raise ValueError("component dimension mismatch")
        comps[key] = value
    return SymTensor(n, rank, comps, zero=PolyGauss.zero(n))


def field_partial(f: SymTensor, i: int) -> SymTensor:
    """Componentwise partial derivative of a field; preserves symmetry.

    Results are memoized on the source field (fields are immutable), which
    keeps repeated derivative rewrites of the same data cheap.
    """
    cache = getattr(f, "_partial_cache", None)
    if cache is None:
        cache = {}
        setattr(f, "_partial_cache", cache)
    hit = cache.get(i)
    if hit is None:
        data = {key: value.derive(i) for key, value in f.components.items()}
        hit = SymTensor(f.n, f.rank, data, f.zero)
        cache[i] = hit
    return hit


def field_scale_report(f) -> Fraction:
    """Largest absolute polynomial coefficient over all components."""
    best = Fraction(0)
    for _, value in f.items():
        best = max(best, value.poly.max_abs_coefficient())
    return best


def exponent_multi_indices(n: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent multi-indices with total degree at most ``degree``."""
    out = [e for e in itertools.product(range(degree + 1), repeat=n)
           if sum(e) <= degree]
    return sorted(out)


def random_polynomial(n: int, degree: int, rng: random.Random) -> Polynomial:
    terms = {}
    for exps in exponent_multi_indices(n, degree):
        num = rng.randint(-4, 4)
        if num:
            terms[exps] = Fraction(num, rng.choice((1, 2, 3)))
    return Polynomial(n, terms)


def random_field(n: int, m: int, degree: int, seed) -> SymTensor:
    """A deterministic random rank-m field with small rational coefficients.

    Every canonical component receives an independent random polynomial of
    total degree at most ``degree``; identical seeds give identical fields.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    rng = random.Random(seed if isinstance(seed, (int, str)) else str(seed))
    comps = {}
    for key in all_canonical_tuples(n, m):
        comps[key] = PolyGauss(random_polynomial(n, degree, rng))
    return sym_field(n, m, comps)
