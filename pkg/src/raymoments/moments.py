"""Momentum ray transforms and the derivative calculus on transform data.

The q-th moment transform integrates t^q times the direction-contracted field
along a line.  On the manifold of oriented lines (unit direction, orthogonal
offset) this is the classical momentum transform; the extended version lives
on arbitrary (x, xi) with xi nonzero, where partial derivatives in both
variables make sense.

Derivatives of transform data are never taken by finite differences: closed
rewrite rules express them as rational combinations of transforms of derived
or restricted fields (MomentExpression), so every transform-level identity
can be evaluated exactly on rational lines.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from typing import Sequence

from .diffops import alternated_derivative
from .polygauss import (
    ExactValue,
    all_rational,
    field_partial,
    is_rational,
    line_moment,
    rational_sqrt,
)
from .symtensor import (
    RawTensor,
    SymTensor,
    all_canonical_tuples,
    distinct_rearrangements,
    restrict,
    symmetrize,
    tuple_multiplicity,
)

PROJECTION_TOL = 1e-12


class PhasePoint:
    """A point (x, xi) with xi nonzero; the argument of extended transforms.

    Coordinates are kept exact when every entry is rational, otherwise they
    are floats and downstream evaluation switches to the float path.
    """

    def __init__(self, x: Sequence, xi: Sequence):
        x = tuple(x)
        xi = tuple(xi)
        if len(x) != len(xi) or not x:
            raise ValueError("x and xi must share a positive dimension")
        exact = all_rational(x) and all_rational(xi)
        if exact:
            x = tuple(Fraction(v) for v in x)
            xi = tuple(Fraction(v) for v in xi)
            if not any(xi):
                raise ValueError("direction must be nonzero")
        else:
            x = tuple(float(v) for v in x)
            xi = tuple(float(v) for v in xi)
            if all(v == 0.0 for v in xi):
                raise ValueError("direction must be nonzero")
        self.x = x
        self.xi = xi
        self.is_exact = exact

    @property
    def n(self) -> int:
        return len(self.x)

    def xi_norm_sq(self):
        return sum(v * v for v in self.xi)

    def x_dot_xi(self):
        return sum(a * b for a, b in zip(self.x, self.xi))

    def project(self) -> "TSPoint":
        """The oriented-line representative: orthogonal offset, unit direction."""
        s = self.xi_norm_sq()
        c = self.x_dot_xi()
        if self.is_exact:
            xp = tuple(a - (c / s) * b for a, b in zip(self.x, self.xi))
            lam = rational_sqrt(s)
            if lam is not None:
                return TSPoint(xp, tuple(b / lam for b in self.xi))
            x, xi = [float(v) for v in xp], [float(v) for v in self.xi]
        else:
            x, xi = list(self.x), list(self.xi)
        norm = math.sqrt(sum(v * v for v in xi))
        u = [v / norm for v in xi]
        for _ in range(2):
            d = sum(a * b for a, b in zip(x, u))
            x = [a - d * b for a, b in zip(x, u)]
        return TSPoint(x, u)

    def __repr__(self) -> str:
        kind = "exact" if self.is_exact else "float"
        return f"PhasePoint(x={self.x}, xi={self.xi}, {kind})"


class TSPoint(PhasePoint):
    """An oriented line: unit direction and offset orthogonal to it.

    Exact coordinates must satisfy the constraints exactly; float coordinates
    within PROJECTION_TOL, with the residual recorded.
    """

    def __init__(self, x: Sequence, xi: Sequence):
        super().__init__(x, xi)
        if self.is_exact:
            if self.xi_norm_sq() != 1:
                raise ValueError("direction must have exact unit norm")
            if self.x_dot_xi() != 0:
                raise ValueError("offset must be exactly orthogonal to direction")
            self.projection_residual = 0.0
        else:
            res = max(abs(self.xi_norm_sq() - 1.0), abs(self.x_dot_xi()))
            if res > PROJECTION_TOL:
                raise ValueError(f"line constraints violated by {res:.3e}")
            self.projection_residual = res


def rational_unit_vector(n: int, rng: random.Random) -> tuple[Fraction, ...]:
    """A random rational vector of exact unit norm.

    Built from the rational parametrization of the circle, nested across
    coordinates, then randomly permuted.
    """
    def circle_pair():
        while True:
            a = rng.randint(-6, 6)
            b = rng.randint(-6, 6)
            if a or b:
                d = a * a + b * b
                return Fraction(a * a - b * b, d), Fraction(2 * a * b, d)

    if n == 1:
        return (Fraction(rng.choice((-1, 1))),)
    c, s = circle_pair()
    vec = [c, s]
    while len(vec) < n:
        c, s = circle_pair()
        vec = [c] + [s * v for v in vec]
    order = list(range(n))
    rng.shuffle(order)
    return tuple(vec[i] for i in order)


def _random_rational_vector(n: int, rng: random.Random) -> list[Fraction]:
    return [Fraction(rng.randint(-4, 4), rng.choice((2, 3, 4))) for _ in range(n)]


def random_ts_point(n: int, rng: random.Random) -> TSPoint:
    """A random exact oriented line with offset norm at most 3/2."""
    u = rational_unit_vector(n, rng)
    x = None
    for _ in range(16):
        y = _random_rational_vector(n, rng)
        c = sum(a * b for a, b in zip(y, u))
        cand = [a - c * b for a, b in zip(y, u)]
        if any(cand):
            x = cand
            break
    if x is None:
        x = [Fraction(0)] * n
    while sum(v * v for v in x) > Fraction(9, 4):
        x = [v / 2 for v in x]
    return TSPoint(x, u)


def random_phase_point(n: int, rng: random.Random) -> PhasePoint:
    """A random exact phase point with rational direction norm in [1/2, 2].

    The offset keeps a minimum angle to the direction so the projected line
    stays well separated from the degenerate locus.
    """
    u = rational_unit_vector(n, rng)
    lam = Fraction(rng.randint(2, 8), 4)
    xi = tuple(lam * v for v in u)
    for _ in range(64):
        x = _random_rational_vector(n, rng)
        norm2 = sum(v * v for v in x)
        while norm2 > 4:
            x = [v / 2 for v in x]
            norm2 = sum(v * v for v in x)
        c = sum(a * b for a, b in zip(x, u))
        if norm2 <= Fraction(1, 100) or c * c <= Fraction(15, 16) * norm2:
            return PhasePoint(x, xi)
    return PhasePoint([Fraction(0)] * n, xi)


def random_float_ts_point(n: int, rng: random.Random) -> TSPoint:
    """A random float-path oriented line (projected and normalized)."""
    while True:
        xi = [rng.gauss(0.0, 1.0) for _ in range(n)]
        norm = math.sqrt(sum(v * v for v in xi))
        if norm > 1e-3:
            break
    u = [v / norm for v in xi]
    x = [rng.gauss(0.0, 0.7) for _ in range(n)]
    for _ in range(2):
        c = sum(a * b for a, b in zip(x, u))
        x = [a - c * b for a, b in zip(x, u)]
    return TSPoint(x, u)


def as_float(value) -> float:
    return float(value)


def value_diff(a, b) -> float:
    """Absolute difference of two transform values, exact where possible."""
    if isinstance(a, ExactValue) and isinstance(b, ExactValue):
        try:
            return abs(float(a - b))
        except ArithmeticError:
            pass
    return abs(float(a) - float(b))


def _scaled(value, weight):
    if isinstance(value, ExactValue):
        return value.scaled(weight)
    return float(weight) * value


def _transform_value(f: SymTensor, q: int, pt: PhasePoint):
    if f.n != pt.n:
        raise ValueError("field and point dimensions differ")
    if pt.is_exact:
        acc = ExactValue.zero_value()
        for key, comp in f.items():
            weight = Fraction(tuple_multiplicity(key))
            for j in key:
                weight *= pt.xi[j - 1]
            if weight:
                acc = acc + line_moment(comp, q, pt.x, pt.xi).scaled(weight)
        return acc
    parts = []
    for key, comp in f.items():
        weight = float(tuple_multiplicity(key))
        for j in key:
            weight *= pt.xi[j - 1]
        if weight:
            parts.append(weight * line_moment(comp, q, pt.x, pt.xi))
    return math.fsum(parts)


def moment_transform(f: SymTensor, q: int, pt: TSPoint):
    """The q-th momentum transform of a field on an oriented line."""
    if not isinstance(pt, TSPoint):
        raise TypeError("moment_transform requires an oriented-line point")
    return _transform_value(f, q, pt)


def extended_transform(f: SymTensor, q: int, pt: PhasePoint):
    """The q-th transform at an arbitrary phase point (xi nonzero)."""
    if not isinstance(pt, PhasePoint):
        raise TypeError("extended_transform requires a PhasePoint")
    return _transform_value(f, q, pt)


def moment_stack(f: SymTensor, k: int, pt: TSPoint) -> list:
    """The first k+1 momentum transforms at one line."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return [moment_transform(f, q, pt) for q in range(k + 1)]


def extended_from_moments(i_values: Sequence, q: int, pt: PhasePoint, rank: int):
    """Rebuild the extended transform from moment data on the projected line.

    ``i_values`` are the transforms of orders 0..q at pt.project().  Exact
    when the direction norm is rational and the supplied values are exact.
    """
    if q < 0 or len(i_values) < q + 1:
        raise ValueError("need moment values of orders 0..q")
    s = pt.xi_norm_sq()
    c = pt.x_dot_xi()
    lam = rational_sqrt(s) if pt.is_exact else None
    exact = lam is not None and all(isinstance(v, ExactValue) for v in i_values)
    if exact:
        acc = ExactValue.zero_value()
        for ell in range(q + 1):
            coef = (Fraction((-1) ** (q - ell) * math.comb(q, ell))
                    * lam ** (rank - 2 * q - 1 + ell) * c ** (q - ell))
            acc = acc + i_values[ell].scaled(coef)
        return acc
    lamf = math.sqrt(float(s))
    cf = float(c)
    total = 0.0
    for ell in range(q + 1):
        total += ((-1) ** (q - ell) * math.comb(q, ell)
                  * lamf ** (rank - 2 * q - 1 + ell)
                  * cf ** (q - ell) * float(i_values[ell]))
    return total


class MomentAtom:
    """One transform datum: order q applied to a concrete field."""

    __slots__ = ("q", "field", "fingerprint")

    def __init__(self, q: int, field: SymTensor):
        if q < 0:
            raise ValueError("moment order must be non-negative")
        self.q = q
        self.field = field
        self.fingerprint = (q, field.fingerprint())

    @property
    def rank(self) -> int:
        return self.field.rank

    def value(self, pt: PhasePoint):
        return _transform_value(self.field, self.q, pt)


class MomentExpression:
    """A rational-linear combination of moment atoms.

    Closed under the derivative rewrites below; atoms are deduplicated by
    (order, field content) with coefficient merging so that structurally
    canceling identities collapse to the empty expression.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        self.terms = tuple(terms)

    @classmethod
    def zero(cls) -> "MomentExpression":
        return cls()

    @classmethod
    def transform(cls, f: SymTensor, q: int) -> "MomentExpression":
        atom = MomentAtom(q, f)
        if f.is_zero():
            return cls()
        return cls(((Fraction(1), atom),))

    @classmethod
    def _merge(cls, parts) -> "MomentExpression":
        acc: dict = {}
        for coef, atom in parts:
            if not coef or atom.field.is_zero():
                continue
            key = atom.fingerprint
            if key in acc:
                acc[key] = (acc[key][0] + coef, atom)
            else:
                acc[key] = (coef, atom)
        terms = [(coef, atom) for coef, atom in acc.values() if coef]
        terms.sort(key=lambda item: item[1].fingerprint)
        return cls(terms)

    def __add__(self, other: "MomentExpression") -> "MomentExpression":
        if not isinstance(other, MomentExpression):
            return NotImplemented
        return MomentExpression._merge(self.terms + other.terms)

    def __neg__(self) -> "MomentExpression":
        return MomentExpression(tuple((-c, a) for c, a in self.terms))

    def __sub__(self, other: "MomentExpression") -> "MomentExpression":
        return self + (-other)

    def __mul__(self, coef) -> "MomentExpression":
        if not is_rational(coef):
            return NotImplemented
        coef = Fraction(coef)
        if not coef:
            return MomentExpression()
        return MomentExpression(tuple((c * coef, a) for c, a in self.terms))

    __rmul__ = __mul__

    def is_empty(self) -> bool:
        return not self.terms

    def evaluate(self, pt: PhasePoint, cache: dict | None = None):
        """Value at one phase point; ``cache`` memoizes atom values at that point."""
        if pt.is_exact:
            acc = ExactValue.zero_value()
            for coef, atom in self.terms:
                value = self._atom_value(atom, pt, cache)
                acc = acc + value.scaled(coef)
            return acc
        parts = []
        for coef, atom in self.terms:
            parts.append(float(coef) * self._atom_value(atom, pt, cache))
        return math.fsum(parts)

    @staticmethod
    def _atom_value(atom: MomentAtom, pt: PhasePoint, cache: dict | None):
        if cache is None:
            return atom.value(pt)
        hit = cache.get(atom.fingerprint)
        if hit is None:
            hit = atom.value(pt)
            cache[atom.fingerprint] = hit
        return hit


def _restricted(f: SymTensor, fixed: tuple) -> SymTensor:
    cache = getattr(f, "_restrict_cache", None)
    if cache is None:
        cache = {}
        setattr(f, "_restrict_cache", cache)
    key = tuple(sorted(fixed))
    hit = cache.get(key)
    if hit is None:
        hit = restrict(f, key)
        cache[key] = hit
    return hit


def dx(e: MomentExpression, i: int) -> MomentExpression:
    """Partial derivative of transform data in the i-th base coordinate.

    Differentiation under the integral moves onto the field componentwise.
    """
    parts = []
    for coef, atom in e.terms:
        parts.append((coef, MomentAtom(atom.q, field_partial(atom.field, i))))
    return MomentExpression._merge(parts)


def dxi(e: MomentExpression, i: int) -> MomentExpression:
    """Partial derivative of transform data in the i-th direction coordinate.

    Two contributions: the line parametrization (order rises by one, field
    differentiated) and the direction contraction (rank-many copies of the
    transform of the field restricted at i).
    """
    parts = []
    for coef, atom in e.terms:
        parts.append((coef, MomentAtom(atom.q + 1, field_partial(atom.field, i))))
        r = atom.rank
        if r:
            parts.append((coef * r, MomentAtom(atom.q, _restricted(atom.field, (i,)))))
    return MomentExpression._merge(parts)


def john(e: MomentExpression, p: int, q: int) -> MomentExpression:
    """The John operator in coordinates p, q applied to transform data."""
    if p == q:
        raise ValueError("John operator requires two distinct coordinates")
    return dx(dxi(e, q), p) - dx(dxi(e, p), q)


def _john_pair(e: MomentExpression, p: int, q: int) -> MomentExpression:
    # identical coordinates give the zero operator; used by full-range sweeps
    if p == q:
        return MomentExpression.zero()
    return john(e, p, q)


def _recovery_term(r: int, p: int) -> Fraction:
    """Sign and binomial factor of the p-th term of the recovery sum."""
    return Fraction((-1) ** p * math.comb(r, p))


def recover_restricted(f: SymTensor, fixed: Sequence[int], pt: PhasePoint):
    """Transform of a restricted field rebuilt from derivatives of moment data.

    Symmetrizes over the fixed indices an alternating sum of mixed x/xi
    derivatives of the transforms of orders 0..r and evaluates at pt; equals
    the zeroth transform of the restriction of f at those indices.
    """
    m = f.rank
    fixed = tuple(fixed)
    r = len(fixed)
    if r > m:
        raise ValueError(f"cannot fix {r} indices of a rank-{m} field")
    perms = list(itertools.permutations(fixed)) or [()]
    weight = Fraction(1, len(perms))
    total = MomentExpression.zero()
    for perm in perms:
        for p in range(r + 1):
            e = MomentExpression.transform(f, p) * (_recovery_term(r, p) * weight)
            for i in perm[:p]:
                e = dx(e, i)
            for i in perm[p:]:
                e = dxi(e, i)
            total = total + e
    total = total * Fraction(math.factorial(m - r), math.factorial(m))
    return total.evaluate(pt, cache={})


def john_power_residual(f: SymTensor, k: int, fixed: Sequence[int],
                        pt: PhasePoint) -> float:
    """Iterated John operator versus the alternated-derivative transform.

    Applies the John operator m-k times to the zeroth transform of the k-fold
    restriction and compares, pairwise over all strictly ordered coordinate
    pairs, with (-2)^(m-k) (m-k)! times the scalar transform of the matching
    alternated-derivative component.  Pairs with equal coordinates vanish
    identically on both sides, and swapping one pair flips both signs, so the
    strict ordering exhausts the residual.
    """
    m = f.rank
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < rank, got k={k}, rank={m}")
    fixed = tuple(fixed)
    if len(fixed) != k:
        raise ValueError(f"expected {k} fixed indices, got {len(fixed)}")
    g = _restricted(f, fixed)
    mk = m - k
    base = MomentExpression.transform(g, 0)
    alt = alternated_derivative(g)
    scale = Fraction((-2) ** mk * math.factorial(mk))
    pair_choices = [(p, q) for p in range(1, f.n + 1)
                    for q in range(p + 1, f.n + 1)]
    cache: dict = {}
    best = 0.0
    for pairs in itertools.product(pair_choices, repeat=mk):
        e = base
        for p, q in pairs:
            e = john(e, p, q)
        lhs = e.evaluate(pt, cache)
        idx = tuple(itertools.chain.from_iterable(pairs))
        comp = alt.get(idx)
        rhs = _scaled(line_moment(comp, 0, pt.x, pt.xi), scale)
        best = max(best, value_diff(lhs, rhs))
    return best


def collapsed_derivative_residual(f: SymTensor, k: int, fixed: Sequence[int],
                                  pt: PhasePoint) -> float:
    """Direction contraction of iterated John data versus pure x-derivatives.

    For every derivative multi-index the contraction of the (m-k)-fold John
    data against the direction components must equal (-1)^(m-k) (m-k)! times
    the corresponding x-derivative of the restricted transform; holds with no
    kernel hypothesis on f.
    """
    m = f.rank
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < rank, got k={k}, rank={m}")
    fixed = tuple(fixed)
    if len(fixed) != k:
        raise ValueError(f"expected {k} fixed indices, got {len(fixed)}")
    g = _restricted(f, fixed)
    mk = m - k
    base = MomentExpression.transform(g, 0)
    sign = Fraction((-1) ** mk * math.factorial(mk))
    cache: dict = {}
    best = 0.0
    for qt in itertools.product(range(1, f.n + 1), repeat=mk):
        if pt.is_exact:
            acc = ExactValue.zero_value()
        else:
            acc = 0.0
        for ptuple in itertools.product(range(1, f.n + 1), repeat=mk):
            if any(pa == qa for pa, qa in zip(ptuple, qt)):
                continue
            e = base
            for pa, qa in zip(ptuple, qt):
                e = john(e, pa, qa)
            weight = Fraction(1) if pt.is_exact else 1.0
            for pa in ptuple:
                weight = weight * pt.xi[pa - 1]
            acc = acc + _scaled(e.evaluate(pt, cache), weight)
        rhs_e = base
        for i in qt:
            rhs_e = dx(rhs_e, i)
        rhs = _scaled(rhs_e.evaluate(pt, cache), sign)
        best = max(best, value_diff(acc, rhs))
    return best


def symmetrization_split_residual(t: RawTensor, k: int):
    """Full symmetrization versus its two-term split for block-symmetric input.

    The input must be symmetric in its first rank-k and last k positions.
    Returns the largest absolute component difference, exact on rational
    tensors (so zero certifies the identity).
    """
    m = t.rank
    if not 0 <= k <= m:
        raise ValueError(f"split k={k} outside [0, {m}]")
    front = tuple(range(1, m - k + 1))
    back = tuple(range(m - k + 1, m + 1))
    if len(front) >= 2 and symmetrize(t, front) != t:
        raise ValueError("input not symmetric in its leading block")
    if len(back) >= 2 and symmetrize(t, back) != t:
        raise ValueError("input not symmetric in its trailing block")
    if k == 0:
        return Fraction(0)
    lhs = symmetrize(t, tuple(range(1, m + 1)))
    rotated = {}
    for idx in itertools.product(range(1, t.n + 1), repeat=m):
        value = t.get((idx[-1],) + idx[:-1])
        if value != t.zero:
            rotated[idx] = value
    rot = RawTensor(t.n, m, rotated, t.zero)
    inner = t * Fraction(k) + rot * Fraction(m - k)
    if m == 1:
        rhs = inner * Fraction(1, m)
    else:
        rhs = symmetrize(inner, tuple(range(1, m))) * Fraction(1, m)
    diff = lhs - rhs
    best = Fraction(0)
    for _, value in diff.items():
        best = max(best, abs(value))
    return best


def symmetrized_derivative_residual(f: SymTensor, r: int, pt: PhasePoint) -> float:
    """Symmetrized spatial derivatives of restricted moment data.

    For each canonical index tuple, averages over its rearrangements the
    (rank-r)-fold x-derivative of the zeroth transform of the r-fold
    restriction; vanishes whenever the order-r operator annihilates f.
    """
    m = f.rank
    if not 0 <= r <= m:
        raise ValueError(f"restriction depth r={r} outside [0, {m}]")
    mk = m - r
    cache: dict = {}
    best = 0.0
    for key in all_canonical_tuples(f.n, m):
        rearr = distinct_rearrangements(key)
        weight = Fraction(1, len(rearr))
        total = MomentExpression.zero()
        for perm in rearr:
            e = MomentExpression.transform(_restricted(f, perm[mk:]), 0)
            for i in perm[:mk]:
                e = dx(e, i)
            total = total + e * weight
        best = max(best, abs(float(total.evaluate(pt, cache))))
    return best


def restriction_contraction_residual(f: SymTensor, fixed: Sequence[int], k: int,
                                     pt: PhasePoint) -> float:
    """Transform of a deeper restriction versus the contracted shallower one.

    The zeroth transform of an r-fold restriction equals the sum over the
    remaining k-r fixed indices, weighted by direction components, of the
    k-fold restriction's transform.
    """
    fixed = tuple(fixed)
    r = len(fixed)
    if not r <= k <= f.rank:
        raise ValueError(f"need len(fixed) <= k <= rank, got {r}, {k}, {f.rank}")
    lhs = extended_transform(_restricted(f, fixed), 0, pt)
    if pt.is_exact:
        acc = ExactValue.zero_value()
    else:
        acc = 0.0
    for tail in itertools.product(range(1, f.n + 1), repeat=k - r):
        weight = Fraction(1) if pt.is_exact else 1.0
        for j in tail:
            weight = weight * pt.xi[j - 1]
        value = _scaled(extended_transform(_restricted(f, fixed + tail), 0, pt),
                        weight)
        acc = acc + value
    return value_diff(lhs, acc)


def directional_x_derivative(e: MomentExpression, pt: PhasePoint):
    """Evaluate the direction-contracted x-gradient of transform data at pt."""
    if pt.is_exact:
        acc = ExactValue.zero_value()
        cache: dict = {}
        for i in range(1, pt.n + 1):
            acc = acc + dx(e, i).evaluate(pt, cache).scaled(pt.xi[i - 1])
        return acc
    cache = {}
    return math.fsum(pt.xi[i - 1] * dx(e, i).evaluate(pt, cache)
                     for i in range(1, pt.n + 1))


def directional_xi_derivative(e: MomentExpression, pt: PhasePoint):
    """Evaluate the direction-contracted xi-gradient of transform data at pt."""
    if pt.is_exact:
        acc = ExactValue.zero_value()
        cache: dict = {}
        for i in range(1, pt.n + 1):
            acc = acc + dxi(e, i).evaluate(pt, cache).scaled(pt.xi[i - 1])
        return acc
    cache = {}
    return math.fsum(pt.xi[i - 1] * dxi(e, i).evaluate(pt, cache)
                     for i in range(1, pt.n + 1))
