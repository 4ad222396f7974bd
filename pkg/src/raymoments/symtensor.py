"""Sparse storage and index algebra for symmetric and block-symmetric tensors.

Tensors are stored as mappings from canonical index tuples to scalar values,
with missing keys meaning zero.  Indices are 1-based and the canonical form of
a symmetric index group is the non-decreasing ordering.  The scalar type is
generic: anything supporting addition with itself and multiplication by
``fractions.Fraction`` works (rationals, floats, polynomial-Gaussian values,
formal moment expressions).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Any, Iterable, Iterator, Sequence

Index = tuple[int, ...]


def canonical(indices: Iterable[int]) -> Index:
    """Return the canonical (non-decreasing) form of an index tuple."""
    return tuple(sorted(indices))


def _check_indices(indices: Sequence[int], n: int) -> Index:
    idx = tuple(indices)
    for i in idx:
        if not isinstance(i, int) or isinstance(i, bool) or not 1 <= i <= n:
            raise ValueError(f"index {i!r} outside [1, {n}]")
    return idx


def all_canonical_tuples(n: int, rank: int) -> Iterator[Index]:
    """All canonical index tuples of the given rank, in lexicographic order."""
    return itertools.combinations_with_replacement(range(1, n + 1), rank)


def tuple_multiplicity(indices: Sequence[int]) -> int:
    """Number of distinct rearrangements of an index tuple."""
    counts = {}
    for i in indices:
        counts[i] = counts.get(i, 0) + 1
    mult = math.factorial(len(indices))
    for c in counts.values():
        mult //= math.factorial(c)
    return mult


def distinct_rearrangements(indices: Sequence[int]) -> list[Index]:
    """All distinct orderings of an index tuple (each exactly once)."""
    return sorted(set(itertools.permutations(indices)))


class SymTensor:
    """A fully symmetric tensor over an arbitrary scalar type.

    Component lookup accepts the indices in any order; storage keeps one value
    per canonical tuple and never stores the zero scalar.
    """

    def __init__(self, n: int, rank: int, components: dict | None = None,
                 zero: Any = Fraction(0)):
        if n < 1:
            raise ValueError("dimension must be positive")
        if rank < 0:
            raise ValueError("rank must be non-negative")
        self.n = n
        self.rank = rank
        self.zero = zero
        data = {}
        for key, value in (components or {}).items():
            idx = canonical(_check_indices(key, n))
            if len(idx) != rank:
                raise ValueError(f"key {key} has length {len(idx)}, expected {rank}")
            if idx in data:
                raise ValueError(f"duplicate canonical key {idx}")
            if value != zero:
                data[idx] = value
        self.components = data

    def get(self, indices: Sequence[int]):
        idx = canonical(_check_indices(indices, self.n))
        if len(idx) != self.rank:
            raise ValueError(f"expected {self.rank} indices, got {len(idx)}")
        return self.components.get(idx, self.zero)

    def items(self):
        return sorted(self.components.items())

    def is_zero(self) -> bool:
        return not self.components

    def _compat(self, other: "SymTensor") -> None:
        if not isinstance(other, SymTensor):
            raise TypeError("expected a SymTensor")
        if self.n != other.n or self.rank != other.rank:
            raise ValueError("dimension or rank mismatch")

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._compat(other)
        data = dict(self.components)
        for key, value in other.components.items():
            data[key] = data[key] + value if key in data else value
        return SymTensor(self.n, self.rank, data, self.zero)

    def __neg__(self) -> "SymTensor":
        return self * Fraction(-1)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        return self + (-other)

    def __mul__(self, coef) -> "SymTensor":
        if isinstance(coef, int):
            coef = Fraction(coef)
        data = {k: v * coef for k, v in self.components.items()}
        return SymTensor(self.n, self.rank, data, self.zero)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, SymTensor) and self.n == other.n
                and self.rank == other.rank and self.components == other.components)

    def __repr__(self) -> str:
        return f"SymTensor(n={self.n}, rank={self.rank}, nnz={len(self.components)})"

    def fingerprint(self) -> tuple:
        """Hashable content identity, used for value-level deduplication."""
        cached = getattr(self, "_fingerprint", None)
        if cached is None:
            parts = []
            for key, value in self.items():
                fp = value.fingerprint() if hasattr(value, "fingerprint") else value
                parts.append((key, fp))
            cached = (self.n, self.rank, tuple(parts))
            setattr(self, "_fingerprint", cached)
        return cached


class BiSymTensor:
    """A tensor with two independently symmetric index groups.

    Symmetric within each group, with no symmetry across groups.
    """

    def __init__(self, n: int, rank1: int, rank2: int,
                 components: dict | None = None, zero: Any = Fraction(0)):
        if n < 1:
            raise ValueError("dimension must be positive")
        if rank1 < 0 or rank2 < 0:
            raise ValueError("ranks must be non-negative")
        self.n = n
        self.rank1 = rank1
        self.rank2 = rank2
        self.zero = zero
        data = {}
        for (k1, k2), value in (components or {}).items():
            i1 = canonical(_check_indices(k1, n))
            i2 = canonical(_check_indices(k2, n))
            if len(i1) != rank1 or len(i2) != rank2:
                raise ValueError(f"key {(k1, k2)} does not match ranks "
                                 f"({rank1}, {rank2})")
            if (i1, i2) in data:
                raise ValueError(f"duplicate canonical key {(i1, i2)}")
            if value != zero:
                data[(i1, i2)] = value
        self.components = data

    def get(self, group1: Sequence[int], group2: Sequence[int]):
        i1 = canonical(_check_indices(group1, self.n))
        i2 = canonical(_check_indices(group2, self.n))
        if len(i1) != self.rank1 or len(i2) != self.rank2:
            raise ValueError("index group lengths do not match ranks")
        return self.components.get((i1, i2), self.zero)

    def items(self):
        return sorted(self.components.items())

    def is_zero(self) -> bool:
        return not self.components

    def __add__(self, other: "BiSymTensor") -> "BiSymTensor":
        if not isinstance(other, BiSymTensor):
            raise TypeError("expected a BiSymTensor")
        if (self.n, self.rank1, self.rank2) != (other.n, other.rank1, other.rank2):
            raise ValueError("dimension or rank mismatch")
        data = dict(self.components)
        for key, value in other.components.items():
            data[key] = data[key] + value if key in data else value
        return BiSymTensor(self.n, self.rank1, self.rank2, data, self.zero)

    def __neg__(self) -> "BiSymTensor":
        return self * Fraction(-1)

    def __sub__(self, other: "BiSymTensor") -> "BiSymTensor":
        return self + (-other)

    def __mul__(self, coef) -> "BiSymTensor":
        if isinstance(coef, int):
            coef = Fraction(coef)
        data = {k: v * coef for k, v in self.components.items()}
        return BiSymTensor(self.n, self.rank1, self.rank2, data, self.zero)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, BiSymTensor) and self.n == other.n
                and self.rank1 == other.rank1 and self.rank2 == other.rank2
                and self.components == other.components)

    def __repr__(self) -> str:
        return (f"BiSymTensor(n={self.n}, ranks=({self.rank1}, {self.rank2}), "
                f"nnz={len(self.components)})")


class RawTensor:
    """A tensor with no index symmetry, keyed by full index tuples."""

    def __init__(self, n: int, rank: int, components: dict | None = None,
                 zero: Any = Fraction(0)):
        if n < 1:
            raise ValueError("dimension must be positive")
        if rank < 0:
            raise ValueError("rank must be non-negative")
        self.n = n
        self.rank = rank
        self.zero = zero
        data = {}
        for key, value in (components or {}).items():
            idx = _check_indices(key, n)
            if len(idx) != rank:
                raise ValueError(f"key {key} has length {len(idx)}, expected {rank}")
            if value != zero:
                data[idx] = value
        self.components = data

    def get(self, indices: Sequence[int]):
        idx = _check_indices(indices, self.n)
        if len(idx) != self.rank:
            raise ValueError(f"expected {self.rank} indices, got {len(idx)}")
        return self.components.get(idx, self.zero)

    def items(self):
        return sorted(self.components.items())

    def is_zero(self) -> bool:
        return not self.components

    def __add__(self, other: "RawTensor") -> "RawTensor":
        if not isinstance(other, RawTensor):
            raise TypeError("expected a RawTensor")
        if self.n != other.n or self.rank != other.rank:
            raise ValueError("dimension or rank mismatch")
        data = dict(self.components)
        for key, value in other.components.items():
            data[key] = data[key] + value if key in data else value
        return RawTensor(self.n, self.rank, data, self.zero)

    def __neg__(self) -> "RawTensor":
        return self * Fraction(-1)

    def __sub__(self, other: "RawTensor") -> "RawTensor":
        return self + (-other)

    def __mul__(self, coef) -> "RawTensor":
        if isinstance(coef, int):
            coef = Fraction(coef)
        data = {k: v * coef for k, v in self.components.items()}
        return RawTensor(self.n, self.rank, data, self.zero)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (isinstance(other, RawTensor) and self.n == other.n
                and self.rank == other.rank and self.components == other.components)

    def __repr__(self) -> str:
        return f"RawTensor(n={self.n}, rank={self.rank}, nnz={len(self.components)})"


def _check_positions(positions: Sequence[int], rank: int) -> tuple[int, ...]:
    pos = tuple(positions)
    if len(set(pos)) != len(pos):
        raise ValueError("positions must be distinct")
    for p in pos:
        if not isinstance(p, int) or not 1 <= p <= rank:
            raise ValueError(f"position {p} outside [1, {rank}]")
    return pos


def symmetrize(t: RawTensor, positions: Sequence[int]) -> RawTensor:
    """Average a raw tensor over all permutations of the selected positions.

    A linear projector: symmetric in the selected positions, identity on the
    rest.  Averaging runs over distinct rearrangements only, which gives the
    same result as the full permutation average.
    """
    pos = _check_positions(positions, t.rank)
    if not pos:
        raise ValueError("position set must be non-empty")
    slots = [p - 1 for p in pos]

    def rearranged(idx: Index) -> list[Index]:
        sub = tuple(idx[s] for s in slots)
        out = []
        for arr in distinct_rearrangements(sub):
            new = list(idx)
            for s, v in zip(slots, arr):
                new[s] = v
            out.append(tuple(new))
        return out

    orbit = set()
    for key in t.components:
        orbit.update(rearranged(key))
    data = {}
    for key in orbit:
        variants = rearranged(key)
        acc = t.get(variants[0])
        for var in variants[1:]:
            acc = acc + t.get(var)
        data[key] = acc * Fraction(1, len(variants))
    return RawTensor(t.n, t.rank, data, t.zero)


def alternate(t: RawTensor, pos_pair: tuple[int, int]) -> RawTensor:
    """Antisymmetrize a raw tensor in a pair of positions.

    Returns (t - t with the two positions swapped) / 2.
    """
    a, b = pos_pair
    if a == b:
        raise ValueError("alternation positions must be distinct")
    _check_positions((a, b), t.rank)
    sa, sb = a - 1, b - 1

    def swapped(idx: Index) -> Index:
        new = list(idx)
        new[sa], new[sb] = new[sb], new[sa]
        return tuple(new)

    orbit = set(t.components)
    orbit.update(swapped(k) for k in t.components)
    half = Fraction(1, 2)
    data = {}
    for key in orbit:
        data[key] = (t.get(key) - t.get(swapped(key))) * half
    return RawTensor(t.n, t.rank, data, t.zero)


def sym_part(t: RawTensor) -> SymTensor:
    """Full symmetrization of a raw tensor, in canonical storage."""
    data = {}
    for key in all_canonical_tuples(t.n, t.rank):
        variants = distinct_rearrangements(key)
        acc = t.get(variants[0])
        for var in variants[1:]:
            acc = acc + t.get(var)
        data[key] = acc * Fraction(1, len(variants))
    return SymTensor(t.n, t.rank, data, t.zero)


def raw_from_sym(t: SymTensor) -> RawTensor:
    """Expand canonical symmetric storage into full-tuple storage."""
    data = {}
    for key, value in t.components.items():
        for arr in distinct_rearrangements(key):
            data[arr] = value
    return RawTensor(t.n, t.rank, data, t.zero)


def restrict(f: SymTensor, fixed: Sequence[int]) -> SymTensor:
    """Fix leading indices of a symmetric tensor, lowering its rank.

    The result at j-indices is the component of ``f`` at (fixed, j-indices);
    by symmetry the choice of slots is immaterial.
    """
    fixed = _check_indices(fixed, f.n)
    if len(fixed) > f.rank:
        raise ValueError(f"cannot fix {len(fixed)} indices of a rank-{f.rank} tensor")
    rank = f.rank - len(fixed)
    data = {}
    for key in all_canonical_tuples(f.n, rank):
        value = f.get(fixed + key)
        if value != f.zero:
            data[key] = value
    return SymTensor(f.n, rank, data, f.zero)


def contract_with_power(t: SymTensor, v: Sequence, p: int) -> SymTensor:
    """Contract the first ``p`` slots of a symmetric tensor with a vector.

    Sums t[j1..jp, k...] * v[j1] * ... * v[jp]; which slots are contracted is
    immaterial by symmetry.
    """
    if len(v) != t.n:
        raise ValueError(f"vector has length {len(v)}, expected {t.n}")
    if not 0 <= p <= t.rank:
        raise ValueError(f"cannot contract {p} slots of a rank-{t.rank} tensor")
    if p == 0:
        return t
    data = {}
    for key in all_canonical_tuples(t.n, t.rank - p):
        acc = None
        for js in itertools.product(range(1, t.n + 1), repeat=p):
            weight = Fraction(1)
            for j in js:
                weight = weight * v[j - 1]
            term = t.get(js + key) * weight
            acc = term if acc is None else acc + term
        if acc != t.zero:
            data[key] = acc
    return SymTensor(t.n, t.rank - p, data, t.zero)
