"""Differential operators on symmetric tensor fields.

Implements the symmetrized gradient (inner derivative), the Saint Venant
compatibility operator, its generalized order-k variant, and the equivalent
alternated-derivative form together with the linear conversions between the
two.  Everything runs in exact rational coefficient arithmetic; no floating
point enters this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .polygauss import PolyGauss
from .symtensor import (
    BiSymTensor,
    RawTensor,
    SymTensor,
    all_canonical_tuples,
    alternate,
    canonical,
    distinct_rearrangements,
)
from .symtensor import restrict as restrict_field


def _series_term(count: int, ell: int) -> Fraction:
    """Coefficient of the ell-th term of the alternating binomial sum."""
    return Fraction((-1) ** ell * math.comb(count, ell))


def _field_cache(f: SymTensor) -> dict:
    cache = getattr(f, "_derivative_cache", None)
    if cache is None:
        cache = {}
        setattr(f, "_derivative_cache", cache)
    return cache


def _component_derivative(f: SymTensor, comp, derivs) -> PolyGauss:
    """Iterated partial derivative of one component, memoized per field.

    The derivative index order is immaterial (mixed partials commute), so the
    cache key uses the sorted multiset.
    """
    comp = canonical(comp)
    derivs = tuple(sorted(derivs))
    cache = _field_cache(f)
    hit = cache.get((comp, derivs))
    if hit is not None:
        return hit
    value = f.get(comp)
    done = ()
    for i in derivs:
        done = done + (i,)
        nxt = cache.get((comp, done))
        if nxt is None:
            nxt = value.derive(i)
            cache[(comp, done)] = nxt
        value = nxt
    return value


def inner_derivative(u: SymTensor) -> SymTensor:
    """Symmetrized gradient, raising the rank by one.

    The value at indices J is the average over slots a of the partial
    derivative of u at J minus slot a, taken in the J_a direction.
    """
    m = u.rank
    data = {}
    for key in all_canonical_tuples(u.n, m + 1):
        acc = u.zero
        for a in range(m + 1):
            rest = key[:a] + key[a + 1:]
            acc = acc + _component_derivative(u, rest, (key[a],))
        data[key] = acc * Fraction(1, m + 1)
    return SymTensor(u.n, m + 1, data, u.zero)


def iterate_d(v: SymTensor, times: int) -> SymTensor:
    """The inner derivative applied ``times`` times."""
    if times < 0:
        raise ValueError("times must be non-negative")
    out = v
    for _ in range(times):
        out = inner_derivative(out)
    return out


def _sigma_pair_average(n, group1_key, group2_key, raw_value) -> "object":
    """Average raw_value(t1, t2) over distinct rearrangements of both groups."""
    arr1 = distinct_rearrangements(group1_key) if group1_key else [()]
    arr2 = distinct_rearrangements(group2_key) if group2_key else [()]
    acc = None
    for t1 in arr1:
        for t2 in arr2:
            term = raw_value(t1, t2)
            acc = term if acc is None else acc + term
    return acc * Fraction(1, len(arr1) * len(arr2))


def _position_splits(key, size):
    """All (kept, taken) partitions of a tuple by position subsets of ``size``.

    Averaging a split-dependent quantity over all orderings of a group equals
    the plain average over these position subsets, because the quantity only
    sees each part as a multiset.
    """
    positions = range(len(key))
    out = []
    for chosen in itertools.combinations(positions, size):
        taken = tuple(key[i] for i in chosen)
        chosen_set = set(chosen)
        kept = tuple(key[i] for i in positions if i not in chosen_set)
        out.append((kept, taken))
    return out


def saint_venant(f: SymTensor) -> BiSymTensor:
    """The Saint Venant compatibility operator on a rank-m field.

    Produces a field with two symmetric rank-m groups; its kernel on decaying
    fields is exactly the image of the inner derivative.  For m = 1 it reduces
    to the curl-type integrability condition.
    """
    m = f.rank
    if m < 1:
        raise ValueError("saint_venant requires rank >= 1")
    data = {}
    for ikey in all_canonical_tuples(f.n, m):
        i_splits = {ell: _position_splits(ikey, ell) for ell in range(m + 1)}
        for jkey in all_canonical_tuples(f.n, m):
            acc = f.zero
            for ell in range(m + 1):
                # series coefficient, then one split average per index group
                weight = _series_term(m, ell) * Fraction(1, math.comb(m, ell) ** 2)
                for j_derivs, j_comp in _position_splits(jkey, ell):
                    for i_comp, i_derivs in i_splits[ell]:
                        term = _component_derivative(f, i_comp + j_comp,
                                                     j_derivs + i_derivs)
                        acc = acc + term * weight
            data[(ikey, jkey)] = acc
    return BiSymTensor(f.n, m, m, data, f.zero)


def generalized_saint_venant(f: SymTensor, k: int) -> BiSymTensor:
    """The order-k generalization of the Saint Venant operator.

    The output has a symmetric group of rank m-k and a combined symmetric
    group of rank m (the unrestricted slots together with the k fixed ones).
    It is a differential operator of order m-k; at k = m it degenerates to
    the identity on an already symmetric field.
    """
    m = f.rank
    if not 0 <= k <= m:
        raise ValueError(f"order k={k} outside [0, {m}]")
    mk = m - k
    norm_i = math.comb(m, k)
    data = {}
    for pkey in all_canonical_tuples(f.n, mk):
        p_splits = {ell: _position_splits(pkey, ell) for ell in range(mk + 1)}
        for ckey in all_canonical_tuples(f.n, m):
            acc = f.zero
            for q_full, i_part in _position_splits(ckey, k):
                for ell in range(mk + 1):
                    weight = _series_term(mk, ell) * Fraction(
                        1, norm_i * math.comb(mk, ell) ** 2)
                    for q_derivs, q_comp in _position_splits(q_full, ell):
                        for p_comp, p_derivs in p_splits[ell]:
                            term = _component_derivative(
                                f, i_part + p_comp + q_comp, p_derivs + q_derivs)
                            acc = acc + term * weight
            data[(pkey, ckey)] = acc
    return BiSymTensor(f.n, mk, m, data, f.zero)


def _interleave(i_tuple, j_tuple):
    out = []
    for a, b in zip(i_tuple, j_tuple):
        out.append(a)
        out.append(b)
    return tuple(out)


def alternated_derivative(f: SymTensor) -> RawTensor:
    """The m-fold pair alternation of the m-th derivative tensor.

    Index layout interleaves component and derivative slots pairwise:
    (i1, j1, i2, j2, ...).  The result is antisymmetric within each pair and
    vanishes on inner-derivative images.
    """
    m = f.rank
    if m < 1:
        raise ValueError("alternated_derivative requires rank >= 1")
    data = {}
    for idx in itertools.product(range(1, f.n + 1), repeat=2 * m):
        comp = idx[0::2]
        derivs = idx[1::2]
        value = _component_derivative(f, comp, derivs)
        if not value.is_zero():
            data[idx] = value
    out = RawTensor(f.n, 2 * m, data, f.zero)
    for a in range(m):
        out = alternate(out, (2 * a + 1, 2 * a + 2))
    return out


def saint_venant_from_alternated(rf: RawTensor) -> BiSymTensor:
    """Symmetrize the pair slots of an alternated derivative tensor.

    Averaging the interleaved tensor over each index group and scaling by
    2^m reproduces the Saint Venant output exactly (each of the m pair
    alternations halves the alternating sum that the operator expands into).
    """
    if rf.rank % 2:
        raise ValueError("expected an even-rank pairwise tensor")
    m = rf.rank // 2
    if m < 1:
        raise ValueError("expected rank >= 2")
    scale = Fraction(2 ** m)

    def raw(i_tuple, j_tuple):
        return rf.get(_interleave(i_tuple, j_tuple))

    data = {}
    for ikey in all_canonical_tuples(rf.n, m):
        for jkey in all_canonical_tuples(rf.n, m):
            data[(ikey, jkey)] = _sigma_pair_average(rf.n, ikey, jkey, raw) * scale
    return BiSymTensor(rf.n, m, m, data, rf.zero)


def alternated_from_saint_venant(wf: BiSymTensor) -> RawTensor:
    """Recover the alternated derivative tensor from Saint Venant output.

    Applies the pair alternations to the interleaved tensor and divides by
    m + 1; inverse to saint_venant_from_alternated on operator images.
    """
    if wf.rank1 != wf.rank2:
        raise ValueError("expected equal-rank index groups")
    m = wf.rank1
    if m < 1:
        raise ValueError("expected rank >= 1")
    scale = Fraction(1, m + 1)
    data = {}
    for idx in itertools.product(range(1, wf.n + 1), repeat=2 * m):
        value = wf.get(idx[0::2], idx[1::2]) * scale
        if value != wf.zero:
            data[idx] = value
    out = RawTensor(wf.n, 2 * m, data, wf.zero)
    for a in range(m):
        out = alternate(out, (2 * a + 1, 2 * a + 2))
    return out


def restriction_relation_residual(f: SymTensor, k: int) -> Fraction:
    """Order-k operator versus symmetrized Saint Venant of restrictions.

    For every fixed k-tuple, symmetrizing the Saint Venant output of the
    restricted field over the combined (free, fixed) group reproduces the
    generalized operator.  Returns the largest absolute coefficient of the
    difference; exact, so zero certifies the identity.
    """
    m = f.rank
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < rank, got k={k}, rank={m}")
    mk = m - k
    wk = generalized_saint_venant(f, k)
    w_of_restriction = {
        ikey: saint_venant(restrict_field(f, ikey))
        for ikey in all_canonical_tuples(f.n, k)
    }
    best = Fraction(0)
    for pkey in all_canonical_tuples(f.n, mk):
        for ckey in all_canonical_tuples(f.n, m):
            rearr = distinct_rearrangements(ckey)
            acc = f.zero
            for perm in rearr:
                q_part, i_part = perm[:mk], perm[mk:]
                acc = acc + w_of_restriction[canonical(i_part)].get(pkey, q_part)
            rhs = acc * Fraction(1, len(rearr))
            diff = wk.get(pkey, ckey) - rhs
            best = max(best, diff.poly.max_abs_coefficient())
    return best


@dataclass(frozen=True)
class OperatorReport:
    """Exact-zero certificate for an operator result."""

    max_abs_coefficient: Fraction
    is_zero: bool


def operator_report(t) -> OperatorReport:
    """Scan a tensor of PolyGauss components for its exact-zero status."""
    best = Fraction(0)
    empty = True
    for _, value in t.items():
        best = max(best, value.poly.max_abs_coefficient())
        if not value.is_zero():
            empty = False
    return OperatorReport(max_abs_coefficient=best, is_zero=empty)
