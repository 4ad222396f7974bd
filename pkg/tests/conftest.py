import itertools
import math
import random
from fractions import Fraction

import pytest

from raymoments import (
    RawTensor,
    SymTensor,
    line_moment_quadrature,
    tuple_multiplicity,
)


def brute_symmetrize(t: RawTensor, positions) -> RawTensor:
    """Reference symmetrization: plain average over all |group|! permutations."""
    slots = [p - 1 for p in positions]
    perms = list(itertools.permutations(slots))
    keys = set()
    for key in t.components:
        for perm in perms:
            new = list(key)
            for dst, src in zip(slots, perm):
                new[dst] = key[src]
            keys.add(tuple(new))
    data = {}
    for key in keys:
        acc = t.zero
        for perm in perms:
            new = list(key)
            for dst, src in zip(slots, perm):
                new[dst] = key[src]
            acc = acc + t.get(tuple(new))
        data[key] = acc * Fraction(1, len(perms))
    return RawTensor(t.n, t.rank, data, t.zero)


def quad_transform(f: SymTensor, q: int, x, xi) -> float:
    """Float transform evaluated through the quadrature oracle, component-wise."""
    xf = [float(v) for v in x]
    xif = [float(v) for v in xi]
    total = 0.0
    for key, comp in f.items():
        weight = float(tuple_multiplicity(key))
        for j in key:
            weight *= xif[j - 1]
        if weight:
            total += weight * line_moment_quadrature(comp, q, xf, xif)
    return total


def random_raw(n: int, rank: int, rng: random.Random) -> RawTensor:
    data = {}
    for idx in itertools.product(range(1, n + 1), repeat=rank):
        num = rng.randint(-9, 9)
        if num:
            data[idx] = Fraction(num, rng.choice((1, 2, 3)))
    return RawTensor(n, rank, data)


@pytest.fixture
def rng():
    return random.Random(20240811)
