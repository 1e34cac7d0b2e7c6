"""Independent oracles shared by the test modules."""

import math

import numpy as np
import pytest


def direct_e2e(paths, alphas, t_rnd, k):
    """(1/k) sum_i sum_j T_i^(j) by explicit per-round evaluation."""
    total = 0.0
    for path, alpha in zip(paths, alphas):
        i = np.arange(1, k + 1)
        blocks = np.ceil(i / alpha)
        windows = np.minimum(path.w_max, path.w1 + blocks - 1)
        total += math.fsum(windows / (alpha * t_rnd))
    return total / k


def _slow_mul(a, b):
    # Shift-and-add multiplication modulo x^8 + x^4 + x^3 + x^2 + 1.
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11D
        b >>= 1
    return r


def slow_mul(a, b):
    return _slow_mul(int(a), int(b))


def gf_rank(matrix):
    """Rank over GF(256) by plain Gaussian elimination on a copy."""
    m = [list(map(int, row)) for row in matrix]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        pivot = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = next(x for x in range(1, 256) if _slow_mul(m[rank][c], x) == 1)
        m[rank] = [_slow_mul(v, inv) for v in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c]
                m[r] = [v ^ _slow_mul(f, w) for v, w in zip(m[r], m[rank])]
        rank += 1
    return rank


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
