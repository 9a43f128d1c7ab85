"""Reference implementations kept independent of the package under test."""

from __future__ import annotations

import itertools

import numpy as np


def shift_and_reduce_mul(a: int, b: int, q: int = 8, poly: int = 0x11D) -> int:
    """Carry-less multiply then reduce, one bit of ``b`` at a time."""
    result = 0
    for _ in range(q):
        if b & 1:
            result ^= a
        b >>= 1
        carry = a & (1 << (q - 1))
        a = (a << 1) & ((1 << q) - 1)
        if carry:
            a ^= poly & ((1 << q) - 1)
    return result


def mul_table(q: int = 8, poly: int = 0x11D) -> np.ndarray:
    size = 1 << q
    return np.array([[shift_and_reduce_mul(a, b, q, poly) for b in range(size)]
                     for a in range(size)], dtype=np.int64)


def inverse_by_search(a: int, q: int = 8, poly: int = 0x11D) -> int:
    for x in range(1, 1 << q):
        if shift_and_reduce_mul(a, x, q, poly) == 1:
            return x
    raise ZeroDivisionError(a)


def det(matrix, table: np.ndarray) -> int:
    """Leibniz-formula determinant; in characteristic 2 every sign is +."""
    n = len(matrix)
    total = 0
    for perm in itertools.permutations(range(n)):
        term = 1
        for i, j in enumerate(perm):
            term = int(table[term, int(matrix[i][j])])
        total ^= term
    return total


def brute_force_rank(rows, q: int) -> int:
    """Rank via the size of the span: |span| = 2^(q * rank). Tiny fields only."""
    table = mul_table(q, {1: 0x3, 2: 0x7, 3: 0xB, 4: 0x13}[q])
    m = len(rows[0]) if rows else 0
    span = {tuple([0] * m)}
    for row in rows:
        span = {tuple(s ^ int(table[c, v]) for s, v in zip(vec, row))
                for vec in span for c in range(1 << q)}
    return (len(span).bit_length() - 1) // q


def draws_until_full_rank(m: int, q: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Draw uniform vectors in GF(2^q)^m until m are independent; count draws.

    All trials advance in lockstep against an incremental echelon basis.
    """
    poly = {1: 0x3, 2: 0x7, 3: 0xB, 4: 0x13, 8: 0x11D}[q]
    table = mul_table(q, poly)
    inv = np.zeros(1 << q, dtype=np.int64)
    for a in range(1, 1 << q):
        inv[a] = inverse_by_search(a, q, poly)
    basis = np.zeros((trials, m, m), dtype=np.int64)
    pivots = np.full((trials, m), -1)
    rank = np.zeros(trials, dtype=np.int64)
    draws = np.zeros(trials, dtype=np.int64)
    rows = np.arange(trials)
    while True:
        live = rows[rank < m]
        if live.size == 0:
            return draws
        v = rng.integers(0, 1 << q, size=(live.size, m))
        draws[live] += 1
        for k in range(m):
            has = pivots[live, k] >= 0
            col = np.where(has, pivots[live, k], 0)
            coef = np.where(has, v[np.arange(live.size), col], 0)
            v ^= table[coef[:, None], basis[live, k]]
        nonzero = v.any(axis=1)
        grow = live[nonzero]
        v = v[nonzero]
        lead = (v != 0).argmax(axis=1)
        v = table[inv[v[np.arange(len(v)), lead]][:, None], v]
        slot = rank[grow]
        basis[grow, slot] = v
        pivots[grow, slot] = lead
        rank[grow] += 1
