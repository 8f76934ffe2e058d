"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths: dense
matrix expansion from first principles, brute-force enumeration of error
placements, decision paths and sub-multisets.  Tests compare library
results against these, never the other way around.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from ripbf import CodeParams, ParityCheckMatrix, keygen


def dense_matrix(H: ParityCheckMatrix) -> np.ndarray:
    """Expand a quasi-cyclic key to a dense (r, n) array, independently of
    the library's column-support expansion."""
    params = H.params
    out = np.zeros((params.r, params.n), dtype=np.uint8)
    for q, blk in enumerate(H.blocks):
        for c in range(params.p):
            for a in blk.first_column_support:
                out[(a + c) % params.p, q * params.p + c] = 1
    return out


def dense_syndrome(Hd: np.ndarray, e_dense: np.ndarray) -> np.ndarray:
    return (Hd @ e_dense.astype(np.int64)) % 2


def reference_decode_dense(Hd: np.ndarray, synd: np.ndarray, thresholds,
                           orders) -> tuple[np.ndarray, np.ndarray]:
    """Plain-loop in-place decoder over a dense matrix.

    orders: one position sequence per executed iteration (the caller fixes
    the permutations so library and reference see the same ones).
    """
    r, n = Hd.shape
    s = synd.astype(np.int64).copy()
    ehat = np.zeros(n, dtype=np.uint8)
    for b, order in zip(thresholds, orders):
        if not s.any():
            break
        for j in order:
            if int((s * Hd[:, j]).sum()) >= b:
                ehat[j] ^= 1
                s = (s + Hd[:, j]) % 2
    return ehat, s.astype(np.uint8)


class ProbeProbs:
    """Monotone rational decision probabilities for chain oracles."""

    def __init__(self, pm0_map=None, pf1_map=None):
        self._pm0 = pm0_map or (lambda th: Fraction(97 - min(th, 90), 100))
        self._pf1 = pf1_map or (lambda th: Fraction(92 - 2 * min(th, 40), 100))

    def pm0(self, th):
        return self._pm0(th)

    def pf0(self, th):
        return 1 - self._pm0(th)

    def pf1(self, th):
        return self._pf1(th)

    def pm1(self, th):
        return 1 - self._pf1(th)


def enumerate_e0(omega: int, n: int, probs) -> list[Fraction]:
    """All 2**(n-omega) keep/flip paths over the concordant sweep."""
    steps = n - omega
    acc = [Fraction(0)] * (steps + 1)
    for path in itertools.product((0, 1), repeat=steps):
        prob = Fraction(1)
        state = 0
        for bit in path:
            res = omega + state
            prob *= probs.pf0(res) if bit else probs.pm0(res)
            state += bit
        acc[state] += prob
    return acc


def enumerate_e1(t1_init: int, t_star: int, probs) -> list[Fraction]:
    """All 2**t1_init keep/flip paths over the discrepant sweep."""
    base = t_star - t1_init
    acc = [Fraction(0)] * (t1_init + 1)
    for path in itertools.product((0, 1), repeat=t1_init):
        prob = Fraction(1)
        x = t1_init
        for bit in path:
            res = base + x
            if bit:
                prob *= probs.pf1(res)
                x -= 1
            else:
                prob *= probs.pm1(res)
        acc[x] += prob
    return acc


def enumerate_full_pass(t: int, n: int, probs) -> list[Fraction]:
    """All 2**n decision paths of one worst-case pass from residual t."""
    acc = [Fraction(0)] * (n + 1)
    for path in itertools.product((0, 1), repeat=n):
        prob = Fraction(1)
        x0, x1 = 0, t
        for k, bit in enumerate(path):
            if k < n - t:
                res = t + x0
                if bit:
                    prob *= probs.pf0(res)
                    x0 += 1
                else:
                    prob *= probs.pm0(res)
            else:
                res = x0 + x1
                if bit:
                    prob *= probs.pf1(res)
                    x1 -= 1
                else:
                    prob *= probs.pm1(res)
        acc[x0 + x1] += prob
    return acc


def brute_force_subset_count(values, mults, eta: int, thr: int) -> int:
    """Count eta-subsets of the expanded multiset with sum <= thr."""
    expanded = []
    for val, lam in zip(values, mults):
        expanded.extend([val] * lam)
    return sum(1 for combo in itertools.combinations(expanded, eta)
               if sum(combo) <= thr)


def census_rho1(n: int, w: int, t: int) -> Fraction:
    """Exhaustive fraction of discrepancy placements (position asserted,
    inside a fixed weight-w check row) leaving the check unsatisfied."""
    row = set(range(w))           # position 0 sits in the row
    hits = total = 0
    for rest in itertools.combinations(range(1, n), t - 1):
        overlap = 1 + sum(1 for x in rest if x in row)
        total += 1
        hits += overlap % 2
    return Fraction(hits, total)


def census_rho0(n: int, w: int, t: int) -> Fraction:
    """Same census conditioned on the in-row position carrying no error."""
    row = set(range(w))
    hits = total = 0
    for rest in itertools.combinations(range(1, n), t):
        overlap = sum(1 for x in rest if x in row)
        total += 1
        hits += overlap % 2
    return Fraction(hits, total)


@pytest.fixture(scope="session")
def tiny_code() -> ParityCheckMatrix:
    return keygen(CodeParams(2, 13, 3), 5)


@pytest.fixture(scope="session")
def small_code() -> ParityCheckMatrix:
    return keygen(CodeParams(2, 389, 13), 3)
