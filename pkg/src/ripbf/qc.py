"""Quasi-cyclic (v,w)-regular parity-check matrices and sparse bit vectors.

A key is a row of n0 binary circulant blocks of size p, each stored as the
sorted support of its first column; everything else (column supports,
syndromes, the column-overlap statistics feeding the code-specific bounds)
is expanded on demand.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CodeParams:
    """Block count n0, circulant size p and column weight v.

    Derived sizes: length n = n0*p, redundancy r = p, row weight w = n0*v,
    dimension k = (n0-1)*p.
    """

    n0: int
    p: int
    v: int

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError(f"n0 must be >= 1, got {self.n0}")
        if not 1 <= self.v <= self.p:
            raise ValueError(f"need 1 <= v <= p, got v={self.v}, p={self.p}")

    @property
    def n(self) -> int:
        return self.n0 * self.p

    @property
    def r(self) -> int:
        return self.p

    @property
    def w(self) -> int:
        return self.n0 * self.v

    @property
    def k(self) -> int:
        return (self.n0 - 1) * self.p


@dataclass(frozen=True)
class CirculantBlock:
    """One p x p circulant, stored as the sorted support of column 0.

    Entry (i, j) is set iff (i - j) mod p lies in the support, so column c
    has support {(a + c) mod p}.
    """

    p: int
    first_column_support: tuple[int, ...]

    def __post_init__(self):
        supp = self.first_column_support
        if any(not 0 <= a < self.p for a in supp):
            raise ValueError("support entries must lie in [0, p)")
        if any(supp[i] >= supp[i + 1] for i in range(len(supp) - 1)):
            raise ValueError("support must be strictly increasing")


@dataclass(frozen=True)
class BitVec:
    """Sparse binary vector: length plus sorted support."""

    length: int
    support: tuple[int, ...]

    def __post_init__(self):
        supp = self.support
        if any(not 0 <= i < self.length for i in supp):
            raise ValueError("support indices out of range")
        if any(supp[i] >= supp[i + 1] for i in range(len(supp) - 1)):
            raise ValueError("support must be strictly increasing")

    @property
    def weight(self) -> int:
        return len(self.support)

    def __xor__(self, other: "BitVec") -> "BitVec":
        if self.length != other.length:
            raise ValueError("length mismatch in xor")
        return BitVec(self.length, tuple(sorted(set(self.support) ^ set(other.support))))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.length, dtype=np.uint8)
        if self.support:
            dense[list(self.support)] = 1
        return dense

    @classmethod
    def from_dense(cls, dense) -> "BitVec":
        arr = np.asarray(dense)
        return cls(len(arr), tuple(int(i) for i in np.nonzero(arr)[0]))

    @classmethod
    def zero(cls, length: int) -> "BitVec":
        return cls(length, ())


@dataclass(frozen=True)
class GammaRow:
    """Multiset of column-overlap counts for one column class.

    `values` are the distinct overlap sizes (ascending, each in [0, v]),
    `multiplicities` how often each occurs among the n-1 other columns.
    The zero diagonal entry of the overlap matrix is excluded.
    """

    values: tuple[int, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != len(self.multiplicities):
            raise ValueError("values and multiplicities must have equal length")
        if any(self.values[i] >= self.values[i + 1] for i in range(len(self.values) - 1)):
            raise ValueError("values must be strictly increasing")
        if any(m <= 0 for m in self.multiplicities):
            raise ValueError("multiplicities must be positive")

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    @classmethod
    def from_entries(cls, entries) -> "GammaRow":
        counts = Counter(int(x) for x in entries)
        values = tuple(sorted(counts))
        return cls(values, tuple(counts[val] for val in values))


class ParityCheckMatrix:
    """Sparse (v,w)-regular quasi-cyclic parity-check matrix.

    Immutable after construction; expansion helpers cache their results,
    so instances are safe to share across threads for reading.
    """

    def __init__(self, params: CodeParams, blocks):
        blocks = tuple(blocks)
        if len(blocks) != params.n0:
            raise ValueError(f"expected {params.n0} blocks, got {len(blocks)}")
        for blk in blocks:
            if blk.p != params.p or len(blk.first_column_support) != params.v:
                raise ValueError("block does not match code parameters")
        self.params = params
        self.blocks = blocks
        self._colsupp: np.ndarray | None = None
        self._gamma_rows: tuple[GammaRow, ...] | None = None

    def __eq__(self, other):
        return (
            isinstance(other, ParityCheckMatrix)
            and self.params == other.params
            and self.blocks == other.blocks
        )

    def column_support(self, j: int) -> tuple[int, ...]:
        """Row indices of the v ones in column j (block j//p shifted by j%p)."""
        params = self.params
        if not 0 <= j < params.n:
            raise ValueError(f"column index {j} out of range [0, {params.n})")
        block = self.blocks[j // params.p]
        shift = j % params.p
        return tuple((a + shift) % params.p for a in block.first_column_support)

    def col_support_matrix(self) -> np.ndarray:
        """Dense (n, v) int32 array of column supports, cached."""
        if self._colsupp is None:
            params = self.params
            cs = np.empty((params.n, params.v), dtype=np.int32)
            shifts = np.arange(params.p, dtype=np.int64)[:, None]
            for q, blk in enumerate(self.blocks):
                supp = np.asarray(blk.first_column_support, dtype=np.int64)
                cs[q * params.p:(q + 1) * params.p] = (supp[None, :] + shifts) % params.p
            self._colsupp = cs
        return self._colsupp

    def syndrome(self, e: BitVec) -> BitVec:
        """s = e H^T over GF(2)."""
        params = self.params
        if e.length != params.n:
            raise ValueError(f"error length {e.length} != code length {params.n}")
        acc = np.zeros(params.r, dtype=np.uint8)
        cs = self.col_support_matrix()
        for j in e.support:
            acc[cs[j]] ^= 1
        return BitVec.from_dense(acc)

    def gamma_rows(self) -> tuple[GammaRow, ...]:
        """One overlap-count row per circulant block class, cached.

        Quasi-cyclicity makes every row of the full overlap matrix within
        a block-column class a shift of the same multiset, so only the n0
        rows of the first column of each block are materialised.  The
        overlap of block q's first column with every column (q', c') comes
        from the full cross-correlation of the two supports.
        """
        if self._gamma_rows is None:
            params = self.params
            p = params.p
            supports = [np.asarray(blk.first_column_support, dtype=np.int64)
                        for blk in self.blocks]
            rows = []
            for q in range(params.n0):
                entries = []
                for q2 in range(params.n0):
                    corr = np.zeros(p, dtype=np.int64)
                    diffs = (supports[q][:, None] - supports[q2][None, :]) % p
                    np.add.at(corr, diffs.ravel(), 1)
                    # shift 0 of the own block is the column itself: diagonal, excluded
                    entries.append(corr[1:] if q2 == q else corr)
                rows.append(GammaRow.from_entries(np.concatenate(entries)))
            self._gamma_rows = tuple(rows)
        return self._gamma_rows

    def h0_invertible(self) -> bool:
        """Whether block 0 is invertible mod x^p - 1 over GF(2).

        Informational only (the encryption pipelines needing it are out of
        scope here); checked via a polynomial gcd with x^p + 1.
        """
        poly = 0
        for a in self.blocks[0].first_column_support:
            poly |= 1 << a
        modulus = (1 << self.params.p) | 1
        return _gf2_poly_gcd(poly, modulus) == 1

    def to_json(self) -> str:
        payload = {
            "n0": self.params.n0,
            "p": self.params.p,
            "v": self.params.v,
            "blocks": [list(blk.first_column_support) for blk in self.blocks],
        }
        return json.dumps(payload, separators=(", ", ": "))

    @classmethod
    def from_json(cls, text: str) -> "ParityCheckMatrix":
        payload = json.loads(text)
        params = CodeParams(payload["n0"], payload["p"], payload["v"])
        blocks = [CirculantBlock(params.p, tuple(int(a) for a in supp))
                  for supp in payload["blocks"]]
        return cls(params, blocks)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ParityCheckMatrix":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _gf2_poly_gcd(a: int, b: int) -> int:
    """gcd of binary polynomials packed into ints (bit i = coeff of x^i)."""
    while b:
        while a.bit_length() >= b.bit_length() and a:
            a ^= b << (a.bit_length() - b.bit_length())
        a, b = b, a
    return a


def keygen(params: CodeParams, seed: int) -> ParityCheckMatrix:
    """Uniform random (v,w)-regular QC key, deterministic given seed.

    Each block support is drawn by rejection (duplicates redrawn), which
    keeps the draw uniform over size-v subsets.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    blocks = []
    for _ in range(params.n0):
        picked: set[int] = set()
        while len(picked) < params.v:
            need = params.v - len(picked)
            for x in rng.integers(0, params.p, size=need + (need >> 3) + 1):
                if len(picked) == params.v:
                    break
                picked.add(int(x))
        blocks.append(CirculantBlock(params.p, tuple(sorted(picked))))
    return ParityCheckMatrix(params, blocks)


def sample_error(n: int, t: int, rng: np.random.Generator) -> BitVec:
    """Uniform weight-t error vector drawn from the given stream.

    Rejection sampling: duplicate positions are redrawn, preserving
    uniformity over size-t supports.  Consumes a deterministic sequence of
    draws from `rng` given (n, t).
    """
    if t > n:
        raise ValueError(f"error weight {t} exceeds length {n}")
    picked: set[int] = set()
    while len(picked) < t:
        need = t - len(picked)
        for x in rng.integers(0, n, size=need + (need >> 3) + 1):
            if len(picked) == t:
                break
            picked.add(int(x))
    return BitVec(n, tuple(sorted(picked)))


def gamma_representative_rows(H: ParityCheckMatrix) -> tuple[GammaRow, ...]:
    """Overlap-count rows for the n0 block-column classes of H."""
    return H.gamma_rows()
