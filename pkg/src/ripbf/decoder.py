"""Randomized in-place bit-flipping decoder with a fixed iteration count.

Each outer iteration walks all n positions in a permuted order; for each
position the number of unsatisfied parity checks touching it (upc) is
counted against the iteration threshold, and a flip updates the syndrome
immediately.  The outer loop stops early only on a null syndrome, and an
iteration always evaluates all n positions regardless of flips.

Permutation modes:
  * "random"   - fresh uniform permutation per outer iteration (the default
                 decoder; needs a seedable RNG stream),
  * "worst"    - positions currently agreeing with the true error first,
                 discrepant positions last (instrumentation; deterministic,
                 needs the true error),
  * "identity" - positions in index order 0..n-1.

`decode` is the scalar reference path; `decode_batch` runs many trials in
lockstep over numpy arrays with identical semantics and identical
per-trial RNG consumption, and is what the Monte-Carlo harness uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qc import BitVec, ParityCheckMatrix

PERM_MODES = ("random", "worst", "identity")


@dataclass(frozen=True)
class DecoderConfig:
    """Per-iteration flip thresholds and the position-ordering mode."""

    thresholds: tuple[int, ...]
    perm_mode: str = "random"

    def __post_init__(self):
        if not self.thresholds:
            raise ValueError("need at least one iteration threshold")
        if self.perm_mode not in PERM_MODES:
            raise ValueError(f"perm_mode must be one of {PERM_MODES}")

    @property
    def itermax(self) -> int:
        return len(self.thresholds)

    def validate_for(self, v: int) -> None:
        """Thresholds must lie in [ceil(v/2), v] for a weight-v column."""
        lo = math.ceil(v / 2)
        for b in self.thresholds:
            if not lo <= b <= v:
                raise ValueError(f"threshold {b} outside [{lo}, {v}] for v={v}")

    @classmethod
    def uniform(cls, b: int, itermax: int = 1, perm_mode: str = "random") -> "DecoderConfig":
        return cls((b,) * itermax, perm_mode)


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one decode call.

    `success` reflects the decoder's own view (null final syndrome); the
    caller must compare `e_hat` against the true error to detect
    miscorrections.  `residual_weights` logs weight(e xor e_hat) in all
    itermax slots (unexecuted iterations repeat the last value) and is
    only available when the true error was supplied.
    """

    e_hat: BitVec
    final_syndrome: BitVec
    success: bool
    iterations_run: int
    residual_weights: tuple[int, ...] | None = None


def upc(H: ParityCheckMatrix, s, j: int) -> int:
    """Number of asserted syndrome bits among the checks of column j."""
    support = H.column_support(j)
    if isinstance(s, BitVec):
        if s.length != H.params.r:
            raise ValueError("syndrome length mismatch")
        return len(set(support) & set(s.support))
    return int(np.asarray(s)[list(support)].sum())


def flip_and_update(s: np.ndarray, H: ParityCheckMatrix, j: int, e_hat: np.ndarray) -> None:
    """Toggle e_hat[j] and xor column j of H into the dense syndrome, in place.

    Applying it twice restores both arrays.
    """
    cols = H.col_support_matrix()[j]
    e_hat[j] ^= 1
    s[cols] ^= 1


def _ordering(mode: str, n: int, rng, err_dense, ehat_dense) -> np.ndarray:
    if mode == "identity":
        return np.arange(n)
    if mode == "random":
        if rng is None:
            raise ValueError("random mode needs an RNG stream")
        return rng.permutation(n)
    # worst: concordant positions first, discrepant last, index order inside
    disc = err_dense ^ ehat_dense
    return np.argsort(disc, kind="stable")


def decode(
    H: ParityCheckMatrix,
    s: BitVec,
    config: DecoderConfig,
    rng: np.random.Generator | None = None,
    true_error: BitVec | None = None,
) -> DecodeOutcome:
    """Scalar reference decoder.

    The worst-case ordering is recomputed per outer iteration from the
    current estimate snapshot.  `true_error` is instrumentation only: it
    is required for "worst" mode and enables the residual-weight log.
    """
    params = H.params
    config.validate_for(params.v)
    if s.length != params.r:
        raise ValueError(f"syndrome length {s.length} != r = {params.r}")
    if config.perm_mode == "worst" and true_error is None:
        raise ValueError("worst-case ordering needs the true error")
    if true_error is not None and true_error.length != params.n:
        raise ValueError("true_error length mismatch")

    cols = H.col_support_matrix()
    synd = s.to_dense()
    ehat = np.zeros(params.n, dtype=np.uint8)
    err_dense = true_error.to_dense() if true_error is not None else None

    residuals: list[int] = []
    iterations_run = 0
    for b in config.thresholds:
        if not synd.any():
            break
        order = _ordering(config.perm_mode, params.n, rng, err_dense, ehat)
        for j in order:
            if int(synd[cols[j]].sum()) >= b:
                ehat[j] ^= 1
                synd[cols[j]] ^= 1
        iterations_run += 1
        if err_dense is not None:
            residuals.append(int((err_dense ^ ehat).sum()))

    resid = None
    if err_dense is not None:
        last = residuals[-1] if residuals else int(err_dense.sum())
        resid = tuple(residuals + [last] * (config.itermax - len(residuals)))
    return DecodeOutcome(
        e_hat=BitVec.from_dense(ehat),
        final_syndrome=BitVec.from_dense(synd),
        success=not synd.any(),
        iterations_run=iterations_run,
        residual_weights=resid,
    )


def decode_batch(
    H: ParityCheckMatrix,
    syndromes: np.ndarray,
    config: DecoderConfig,
    rngs=None,
    true_errors: np.ndarray | None = None,
):
    """Lockstep decode of a batch of trials.

    syndromes: (B, r) uint8, one dense syndrome per trial (not modified).
    rngs: per-trial numpy Generators, used only in "random" mode and only
        for iterations that actually run for that trial, matching the
        scalar decoder's stream consumption.
    true_errors: (B, n) uint8, required for "worst" mode.

    Returns (e_hat, final_syndromes) as (B, n) and (B, r) uint8 arrays.
    """
    params = H.params
    config.validate_for(params.v)
    n, r = params.n, params.r
    B = syndromes.shape[0]
    if syndromes.shape[1] != r:
        raise ValueError("syndrome width mismatch")
    if config.perm_mode == "worst" and true_errors is None:
        raise ValueError("worst-case ordering needs the true errors")
    if config.perm_mode == "random" and rngs is None:
        raise ValueError("random mode needs per-trial RNG streams")

    cols = H.col_support_matrix()
    synd = syndromes.copy()
    ehat = np.zeros((B, n), dtype=np.uint8)
    synd_flat = synd.reshape(-1)

    active = np.nonzero(synd.any(axis=1))[0]
    for b in config.thresholds:
        if active.size == 0:
            break
        if config.perm_mode == "identity":
            base = active.astype(np.int64) * r
            for j in range(n):
                idx = base[:, None] + cols[j][None, :]
                u = synd_flat[idx].sum(axis=1)
                hit = np.nonzero(u >= b)[0]
                if hit.size:
                    synd_flat[idx[hit]] ^= 1
                    ehat[active[hit], j] ^= 1
        else:
            if config.perm_mode == "random":
                perms = np.empty((active.size, n), dtype=np.int32)
                for row, i in enumerate(active):
                    perms[row] = rngs[i].permutation(n)
            else:
                disc = true_errors[active] ^ ehat[active]
                perms = np.argsort(disc, axis=1, kind="stable").astype(np.int32)
            base = active.astype(np.int64) * r
            for k in range(n):
                j = perms[:, k]
                rows = cols[j]                          # (A, v) row indices
                idx = base[:, None] + rows
                u = synd_flat[idx].sum(axis=1)
                hit = np.nonzero(u >= b)[0]
                if hit.size:
                    synd_flat[idx[hit]] ^= 1
                    ehat[active[hit], j[hit]] ^= 1
        active = active[synd[active].any(axis=1)]
    return ehat, synd
