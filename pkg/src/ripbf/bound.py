"""Code-specific conservative failure-rate bound and weak-key screening.

For a concrete key, the overlap between two columns of the parity-check
matrix caps how much one error position can disturb another's check
counts.  Counting, per column class, how many error placements keep the
total overlap small yields certified lower bounds on the good-decision
probabilities, and substituting them into the worst-case single-pass
success product gives an upper bound on that code's failure rate.  Keys
whose bound exceeds a failure budget are rejected as weak.

The counting core is an exact subset-sum counter over the overlap
multiset, exponential only in the number of distinct overlap values
(at most v + 1), not in the error weight.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr

from .numerics import (
    DEFAULT_PRECISION,
    binomial,
    hp_context,
    hp_pow,
    ratio_to_real,
    with_self_check,
)
from .qc import GammaRow, ParityCheckMatrix


@dataclass(frozen=True)
class SubsetCountQuery:
    """How many eta-element sub-multisets of `row` sum to at most `thr`."""

    row: GammaRow
    eta: int
    thr: int

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")


def count_subsets(query: SubsetCountQuery) -> int:
    """Exact count of eta-element sub-multisets of the row with sum <= thr.

    Recursion over the distinct values: pick k copies of the j-th value
    (a C(multiplicity, k) choice), bounded by the remaining cardinality
    and by thr // value; zero values are unconstrained by the threshold.
    Memoised on (value index, remaining cardinality, remaining budget);
    a negative remaining budget yields 0, so eta exceeding the row size
    or a negative threshold is a zero count, not an error.
    """
    return _count_subsets(query.row, query.eta, query.thr)


@lru_cache(maxsize=None)
def _count_subsets(row: GammaRow, eta: int, thr: int) -> int:
    values, mults = row.values, row.multiplicities
    memo: dict[tuple[int, int, int], int] = {}

    def rec(j: int, m: int, budget: int) -> int:
        if budget < 0:
            return 0
        if m == 0:
            return 1
        if j == len(values):
            return 0
        key = (j, m, budget)
        cached = memo.get(key)
        if cached is not None:
            return cached
        val, lam = values[j], mults[j]
        hi = min(lam, m)
        if val > 0:
            hi = min(hi, budget // val)
        total = 0
        for k in range(hi + 1):
            total += binomial(lam, k) * rec(j + 1, m - k, budget - k * val)
        memo[key] = total
        return total

    return rec(0, eta, thr)


def _bound_fraction(rows, n: int, eta: int, thr: int) -> tuple[Fraction, int]:
    """max over column classes of N(row, eta, thr) / C(n-1, eta), with argmax."""
    denom = binomial(n - 1, eta)
    best, witness = 0, 0
    for z, row in enumerate(rows):
        cnt = count_subsets(SubsetCountQuery(row, eta, thr))
        if cnt > best:
            best, witness = cnt, z
    value = Fraction(best, denom) if denom else Fraction(0)
    if value > 1:
        raise ValueError("subset count exceeded the number of error placements")
    return value, witness


def bound_pf1(H: ParityCheckMatrix, t_hat: int, b: int) -> Fraction:
    """Certified lower bound on the flip probability of a discrepant
    position at residual count t_hat, for this specific code.

    Counts placements of the other t_hat - 1 discrepancies whose total
    overlap with the position's column leaves at least b checks
    unsatisfied (overlap sum <= v - b), maximised over the n0 column
    classes (shifts within a class share the bound).
    """
    if t_hat < 1:
        raise ValueError("bound_pf1 needs t_hat >= 1")
    value, _ = _bound_fraction(H.gamma_rows(), H.params.n, t_hat - 1, H.params.v - b)
    return value


def bound_pm0(H: ParityCheckMatrix, t_hat: int, b: int) -> Fraction:
    """Certified lower bound on the maintain probability of a concordant
    position at residual count t_hat, for this specific code.

    Counts placements of the t_hat discrepancies whose total overlap keeps
    fewer than b checks unsatisfied (overlap sum <= b - 1).
    """
    if t_hat < 0:
        raise ValueError("bound_pm0 needs t_hat >= 0")
    value, _ = _bound_fraction(H.gamma_rows(), H.params.n, t_hat, b - 1)
    return value


@dataclass
class BoundResult:
    """Single-pass failure-rate upper bound for one key at one (t, b)."""

    t: int
    b: int
    dfr_upper: mpfr
    pm0_lower: Fraction
    pf1_lower: tuple[Fraction, ...]
    witness_block: int

    @property
    def dfr_log2_upper(self) -> float:
        if self.dfr_upper == 0:
            return float("-inf")
        return float(gmpy2.log2(self.dfr_upper))


def code_specific_dfr1(H: ParityCheckMatrix, t: int, b: int,
                       bits: int = DEFAULT_PRECISION,
                       check: bool = True) -> BoundResult:
    """Upper bound on this code's worst-case single-pass failure rate.

    Substitutes the certified per-residual lower bounds into the unique
    success path: maintain all n - t concordant positions at residual t,
    flip discrepancies at residuals t..1.  The witness is the column
    class attaining the maintain-side bound at residual t.
    """
    if t < 1:
        raise ValueError("code_specific_dfr1 needs t >= 1")
    params = H.params
    rows = H.gamma_rows()
    pm0_low, witness = _bound_fraction(rows, params.n, t, b - 1)
    pf1_low = tuple(_bound_fraction(rows, params.n, j - 1, params.v - b)[0]
                    for j in range(1, t + 1))

    def compute(bb):
        with hp_context(bb):
            if pm0_low == 0 or any(frac == 0 for frac in pf1_low):
                return mpfr(1)
            succ = hp_pow(ratio_to_real(pm0_low.numerator, pm0_low.denominator, bb),
                          params.n - t)
            for frac in pf1_low:
                succ *= ratio_to_real(frac.numerator, frac.denominator, bb)
            return min(max(1 - succ, mpfr(0)), mpfr(1))

    dfr_upper = with_self_check(compute, bits, check, "code_specific_dfr1")
    return BoundResult(t=t, b=b, dfr_upper=dfr_upper, pm0_lower=pm0_low,
                       pf1_lower=pf1_low, witness_block=witness)


@dataclass
class ScreeningReport:
    """Accept/reject decision for one key against a failure budget."""

    decision: str
    dfr_log2_upper: float
    t: int
    b: int
    witness_block: int
    elapsed_seconds: float

    @property
    def accepted(self) -> bool:
        return self.decision == "accept"

    def to_json(self) -> str:
        return json.dumps({
            "dfr_log2_upper": self.dfr_log2_upper,
            "t": self.t,
            "b": self.b,
            "witness_block": self.witness_block,
            "decision": self.decision,
            "elapsed_seconds": self.elapsed_seconds,
        }, separators=(", ", ": "))


def screen_key(H: ParityCheckMatrix, t: int, b: int, dfr_log2_budget: float,
               bits: int = DEFAULT_PRECISION) -> ScreeningReport:
    """Accept the key iff log2 of its failure-rate upper bound is within budget."""
    start = time.perf_counter()
    result = code_specific_dfr1(H, t, b, bits=bits)
    log2_upper = result.dfr_log2_upper
    decision = "accept" if log2_upper <= dfr_log2_budget else "reject"
    return ScreeningReport(
        decision=decision,
        dfr_log2_upper=log2_upper,
        t=t,
        b=b,
        witness_block=result.witness_block,
        elapsed_seconds=time.perf_counter() - start,
    )
