"""Exact combinatorics and high-precision real arithmetic.

Probabilities handled by the failure-rate models range from O(1) down to
2**-128 and below, and the combinatorial counts feeding them (binomials
like C(9601, 100)) overflow any fixed-width float.  Counts are therefore
kept as exact Python integers / fractions for as long as possible and
converted once into MPFR floats (via gmpy2) with a configurable mantissa
size, 256 bits by default.
"""

from __future__ import annotations

import math
import warnings
from contextlib import contextmanager

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 256

#: Smallest mantissa size the self-check recomputation may drop to.
MIN_PRECISION = 24

#: Relative disagreement between a full-precision and a half-precision
#: evaluation beyond which a result is flagged as numerically suspect.
SELF_CHECK_RTOL = 1e-6


class PrecisionWarning(UserWarning):
    """A result disagreed with its half-precision recomputation."""


def binomial(n: int, k: int) -> int:
    """Exact binomial coefficient C(n, k); 0 when k > n or k < 0."""
    if n < 0:
        raise ValueError(f"binomial: n must be nonnegative, got {n}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


@contextmanager
def hp_context(bits: int = DEFAULT_PRECISION):
    """Scoped MPFR context with the given mantissa size."""
    if bits < 2:
        raise ValueError(f"precision must be at least 2 bits, got {bits}")
    with gmpy2.context(precision=bits):
        yield


def ratio_to_real(num: int, den: int, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Round the exact ratio num/den once into an MPFR float.

    Single correct rounding, so the relative error is at most 2**-bits,
    within the documented 2**(1-bits) budget.
    """
    if den == 0:
        raise ZeroDivisionError("ratio_to_real: zero denominator")
    return mpfr(gmpy2.mpq(num, den), bits)


def to_real(x, bits: int = DEFAULT_PRECISION) -> mpfr:
    """Convert an int, Fraction, float or mpfr to an mpfr at `bits`."""
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, int):
        return ratio_to_real(x.numerator, x.denominator, bits)
    return mpfr(x, bits)


def hp_pow(x, e) -> mpfr:
    """x**e for nonnegative x in the ambient MPFR context.

    Supports the non-integer exponents the average-DFR formula needs.
    0**0 and negative bases are domain errors rather than NaNs.
    """
    xm = x if isinstance(x, mpfr) else mpfr(x)
    em = e if isinstance(e, mpfr) else mpfr(e)
    if xm < 0:
        raise ValueError(f"hp_pow: negative base {xm}")
    if xm == 0 and em <= 0:
        raise ValueError("hp_pow: 0 cannot be raised to a nonpositive exponent")
    return xm ** em


def with_self_check(compute, bits: int, check: bool = True, label: str = "result"):
    """Evaluate compute(bits); optionally recompute at half precision.

    Cheap guard against silent precision loss: the two evaluations must
    agree to SELF_CHECK_RTOL relative or a PrecisionWarning is emitted.
    The full-precision value is returned either way.
    """
    value = compute(bits)
    if check:
        half = compute(max(bits // 2, MIN_PRECISION))
        scale = max(abs(value), abs(half))
        if scale > 0 and abs(value - half) / scale > SELF_CHECK_RTOL:
            warnings.warn(
                f"{label}: precision self-check failed "
                f"({value!s} at {bits} bits vs {half!s} at {max(bits // 2, MIN_PRECISION)})",
                PrecisionWarning,
                stacklevel=3,
            )
    return value
