"""Statistical failure-rate model for the randomized in-place decoder.

The model tracks the number of residual discrepancies t_hat between the
true error and the decoder's estimate.  Two conditional probabilities
drive everything, both functions of t_hat alone:

  * pf1(t_hat): a discrepant position clears the flip threshold,
  * pm0(t_hat): a concordant position stays below it,

each obtained by summing a binomial over the per-check probability that a
parity check involving the position is unsatisfied (an exact hypergeometric
parity count over error placements).

A worst-case single pass processes all concordant positions first and all
discrepant positions last.  Its two phases are bidiagonal Markov chains:
the concordant phase can only create discrepancies (E0 chain), the
discrepant phase can only clear them (E1 chain).  Composing the phases
yields the residual distribution after one iteration; iterating it and
finishing with the closed-form success probability gives the worst-case
failure rate for any iteration count.  A cheaper average-case estimate for
one iteration replaces the random gaps between discrepant positions by
their expected length.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from gmpy2 import mpfr

from .numerics import (
    DEFAULT_PRECISION,
    binomial,
    hp_context,
    hp_pow,
    ratio_to_real,
    with_self_check,
)

#: Variants of the concordant-position check probability.  "consistent" is
#: the hypergeometric form validated by exhaustive enumeration (default);
#: "paper-verbatim" keeps an alternative form that uses the full row weight
#: in the numerator and can exceed 1, retained for reproduction studies.
RHO0_VARIANTS = ("consistent", "paper-verbatim")

TRANSITION_MODES = ("joint", "factorized")

#: Default cap on the tracked residual-discrepancy states in multi-pass
#: composition; mass beyond it is lumped into an absorbing failure tail.
DEFAULT_MAX_STATE = 512


class ModelAssumptionWarning(UserWarning):
    """A numerical hypothesis of the model failed on the used range."""


@dataclass(frozen=True)
class EnsembleParams:
    """Code ensemble (n, w, v), error weight t and per-iteration thresholds."""

    n: int
    w: int
    v: int
    t: int
    thresholds: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.t <= self.n:
            raise ValueError(f"need 0 <= t <= n, got t={self.t}")
        if not self.thresholds:
            raise ValueError("need at least one threshold")
        lo = math.ceil(self.v / 2)
        for b in self.thresholds:
            if not lo <= b <= self.v:
                raise ValueError(f"threshold {b} outside [{lo}, {self.v}]")

    @property
    def itermax(self) -> int:
        return len(self.thresholds)

    @classmethod
    def from_code(cls, code_params, t: int, thresholds) -> "EnsembleParams":
        if isinstance(thresholds, int):
            thresholds = (thresholds,)
        return cls(code_params.n, code_params.w, code_params.v, t, tuple(thresholds))


@lru_cache(maxsize=None)
def rho1u(n: int, w: int, t: int) -> Fraction:
    """Pr{check unsatisfied | the position is discrepant}, exact.

    The check row contains the position; its other w-1 set bits must meet
    the other t-1 discrepancies in an even-size overlap for the parities
    to leave the check unsatisfied.
    """
    if not 1 <= t <= n:
        raise ValueError("rho1u needs t >= 1 (conditioning on a discrepant position)")
    if w > n:
        raise ValueError("row weight exceeds length")
    num = sum(
        binomial(w - 1, l) * binomial(n - w, t - 1 - l)
        for l in range(0, min(w - 1, t - 1) + 1, 2)
    )
    return Fraction(num, binomial(n - 1, t - 1))


@lru_cache(maxsize=None)
def rho0u(n: int, w: int, t: int, variant: str = "consistent") -> Fraction:
    """Pr{check unsatisfied | the position is concordant}, exact.

    "consistent": odd-size overlap of the row's other w-1 set bits with the
    t discrepancies spread over the other n-1 positions.  "paper-verbatim"
    uses w instead of w-1 in the numerator; it is not a proper probability
    (it can exceed 1, which raises) and exists for comparison only.
    """
    if variant not in RHO0_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not 0 <= t <= n - 1:
        raise ValueError("rho0u needs 0 <= t <= n-1")
    top = w if variant == "paper-verbatim" else w - 1
    num = sum(
        binomial(top, l) * binomial(n - w, t - l)
        for l in range(1, min(top, t) + 1, 2)
    )
    value = Fraction(num, binomial(n - 1, t))
    if value > 1:
        raise ValueError(f"rho0u({variant}) = {value} exceeds 1 at n={n}, w={w}, t={t}")
    return value


def _binomial_tail(v: int, lo: int, hi: int, rho):
    """Sum of C(v,u) rho^u (1-rho)^(v-u) over u in [lo, hi].

    Exact when rho is a Fraction, MPFR in the ambient context otherwise.
    """
    if isinstance(rho, Fraction):
        one = Fraction(1)
    else:
        rho = rho if isinstance(rho, mpfr) else mpfr(rho)
        one = mpfr(1)
    total = one * 0
    for u in range(lo, hi + 1):
        total += binomial(v, u) * rho**u * (one - rho) ** (v - u)
    if total > 1:
        total = one  # rounding overshoot on a full sum
    return total


def flip_given_1(v: int, b: int, rho):
    """Pr{upc >= b} for upc ~ Binomial(v, rho): flip of a discrepant position."""
    if not 0 <= b <= v + 1:
        raise ValueError(f"need 0 <= b <= v+1, got b={b}")
    return _binomial_tail(v, b, v, rho)


def maintain_given_0(v: int, b: int, rho):
    """Pr{upc < b} for upc ~ Binomial(v, rho): no flip of a concordant position."""
    if not 0 <= b <= v + 1:
        raise ValueError(f"need 0 <= b <= v+1, got b={b}")
    return _binomial_tail(v, 0, b - 1, rho)


class FlipProbabilities:
    """Cached pf1/pm0 (and complements) per residual count, at one precision.

    Values are MPFR floats with `bits` mantissa bits, derived from the
    exact rational check probabilities.  Monotonicity in the residual
    count (pf1 and pm0 both nonincreasing) is the hypothesis behind the
    worst-case ordering result; it is verified pairwise as the cache
    fills and a ModelAssumptionWarning is emitted on violation.

    Instances are effectively immutable once warmed; build or prefetch
    before sharing across threads.
    """

    def __init__(self, n: int, w: int, v: int, b: int,
                 bits: int = DEFAULT_PRECISION, variant: str = "consistent"):
        if variant not in RHO0_VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.n, self.w, self.v, self.b = n, w, v, b
        self.bits = bits
        self.variant = variant
        self._pf1: dict[int, mpfr] = {}
        self._pm0: dict[int, mpfr] = {}
        self._pf1_prod: list[mpfr] = []
        self.monotone_ok = True
        # relative slack so rounding ties are not reported as violations
        self._slack = mpfr(2) ** (16 - bits)

    def _check_monotone(self, cache, th, value, name):
        prev = cache.get(th - 1)
        nxt = cache.get(th + 1)
        bad = (prev is not None and value > prev + self._slack * abs(prev)) or (
            nxt is not None and nxt > value + self._slack * abs(value)
        )
        if bad and self.monotone_ok:
            self.monotone_ok = False
            warnings.warn(
                f"{name} is not nonincreasing around residual count {th} "
                f"(n={self.n}, w={self.w}, v={self.v}, b={self.b})",
                ModelAssumptionWarning,
                stacklevel=4,
            )

    def pf1(self, th: int) -> mpfr:
        value = self._pf1.get(th)
        if value is None:
            with hp_context(self.bits):
                rho = rho1u(self.n, self.w, th)
                value = flip_given_1(self.v, self.b, ratio_to_real(
                    rho.numerator, rho.denominator, self.bits))
            self._check_monotone(self._pf1, th, value, "pf1")
            self._pf1[th] = value
        return value

    def pm0(self, th: int) -> mpfr:
        value = self._pm0.get(th)
        if value is None:
            with hp_context(self.bits):
                rho = rho0u(self.n, self.w, th, self.variant)
                value = maintain_given_0(self.v, self.b, ratio_to_real(
                    rho.numerator, rho.denominator, self.bits))
            self._check_monotone(self._pm0, th, value, "pm0")
            self._pm0[th] = value
        return value

    def pf0(self, th: int) -> mpfr:
        return 1 - self.pm0(th)

    def pm1(self, th: int) -> mpfr:
        return 1 - self.pf1(th)

    def pf1_product(self, t: int) -> mpfr:
        """Product of pf1(j) for j = 1..t (the all-flips path), cached."""
        with hp_context(self.bits):
            if not self._pf1_prod:
                self._pf1_prod.append(mpfr(1))
            while len(self._pf1_prod) <= t:
                j = len(self._pf1_prod)
                self._pf1_prod.append(self._pf1_prod[-1] * self.pf1(j))
        return self._pf1_prod[t]

    def prefetch(self, th_max: int) -> None:
        """Warm pm0 on [0, th_max] and pf1 on [1, th_max], checking monotonicity."""
        for th in range(0, min(th_max, self.n - 1) + 1):
            self.pm0(th)
        for th in range(1, min(th_max, self.n) + 1):
            self.pf1(th)


@lru_cache(maxsize=64)
def flip_probabilities(n: int, w: int, v: int, b: int,
                       bits: int = DEFAULT_PRECISION,
                       variant: str = "consistent") -> FlipProbabilities:
    """Shared FlipProbabilities cache keyed by all defining parameters."""
    return FlipProbabilities(n, w, v, b, bits, variant)


@dataclass
class StateDistribution:
    """Distribution over residual-discrepancy counts.

    probs[x] is the mass at x; `tail` lumps mass pushed beyond the tracked
    range by truncation and is treated as decoding failure downstream.
    Entries plus tail sum to 1 up to rounding.
    """

    probs: list
    tail: object = 0

    def total(self):
        return sum(self.probs) + self.tail


def build_K0(t_hat: int, n: int, probs) -> list:
    """Dense one-step matrix of the concordant phase, states 0..n-t_hat.

    Bidiagonal: stay with pm0(t_hat + i), move up with pf0(t_hat + i).
    The final state (every position discrepant) is absorbing; it cannot
    be reached before the phase ends, so its row only normalises the
    matrix.  Intended for small instances and tests.
    """
    dim = n - t_hat + 1
    K = [[0] * dim for _ in range(dim)]
    for i in range(dim - 1):
        K[i][i] = probs.pm0(t_hat + i)
        K[i][i + 1] = probs.pf0(t_hat + i)
    K[dim - 1][dim - 1] = 1
    return K


def build_K1(t1_init: int, t_star: int, probs) -> list:
    """Dense one-step matrix of the discrepant phase, states 0..t1_init.

    From state x the residual is (t_star - t1_init) + x: move down with
    pf1 of it, stay with pm1.  State 0 is absorbing (only reachable on
    the last step).  Intended for small instances and tests.
    """
    if t_star < t1_init:
        raise ValueError("t_star must be at least the initial discrepant count")
    base = t_star - t1_init
    dim = t1_init + 1
    K = [[0] * dim for _ in range(dim)]
    K[0][0] = 1
    for x in range(1, dim):
        K[x][x] = probs.pm1(base + x)
        K[x][x - 1] = probs.pf1(base + x)
    return K


def distribution_after_E0(omega: int, n: int, probs,
                          max_state: int | None = None) -> StateDistribution:
    """Distribution of discrepancies created while sweeping the n - omega
    concordant positions, starting from none.

    Pure-birth chain run for n - omega steps; at i created so far the
    residual is omega + i.  With `max_state` set, mass pushed above it is
    absorbed into the tail (conservative: counted as failure downstream).
    Arithmetic follows the type of the supplied probabilities (MPFR in
    the ambient context, or exact Fractions for oracle runs).
    """
    if not 0 <= omega <= n:
        raise ValueError("omega out of range")
    steps = n - omega
    cap = steps if max_state is None else min(steps, max_state)
    y: list = [1]
    tail = 0
    for _ in range(steps):
        hi = len(y) - 1
        new: list = [0] * (min(hi + 1, cap) + 1)
        for i, m in enumerate(y):
            if m == 0:
                continue
            res = omega + i
            if res >= n:  # saturated: nothing concordant is left to process
                new[i] += m
                continue
            new[i] += m * probs.pm0(res)
            up = m * probs.pf0(res)
            if i < cap:
                new[i + 1] += up
            else:
                tail += up
        y = new
    return StateDistribution(y, tail)


def distribution_after_E1(t1_init: int, t_star: int, probs) -> StateDistribution:
    """Distribution of discrepancies left after sweeping the t1_init
    discrepant positions, starting from all of them.

    Pure-death chain run for t1_init steps; at x remaining the residual is
    (t_star - t1_init) + x.  A zero-residual state is absorbing.
    """
    if t_star < t1_init:
        raise ValueError("t_star must be at least the initial discrepant count")
    base = t_star - t1_init
    y: list = [0] * t1_init + [1]
    for _ in range(t1_init):
        new: list = [0] * (t1_init + 1)
        for x, m in enumerate(y):
            if m == 0:
                continue
            if x == 0:
                # no discrepant position left in this run; absorbing (the
                # state is only reachable on the final step anyway)
                new[0] += m
                continue
            new[x] += m * probs.pm1(base + x)
            new[x - 1] += m * probs.pf1(base + x)
        y = new
    return StateDistribution(y, 0)


def one_iteration_transition(omega: int, n: int, probs, mode: str = "joint",
                             max_state: int | None = None) -> StateDistribution:
    """Residual distribution after one full worst-case pass from omega.

    "joint" conditions the discrepant phase on the realised outcome of the
    concordant phase (the residual when that phase starts is omega plus
    the discrepancies just created).  "factorized" composes the two
    phase marginals with the discrepant phase evaluated at residual
    omega, i.e. as if the concordant phase created nothing.
    """
    if mode not in TRANSITION_MODES:
        raise ValueError(f"mode must be one of {TRANSITION_MODES}")
    if omega == 0:
        return StateDistribution([1], 0)
    e0 = distribution_after_E0(omega, n, probs, max_state)
    out: list = [0] * (len(e0.probs) + omega)
    if mode == "joint":
        for x0, m in enumerate(e0.probs):
            if m == 0:
                continue
            e1 = distribution_after_E1(omega, omega + x0, probs)
            for x1, m1 in enumerate(e1.probs):
                if m1 != 0:
                    out[x0 + x1] += m * m1
    else:
        e1 = distribution_after_E1(omega, omega, probs)
        for x0, m in enumerate(e0.probs):
            if m == 0:
                continue
            for x1, m1 in enumerate(e1.probs):
                if m1 != 0:
                    out[x0 + x1] += m * m1
    return StateDistribution(out, e0.tail)


def success_probability(omega: int, n: int, probs):
    """Probability that a worst-case pass from omega ends fully corrected.

    Unique success path: maintain all n - omega concordant positions at
    residual omega, then flip the discrepant ones at residuals omega..1.
    """
    if omega == 0:
        return mpfr(1)
    return hp_pow(probs.pm0(omega), n - omega) * probs.pf1_product(omega)


def success_probability_for_order(positions, n: int, probs):
    """Probability that a pass processing the given discrepancy positions
    (sorted indices within the permuted sweep) makes every decision right.

    Between discrepancies the residual is constant and each concordant
    position must be maintained; each discrepancy must be flipped,
    lowering the residual by one.  With all discrepancies placed last this
    reduces to `success_probability`.
    """
    positions = tuple(positions)
    t_hat = len(positions)
    for a, b in zip(positions, positions[1:]):
        if a >= b:
            raise ValueError("positions must be strictly increasing")
    if positions and not (0 <= positions[0] and positions[-1] < n):
        raise ValueError("positions out of range")
    beta = mpfr(1)
    prev = -1
    for i, u in enumerate(positions):
        residual = t_hat - i
        gap = u - prev - 1
        if gap:
            beta *= hp_pow(probs.pm0(residual), gap)
        beta *= probs.pf1(residual)
        prev = u
    gap = n - 1 - prev
    if gap:
        beta *= hp_pow(probs.pm0(0), gap)
    return beta


def _advance(dist: StateDistribution, n: int, probs, mode: str,
             max_state: int | None, mass_floor=0) -> StateDistribution:
    """Apply the one-iteration transition to a residual distribution.

    Sources below `mass_floor` are absorbed into the failure tail instead
    of expanding a full transition row; like the state cap this only ever
    discards success probability, keeping the result conservative.
    """
    out: list = []
    tail = dist.tail
    for omega, mass in enumerate(dist.probs):
        if mass == 0:
            continue
        if mass_floor and mass < mass_floor and omega > 0:
            tail += mass
            continue
        row = one_iteration_transition(omega, n, probs, mode, max_state)
        if len(row.probs) > len(out):
            out.extend([0] * (len(row.probs) - len(out)))
        for x, m in enumerate(row.probs):
            if m != 0:
                out[x] += mass * m
        tail += mass * row.tail
    return StateDistribution(out, tail)


def dfr1_star(params: EnsembleParams, bits: int = DEFAULT_PRECISION,
              check: bool = True, variant: str = "consistent") -> mpfr:
    """Worst-case single-pass failure rate, 1 - Pr{t -> 0 in one pass}."""

    def compute(bb):
        with hp_context(bb):
            if params.t == 0:
                return mpfr(0)
            probs = flip_probabilities(params.n, params.w, params.v,
                                       params.thresholds[0], bb, variant)
            probs.prefetch(params.t)
            return max(1 - success_probability(params.t, params.n, probs), mpfr(0))

    return with_self_check(compute, bits, check, "dfr1_star")


def dfr1_avg(params: EnsembleParams, bits: int = DEFAULT_PRECISION,
             check: bool = True, variant: str = "consistent") -> mpfr:
    """Average single-pass failure rate under a uniform position order.

    The t discrepancies split the sweep into runs of expected length
    d = (n - t)/(t + 1); each run of concordant positions is charged at
    the residual it sees, each discrepancy must be flipped.
    """
    if params.t < 1:
        raise ValueError("average-case estimate needs t >= 1")

    def compute(bb):
        with hp_context(bb):
            probs = flip_probabilities(params.n, params.w, params.v,
                                       params.thresholds[0], bb, variant)
            probs.prefetch(params.t)
            d = mpfr(params.n - params.t) / (params.t + 1)
            acc = mpfr(1)
            for j in range(1, params.t + 1):
                acc *= hp_pow(probs.pm0(j), d)
            acc *= probs.pf1_product(params.t)
            return max(1 - acc, mpfr(0))

    return with_self_check(compute, bits, check, "dfr1_avg")


def multi_iteration_dfr(params: EnsembleParams, mode: str = "joint",
                        bits: int = DEFAULT_PRECISION,
                        max_state: int | None = DEFAULT_MAX_STATE,
                        mass_floor=0,
                        check: bool = True,
                        variant: str = "consistent") -> mpfr:
    """Worst-case failure rate after itermax passes.

    The residual distribution is advanced itermax - 1 times by the
    one-pass transition (threshold of that pass), then closed with the
    exact success probability of the final pass, so itermax = 1 reduces
    to dfr1_star identically.  Truncated mass (beyond max_state, or from
    sources below mass_floor) counts as failure, keeping the estimate
    conservative.
    """
    if mode not in TRANSITION_MODES:
        raise ValueError(f"mode must be one of {TRANSITION_MODES}")

    def compute(bb):
        with hp_context(bb):
            if params.t == 0:
                return mpfr(0)
            dist = StateDistribution([0] * params.t + [1], 0)
            for b_k in params.thresholds[:-1]:
                probs_k = flip_probabilities(params.n, params.w, params.v,
                                             b_k, bb, variant)
                dist = _advance(dist, params.n, probs_k, mode, max_state, mass_floor)
            probs_fin = flip_probabilities(params.n, params.w, params.v,
                                           params.thresholds[-1], bb, variant)
            succ = mpfr(0)
            for omega, mass in enumerate(dist.probs):
                if mass != 0:
                    succ += mass * success_probability(omega, params.n, probs_fin)
            return min(max(1 - succ, mpfr(0)), mpfr(1))

    return with_self_check(compute, bits, check, "multi_iteration_dfr")
