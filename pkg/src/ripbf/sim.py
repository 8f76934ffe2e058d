"""Monte-Carlo failure-rate estimation and model-curve emission.

Every trial owns an RNG substream derived from (master_seed, t, trial
index), so totals are independent of batching and worker count and every
run is reproducible from its spec.  A trial samples a weight-t error,
computes its syndrome, decodes, and counts a failure when the estimate
differs from the true error (a nonzero final syndrome is tallied
separately; miscorrections count as failures either way).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model as model_mod
from .bound import code_specific_dfr1
from .decoder import DecoderConfig, decode_batch
from .numerics import DEFAULT_PRECISION
from .qc import CodeParams, ParityCheckMatrix, keygen, sample_error

SIM_CSV_HEADER = "t,trials,failures,dfr,ci_low,ci_high"
MODEL_CSV_HEADER = "t,variant,dfr"

MODEL_VARIANTS = ("dfr1avg", "dfr1star", "dfrstarN", "codebound")

#: Trials decoded per lockstep numpy batch (memory/speed tradeoff).
BATCH_SIZE = 2048


def wilson_interval(failures: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = failures / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class DfrRecord:
    """One simulated point: failure counts and a 95% Wilson interval."""

    t: int
    trials: int
    failures: int
    ci_low: float
    ci_high: float
    syndrome_failures: int = 0

    @property
    def dfr(self) -> float:
        return self.failures / self.trials

    @classmethod
    def from_counts(cls, t: int, trials: int, failures: int,
                    syndrome_failures: int = 0) -> "DfrRecord":
        lo, hi = wilson_interval(failures, trials)
        return cls(t, trials, failures, lo, hi, syndrome_failures)


@dataclass(frozen=True)
class ModelRecord:
    """One model-curve point."""

    t: int
    variant: str
    dfr: float


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one simulation run.

    The key comes either from `key_path` or from (`params`, `key_seed`);
    exactly one source must be set.
    """

    t_values: tuple[int, ...]
    trials: int
    config: DecoderConfig
    master_seed: int
    key_path: str | None = None
    params: CodeParams | None = None
    key_seed: int | None = None
    workers: int = 1
    out_path: str | None = None
    batch_size: int = field(default=BATCH_SIZE)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.t_values:
            raise ValueError("need at least one t value")
        has_file = self.key_path is not None
        has_gen = self.params is not None and self.key_seed is not None
        if has_file == has_gen:
            raise ValueError("specify exactly one of key_path or (params, key_seed)")

    def resolve_key(self) -> ParityCheckMatrix:
        if self.key_path is not None:
            return ParityCheckMatrix.load(self.key_path)
        return keygen(self.params, self.key_seed)


def trial_rng(master_seed: int, t: int, index: int) -> np.random.Generator:
    """Per-trial substream; independent of batch layout and worker count."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((master_seed, t, index))))


def _run_chunk(H: ParityCheckMatrix, t: int, start: int, count: int,
               master_seed: int, config: DecoderConfig) -> tuple[int, int]:
    """Decode trials [start, start+count) and return failure counts."""
    params = H.params
    n, r = params.n, params.r
    cols = H.col_support_matrix()
    rngs = [trial_rng(master_seed, t, start + i) for i in range(count)]
    errors = np.zeros((count, n), dtype=np.uint8)
    synd = np.zeros((count, r), dtype=np.uint8)
    for i, rng in enumerate(rngs):
        e = sample_error(n, t, rng)
        if e.support:
            errors[i, list(e.support)] = 1
            for j in e.support:
                synd[i, cols[j]] ^= 1
    ehat, final_synd = decode_batch(H, synd, config, rngs=rngs, true_errors=errors)
    mismatch = int((ehat != errors).any(axis=1).sum())
    nonzero_synd = int(final_synd.any(axis=1).sum())
    return mismatch, nonzero_synd


def _run_chunk_packed(args) -> tuple[int, int]:
    key_json, t, start, count, master_seed, thresholds, perm_mode = args
    H = ParityCheckMatrix.from_json(key_json)
    return _run_chunk(H, t, start, count, master_seed,
                      DecoderConfig(thresholds, perm_mode))


def run_experiment(spec: ExperimentSpec, H: ParityCheckMatrix | None = None) -> list[DfrRecord]:
    """Simulate every t in the spec and return one record per t.

    Deterministic given the spec: per-trial substreams make the counts
    independent of chunking and of the worker count.
    """
    if H is None:
        H = spec.resolve_key()
    spec.config.validate_for(H.params.v)
    for t in spec.t_values:
        if not 0 <= t <= H.params.n:
            raise ValueError(f"t={t} out of range for n={H.params.n}")

    chunks = []
    for t in spec.t_values:
        start = 0
        while start < spec.trials:
            count = min(spec.batch_size, spec.trials - start)
            chunks.append((t, start, count))
            start += count

    totals: dict[int, list[int]] = {t: [0, 0] for t in spec.t_values}
    workers = max(1, spec.workers)
    if workers == 1 or len(chunks) == 1:
        for t, start, count in chunks:
            mism, nz = _run_chunk(H, t, start, count, spec.master_seed, spec.config)
            totals[t][0] += mism
            totals[t][1] += nz
    else:
        key_json = H.to_json()
        payloads = [(key_json, t, start, count, spec.master_seed,
                     spec.config.thresholds, spec.config.perm_mode)
                    for t, start, count in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (t, _, _), (mism, nz) in zip(chunks, pool.map(_run_chunk_packed, payloads)):
                totals[t][0] += mism
                totals[t][1] += nz

    records = [DfrRecord.from_counts(t, spec.trials, totals[t][0], totals[t][1])
               for t in spec.t_values]
    if spec.out_path:
        emit_csv(records, spec.out_path)
    return records


def model_curve(params: CodeParams, t_values, variant: str, b,
                itermax: int = 1, key: ParityCheckMatrix | None = None,
                bits: int = DEFAULT_PRECISION) -> list[ModelRecord]:
    """Evaluate one model variant over a t grid.

    Variants: dfr1avg / dfr1star (single pass), dfrstarN (worst case after
    `itermax` passes), codebound (needs the concrete key).
    """
    if variant not in MODEL_VARIANTS:
        raise ValueError(f"variant must be one of {MODEL_VARIANTS}")
    if variant == "codebound" and key is None:
        raise ValueError("codebound needs a concrete key")
    thresholds = (b,) * itermax if isinstance(b, int) else tuple(b)
    records = []
    for t in t_values:
        if variant == "dfr1avg":
            ep = model_mod.EnsembleParams.from_code(params, t, thresholds[0])
            value = model_mod.dfr1_avg(ep, bits=bits)
        elif variant == "dfr1star":
            ep = model_mod.EnsembleParams.from_code(params, t, thresholds[0])
            value = model_mod.dfr1_star(ep, bits=bits)
        elif variant == "dfrstarN":
            ep = model_mod.EnsembleParams.from_code(params, t, thresholds)
            value = model_mod.multi_iteration_dfr(ep, bits=bits)
        else:
            value = code_specific_dfr1(key, t, thresholds[0], bits=bits).dfr_upper
        records.append(ModelRecord(t=t, variant=variant, dfr=float(value)))
    return records


def emit_csv(records, path) -> None:
    """Write records (simulated or model) in their fixed CSV schema.

    UTF-8, LF line endings, floats as shortest round-trip decimals; the
    same records always produce byte-identical files.
    """
    lines = []
    if all(isinstance(rec, ModelRecord) for rec in records) and records:
        lines.append(MODEL_CSV_HEADER)
        for rec in records:
            lines.append(f"{rec.t},{rec.variant},{rec.dfr!r}")
    else:
        lines.append(SIM_CSV_HEADER)
        for rec in records:
            lines.append(f"{rec.t},{rec.trials},{rec.failures},"
                         f"{rec.dfr!r},{rec.ci_low!r},{rec.ci_high!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path) -> list[dict]:
    """Read back an emitted CSV as a list of per-row dicts (strings intact)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]
