"""Bit-flipping decoding of quasi-cyclic LDPC/MDPC codes.

Randomized in-place decoder, statistical failure-rate models, a
code-specific conservative bound, a Monte-Carlo harness and weak-key
screening.
"""

from .bound import (
    BoundResult,
    ScreeningReport,
    SubsetCountQuery,
    bound_pf1,
    bound_pm0,
    code_specific_dfr1,
    count_subsets,
    screen_key,
)
from .decoder import DecodeOutcome, DecoderConfig, decode, decode_batch, upc
from .model import (
    EnsembleParams,
    FlipProbabilities,
    StateDistribution,
    dfr1_avg,
    dfr1_star,
    distribution_after_E0,
    distribution_after_E1,
    flip_given_1,
    maintain_given_0,
    multi_iteration_dfr,
    one_iteration_transition,
    rho0u,
    rho1u,
    success_probability,
    success_probability_for_order,
)
from .numerics import DEFAULT_PRECISION, binomial, hp_context, hp_pow, ratio_to_real
from .qc import (
    BitVec,
    CirculantBlock,
    CodeParams,
    GammaRow,
    ParityCheckMatrix,
    gamma_representative_rows,
    keygen,
    sample_error,
)
from .sim import (
    DfrRecord,
    ExperimentSpec,
    ModelRecord,
    emit_csv,
    model_curve,
    run_experiment,
    wilson_interval,
)

__version__ = "0.1.0"
