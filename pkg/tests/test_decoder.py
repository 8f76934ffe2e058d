import numpy as np
import pytest

from conftest import dense_matrix, dense_syndrome, reference_decode_dense
from ripbf import (
    BitVec,
    CodeParams,
    DecoderConfig,
    decode,
    decode_batch,
    keygen,
    sample_error,
    upc,
)
from ripbf.decoder import flip_and_update
from ripbf.sim import trial_rng


def find_low_overlap_code(p=13, v=3, max_gamma=1):
    """First seed whose 2-block code has all pairwise column overlaps
    below the flip threshold used in the single-error test."""
    for seed in range(200):
        H = keygen(CodeParams(2, p, v), seed)
        dense = dense_matrix(H).astype(int)
        full = dense.T @ dense
        np.fill_diagonal(full, 0)
        if full.max() <= max_gamma:
            return H
    raise AssertionError("no low-overlap code found in seed range")


def test_config_validation():
    with pytest.raises(ValueError):
        DecoderConfig((), "random")
    with pytest.raises(ValueError):
        DecoderConfig((5,), "sideways")
    cfg = DecoderConfig((2, 3), "identity")
    assert cfg.itermax == 2
    cfg.validate_for(3)
    with pytest.raises(ValueError):
        cfg.validate_for(9)          # 2 < ceil(9/2)
    with pytest.raises(ValueError):
        DecoderConfig((4,)).validate_for(3)   # 4 > v


def test_upc_trivial_and_single_error(tiny_code):
    params = tiny_code.params
    zero = BitVec.zero(params.r)
    ones = BitVec(params.r, tuple(range(params.r)))
    for j in (0, 3, params.n - 1):
        assert upc(tiny_code, zero, j) == 0
        assert upc(tiny_code, ones, j) == params.v
        s = tiny_code.syndrome(BitVec(params.n, (j,)))
        assert upc(tiny_code, s, j) == params.v
        assert upc(tiny_code, s.to_dense(), j) == params.v


def test_flip_and_update_involution_and_linearity(tiny_code):
    params = tiny_code.params
    rng = np.random.Generator(np.random.PCG64(3))
    e = sample_error(params.n, 4, rng)
    s = tiny_code.syndrome(e).to_dense()
    ehat = np.zeros(params.n, dtype=np.uint8)
    s0, ehat0 = s.copy(), ehat.copy()
    flip_and_update(s, tiny_code, 5, ehat)
    flip_and_update(s, tiny_code, 5, ehat)
    assert (s == s0).all() and (ehat == ehat0).all()

    # flipping a true error position leaves the syndrome of the rest
    j = e.support[0]
    flip_and_update(s, tiny_code, j, ehat)
    rest = BitVec(params.n, tuple(x for x in e.support if x != j))
    assert (s == tiny_code.syndrome(rest).to_dense()).all()


def test_flip_and_update_matches_dense_recomputation(tiny_code):
    dense = dense_matrix(tiny_code)
    params = tiny_code.params
    rng = np.random.Generator(np.random.PCG64(9))
    e = sample_error(params.n, 3, rng)
    s = tiny_code.syndrome(e).to_dense()
    ehat = np.zeros(params.n, dtype=np.uint8)
    for j in rng.integers(0, params.n, size=10):
        flip_and_update(s, tiny_code, int(j), ehat)
        expect = dense_syndrome(dense, e.to_dense() ^ ehat)
        assert (s == expect).all()


def test_decode_null_syndrome_is_immediate_success(tiny_code):
    out = decode(tiny_code, BitVec.zero(tiny_code.params.r), DecoderConfig((2,), "identity"))
    assert out.success and out.e_hat.weight == 0 and out.iterations_run == 0


def test_single_error_corrected_when_overlaps_below_threshold():
    H = find_low_overlap_code()
    params = H.params
    cfg = DecoderConfig((2,), "identity")
    for j in range(0, params.n, 5):
        e = BitVec(params.n, (j,))
        s = H.syndrome(e)
        assert upc(H, s, j) == params.v           # the error position saturates
        out = decode(H, s, cfg, true_error=e)
        assert out.success and out.e_hat == e
        assert out.residual_weights == (0,)


def test_decode_matches_dense_reference(tiny_code):
    params = tiny_code.params
    dense = dense_matrix(tiny_code)
    cfg = DecoderConfig((2, 2), "random")
    for trial in range(30):
        rng = trial_rng(99, 2, trial)
        e = sample_error(params.n, 2, rng)
        s = tiny_code.syndrome(e)
        # fix the permutations so reference and library see the same sweep
        perm_rng = trial_rng(99, 2, trial)
        sample_error(params.n, 2, perm_rng)
        orders = [perm_rng.permutation(params.n) for _ in range(cfg.itermax)]
        ref_ehat, ref_s = reference_decode_dense(dense, dense_syndrome(dense, e.to_dense()),
                                                 cfg.thresholds, orders)
        out = decode(tiny_code, s, cfg, rng=rng, true_error=e)
        assert (out.e_hat.to_dense() == ref_ehat).all()
        assert (out.final_syndrome.to_dense() == ref_s).all()


def test_final_syndrome_invariant_under_instrumentation(small_code):
    params = small_code.params
    cfg = DecoderConfig((8,), "random")
    for trial in range(10):
        rng = trial_rng(17, 9, trial)
        e = sample_error(params.n, 9, rng)
        out = decode(small_code, small_code.syndrome(e), cfg, rng=rng, true_error=e)
        assert out.final_syndrome == small_code.syndrome(e ^ out.e_hat)
        assert out.success == (out.final_syndrome.weight == 0)
        assert out.residual_weights is not None
        assert len(out.residual_weights) == cfg.itermax


def test_worst_case_mode_deterministic(small_code):
    params = small_code.params
    rng = np.random.Generator(np.random.PCG64(4))
    e = sample_error(params.n, 10, rng)
    s = small_code.syndrome(e)
    cfg = DecoderConfig((8,), "worst")
    out1 = decode(small_code, s, cfg, true_error=e)
    out2 = decode(small_code, s, cfg, true_error=e)
    assert out1 == out2
    with pytest.raises(ValueError):
        decode(small_code, s, cfg)    # true error required


def test_identity_mode_needs_no_rng(small_code):
    params = small_code.params
    rng = np.random.Generator(np.random.PCG64(6))
    e = sample_error(params.n, 6, rng)
    out = decode(small_code, small_code.syndrome(e), DecoderConfig((8,), "identity"))
    assert out.final_syndrome == small_code.syndrome(e ^ out.e_hat)


def test_early_exit_skips_later_iterations():
    H = find_low_overlap_code()
    params = H.params
    e = BitVec(params.n, (4,))
    out = decode(H, H.syndrome(e), DecoderConfig((2, 2, 2), "identity"), true_error=e)
    assert out.success and out.iterations_run == 1
    assert out.residual_weights == (0, 0, 0)   # all itermax slots recorded


@pytest.mark.parametrize("mode", ["random", "worst", "identity"])
@pytest.mark.parametrize("itermax", [1, 2])
def test_batch_matches_scalar(small_code, mode, itermax):
    params = small_code.params
    cfg = DecoderConfig((8,) * itermax, mode)
    t = 8 if itermax == 1 else 13    # keeps both outcomes represented
    n, r, B = params.n, params.r, 120
    cols = small_code.col_support_matrix()

    rngs = [trial_rng(42, t, i) for i in range(B)]
    errors = np.zeros((B, n), dtype=np.uint8)
    synds = np.zeros((B, r), dtype=np.uint8)
    for i, rg in enumerate(rngs):
        e = sample_error(n, t, rg)
        errors[i, list(e.support)] = 1
        for j in e.support:
            synds[i, cols[j]] ^= 1
    ehat, final_synd = decode_batch(small_code, synds, cfg,
                                    rngs=rngs, true_errors=errors)

    outcomes = set()
    for i in range(B):
        rg = trial_rng(42, t, i)
        e = sample_error(n, t, rg)
        out = decode(small_code, small_code.syndrome(e), cfg,
                     rng=rg, true_error=e)
        assert (out.e_hat.to_dense() == ehat[i]).all()
        assert (out.final_syndrome.to_dense() == final_synd[i]).all()
        outcomes.add(out.success)
    assert outcomes == {True, False}    # genuinely mixed outcomes


def test_batch_input_not_mutated(small_code):
    params = small_code.params
    rngs = [trial_rng(1, 5, i) for i in range(4)]
    synds = np.zeros((4, params.r), dtype=np.uint8)
    cols = small_code.col_support_matrix()
    errors = np.zeros((4, params.n), dtype=np.uint8)
    for i, rg in enumerate(rngs):
        e = sample_error(params.n, 5, rg)
        errors[i, list(e.support)] = 1
        for j in e.support:
            synds[i, cols[j]] ^= 1
    before = synds.copy()
    decode_batch(small_code, synds, DecoderConfig((8,), "identity"))
    assert (synds == before).all()
