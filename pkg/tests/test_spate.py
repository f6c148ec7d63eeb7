"""Local association fields: Moran's I, the expectation-based statistic,
and the channel-concatenated embedding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_spate
from spategan.errors import ShapeError
from spategan.expectation import DEFAULT_EPS_TOTAL, ExpectationConfig
from spategan.spate import (
    DEFAULT_EPS_VAR,
    concat_embedding,
    local_morans_i,
    spate,
    spate_values,
)
from spategan.spate import _embedding_variant
from spategan.tensor import SpatioTemporalBatch
from spategan.weights import build_grid_weights

W33_ROOK = build_grid_weights(3, 3, "rook")
W33_QUEEN = build_grid_weights(3, 3, "queen")


def test_moran_constant_frame_is_all_zeros():
    x = np.full((1, 2, 3, 3), 7.0)
    field = local_morans_i(x, W33_QUEEN)
    assert np.array_equal(field.values, np.zeros_like(x))
    assert field.variant == "moran"


def test_moran_checkerboard_center_is_negative():
    frame = np.array(
        [[1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, 1.0]]
    )
    field = local_morans_i(frame[None, None], W33_ROOK)
    assert field.values[0, 0, 1, 1] < 0.0


def test_moran_hot_pixel_signs():
    x = np.zeros((1, 1, 5, 5))
    x[0, 0, 2, 2] = 1.0
    weights = build_grid_weights(5, 5, "rook")
    field = local_morans_i(x, weights)
    ref = oracle_spate(x[0], "moran", 1.0, "rook")
    np.testing.assert_allclose(field.values[0], ref, rtol=1e-12, atol=1e-15)
    assert field.values[0, 0, 2, 2] < 0.0  # hot pixel against negative ring
    for r, c in [(1, 2), (3, 2), (2, 1), (2, 3)]:
        assert field.values[0, 0, r, c] < 0.0  # negative residual, hot neighbor


def test_moran_invariant_to_per_frame_offset():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 4, 3, 3))
    offsets = rng.normal(size=(2, 4, 1, 1)) * 10.0
    a = local_morans_i(x, W33_QUEEN).values
    b = local_morans_i(x + offsets, W33_QUEEN).values
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("variant", ["k", "kw", "ksw"])
def test_spate_constant_sequence_is_all_zeros(variant):
    x = np.full((2, 3, 3, 3), 4.0)
    values = spate_values(x, W33_QUEEN, variant, 2.0, DEFAULT_EPS_TOTAL)
    assert np.array_equal(values, np.zeros_like(x))


def test_spate_2x2_matches_bruteforce_reference():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 1.5, size=(1, 2, 2, 2))
    weights = build_grid_weights(2, 2, "rook")
    values = spate_values(x, weights, "k", 1.0, DEFAULT_EPS_TOTAL)
    ref = oracle_spate(x[0], "k", 1.0, "rook")
    np.testing.assert_allclose(values[0], ref, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("variant", ["k", "kw", "ksw"])
@pytest.mark.parametrize("scheme", ["rook", "queen"])
def test_spate_matches_bruteforce_reference(variant, scheme):
    rng = np.random.default_rng(2)
    weights = build_grid_weights(3, 3, scheme)
    x = rng.uniform(0.5, 1.5, size=(2, 4, 3, 3))
    values = spate_values(x, weights, variant, 2.5, DEFAULT_EPS_TOTAL)
    for b in range(2):
        ref = oracle_spate(x[b], variant, 2.5, scheme)
        np.testing.assert_allclose(values[b], ref, rtol=1e-10, atol=1e-13)


def test_separable_data_gives_identically_zero_field():
    rng = np.random.default_rng(3)
    a_t = rng.uniform(0.5, 1.5, size=4)
    b_i = rng.uniform(0.5, 1.5, size=9)
    x = (a_t[:, None] * b_i[None, :]).reshape(1, 4, 3, 3)
    values = spate_values(x, W33_QUEEN, "k", 1.0, DEFAULT_EPS_TOTAL)
    np.testing.assert_allclose(values, 0.0, atol=1e-8)


@given(alpha=st.floats(min_value=1e-2, max_value=1e3), seed=st.integers(0, 2**31))
@settings(max_examples=40, deadline=None)
def test_scale_invariance_of_values(alpha, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.5, 1.5, size=(1, 3, 3, 3))
    base = spate_values(x, W33_QUEEN, "k", 1.0, DEFAULT_EPS_TOTAL)
    scaled = spate_values(alpha * x, W33_QUEEN, "k", 1.0, DEFAULT_EPS_TOTAL)
    np.testing.assert_allclose(scaled, base, rtol=1e-9, atol=1e-12)


def test_ksw_frame_zero_identically_zero():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.5, 1.5, size=(3, 4, 3, 3))
    values = spate_values(x, W33_QUEEN, "ksw", 2.0, DEFAULT_EPS_TOTAL)
    assert np.array_equal(values[:, 0], np.zeros((3, 3, 3)))
    assert np.any(values[:, 1:] != 0.0)


def test_zero_variance_frame_guard_is_per_frame():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 3, 3, 3))
    x[0, 1] = 42.0  # constant frame in the middle
    field = local_morans_i(x, W33_QUEEN)
    assert np.array_equal(field.values[0, 1], np.zeros((3, 3)))
    assert np.any(field.values[0, 0] != 0.0)
    assert np.any(field.values[0, 2] != 0.0)


def test_spate_wrapper_carries_metadata_and_checks_grid():
    rng = np.random.default_rng(6)
    x = rng.uniform(0.5, 1.5, size=(1, 3, 3, 3))
    cfg = ExpectationConfig(variant="kw", lengthscale=2.0)
    field = spate(x, W33_QUEEN, cfg)
    assert field.variant == "kw"
    assert field.lengthscale == 2.0
    assert field.scheme == "queen"
    raw = spate_values(x, W33_QUEEN, "kw", 2.0, cfg.eps_total)
    np.testing.assert_array_equal(field.values, raw)
    with pytest.raises(ShapeError):
        spate(x, build_grid_weights(2, 2, "rook"), cfg)


def test_concat_embedding_zeros_and_shapes():
    zeros = np.zeros((2, 4, 8, 8))
    field = local_morans_i(zeros, build_grid_weights(8, 8, "queen"))
    out = concat_embedding(zeros, field)
    assert out.dims == (2, 4, 2, 8, 8)
    assert np.array_equal(out.values, np.zeros((2, 4, 2, 8, 8)))


def test_concat_embedding_channel_slices_recover_inputs():
    rng = np.random.default_rng(7)
    x = rng.uniform(0.5, 1.5, size=(2, 4, 3, 3))
    field = spate(x, W33_QUEEN, ExpectationConfig(variant="k"))
    out = concat_embedding(x, field)
    np.testing.assert_array_equal(out.channel(0), x)
    np.testing.assert_array_equal(out.channel(1), field.values)


def test_concat_embedding_rejects_mismatched_shapes():
    rng = np.random.default_rng(8)
    x = rng.uniform(0.5, 1.5, size=(2, 4, 3, 3))
    field = spate(x, W33_QUEEN, ExpectationConfig(variant="k"))
    with pytest.raises(ShapeError):
        concat_embedding(x[:1], field)


def test_embedding_variant_dispatch_matches_public_paths():
    rng = np.random.default_rng(9)
    x = rng.uniform(0.5, 1.5, size=(2, 3, 3, 3))
    moran = _embedding_variant(x, W33_QUEEN, "moran", 1.0, DEFAULT_EPS_TOTAL)
    np.testing.assert_array_equal(moran, local_morans_i(x, W33_QUEEN).values)
    kw = _embedding_variant(x, W33_QUEEN, "kw", 2.0, DEFAULT_EPS_TOTAL)
    np.testing.assert_array_equal(kw, spate_values(x, W33_QUEEN, "kw", 2.0, DEFAULT_EPS_TOTAL))


def test_eps_var_guard_threshold():
    # residual energy just below the guard comes back zeroed
    x = np.full((1, 1, 3, 3), 1.0)
    x[0, 0, 0, 0] += np.sqrt(DEFAULT_EPS_VAR) * 0.5
    field = local_morans_i(x, W33_QUEEN)
    assert np.array_equal(field.values, np.zeros_like(x))
