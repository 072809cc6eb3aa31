"""Tests for the classical spectral oracle."""

import numpy as np
import pytest

from qpcasim.datasets import dataset_from_spectrum, rank_k_dataset, rank_k_plus_noise
from qpcasim.errors import InvalidInputError
from qpcasim.pca_oracle import (
    CompressedMatrix,
    DataMatrix,
    expected_compressed_state,
    expected_row_state,
    pairwise_overlap_report,
    project,
    select_dimension,
    svd_decompose,
)

from oracles import jacobi_eigh


def test_data_matrix_validation():
    with pytest.raises(InvalidInputError):
        DataMatrix(np.array([1.0, 2.0]))  # not 2-D
    with pytest.raises(InvalidInputError):
        DataMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(InvalidInputError):
        DataMatrix(np.array([[1.0, 2.0], [0.0, 0.0]]))  # zero row
    m = DataMatrix(np.array([[3.0, 4.0]]))
    assert m.frobenius_norm == pytest.approx(5.0, abs=1e-12)
    assert m.n_rows == 1 and m.n_cols == 2


def test_diagonal_matrix_decomposition():
    model = svd_decompose(DataMatrix(np.diag([2.0, 1.0])), 0.95, anchor_index=0)
    np.testing.assert_allclose(model.singular_values, [2.0, 1.0], atol=1e-12)
    # Anchor row (2, 0) fixes the first direction to +e1; the second has zero
    # anchor overlap so only its axis is determined.
    np.testing.assert_allclose(model.right_vectors[:, 0], [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(model.right_vectors[:, 1]), [0.0, 1.0], atol=1e-12)


def test_two_identical_rows():
    model = svd_decompose(DataMatrix(np.array([[1.0, 0.0], [1.0, 0.0]])), 0.95, 0)
    np.testing.assert_allclose(model.singular_values, [np.sqrt(2.0), 0.0], atol=1e-12)
    np.testing.assert_allclose(model.right_vectors[:, 0], [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(model.variance_proportions, [1.0, 0.0], atol=1e-12)
    assert model.rank == 1


def test_reconstruction_and_jacobi_cross_check_seed7():
    rng = np.random.default_rng(7)
    data = DataMatrix(rng.standard_normal((8, 8)))
    model = svd_decompose(data, 1.0, 0)
    recon = model.left_vectors @ np.diag(model.singular_values) @ model.right_vectors.T
    assert np.linalg.norm(data.values - recon) <= 1e-10 * data.frobenius_norm

    # Independent eigensolver on the Gram matrix: eigenvalues must match the
    # squared singular values.
    evals, _ = jacobi_eigh(data.values.T @ data.values)
    np.testing.assert_allclose(
        model.singular_values**2, evals, atol=1e-8 * model.singular_values[0] ** 2
    )


def test_dimension_selection_stated_spectrum():
    data = dataset_from_spectrum([0.90, 0.08, 0.02], n_rows=12, seed=2)
    model = svd_decompose(data, 0.95, 0)
    assert model.selected_dim == 2
    assert select_dimension(model, 0.90) == 1
    assert select_dimension(model, 0.99) == 3
    # Rank-1 spectrum selects 1 at any threshold.
    rank1 = svd_decompose(DataMatrix(np.array([[1.0, 0.0], [2.0, 0.0]])), 0.95, 0)
    assert rank1.selected_dim == 1


def test_threshold_one_selects_rank():
    data = rank_k_dataset(16, 8, 2, seed=5)
    model = svd_decompose(data, 1.0, 0)
    assert model.selected_dim == 2 == model.rank
    noisy = rank_k_plus_noise(16, 8, 2, seed=5, noise_fraction=0.01)
    noisy_model = svd_decompose(noisy, 1.0, 0)
    assert noisy_model.selected_dim == noisy_model.rank == 8


def test_selection_properties_random_spectra():
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        k = int(rng.integers(1, 6))
        lam = np.sort(rng.dirichlet(np.ones(k)))[::-1]
        theta = float(rng.uniform(0.05, 1.0))
        data = dataset_from_spectrum(lam, n_rows=10, seed=seed, n_cols=max(k, 3))
        model = svd_decompose(data, theta, 0)
        cum = model.cumulative_variance()
        d = model.selected_dim
        assert cum[d - 1] >= theta
        if d > 1:
            assert cum[d - 2] < theta
        # Raising the threshold never shrinks the selection.
        assert select_dimension(model, min(1.0, theta + 0.04)) >= d


def test_model_invariants_random_matrices():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        d = int(rng.integers(2, 9))
        data = DataMatrix(rng.standard_normal((n, d)))
        model = svd_decompose(data, 0.95, anchor_index=int(rng.integers(n)))
        sig = model.singular_values
        assert np.all(np.diff(sig) <= 1e-12)
        assert abs(model.variance_proportions.sum() - 1.0) <= 1e-12
        gram_v = model.right_vectors.T @ model.right_vectors
        np.testing.assert_allclose(gram_v, np.eye(d), atol=1e-10)
        gram_u = model.left_vectors.T @ model.left_vectors
        np.testing.assert_allclose(gram_u, np.eye(model.left_vectors.shape[1]), atol=1e-10)
        # Sign convention: nonnegative anchor overlap on every kept direction.
        anchor = data.values[model.anchor_index]
        overlaps = model.right_vectors[:, : model.rank].T @ anchor
        assert np.all(overlaps >= -1e-10)


def test_projection_diagonal_case():
    data = DataMatrix(np.diag([2.0, 1.0]))
    model = svd_decompose(data, 0.5, 0)
    assert model.selected_dim == 1
    y = project(data, model)
    np.testing.assert_allclose(y.values, [[2.0], [0.0]], atol=1e-12)


def test_projection_rank2_product_seed3():
    rng = np.random.default_rng(3)
    data = DataMatrix(rng.standard_normal((16, 2)) @ rng.standard_normal((2, 8)))
    model = svd_decompose(data, 0.95, 0)
    assert model.selected_dim == 2
    y = project(data, model)
    assert abs(y.frobenius_norm - data.frobenius_norm) <= 1e-10
    # Row i of Y equals V_d^T x_i.
    expected = data.values @ model.right_vectors[:, :2]
    np.testing.assert_allclose(y.values, expected, atol=1e-12)


def test_projection_full_dimension_preserves_row_norms():
    rng = np.random.default_rng(21)
    data = DataMatrix(rng.standard_normal((6, 4)))
    model = svd_decompose(data, 1.0, 0)
    y = project(data, model, dim=4)
    np.testing.assert_allclose(
        np.linalg.norm(y.values, axis=1), np.linalg.norm(data.values, axis=1), atol=1e-10
    )


def test_projection_energy_identity():
    for seed in range(20):
        data = rank_k_dataset(12, 6, 3, seed=seed)
        model = svd_decompose(data, 0.7, 0)
        y = project(data, model)
        kept = np.sum(model.singular_values[: model.selected_dim] ** 2)
        assert abs(y.frobenius_norm**2 - kept) <= 1e-10 * max(kept, 1.0)


def test_projection_idempotence():
    for seed in range(20):
        data = rank_k_dataset(16, 8, 3, seed=seed)
        model = svd_decompose(data, 0.95, 0)
        y = project(data, model)
        again = project(DataMatrix(y.values), svd_decompose(DataMatrix(y.values), 0.95, 0))
        np.testing.assert_allclose(again.values, y.values, atol=1e-8)


def test_expected_state_single_entry():
    y = CompressedMatrix(values=np.array([[1.0]]), source_shape=(1, 1), selected_dim=1)
    state = expected_compressed_state(y)
    assert state.basis_amplitude({"row": 0, "index": 1}) == pytest.approx(1.0)


def test_expected_state_identity_pair():
    y = CompressedMatrix(values=np.eye(2), source_shape=(2, 2), selected_dim=2)
    state = expected_compressed_state(y)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    assert state.basis_amplitude({"row": 0, "index": 1}) == pytest.approx(inv_sqrt2)
    assert state.basis_amplitude({"row": 1, "index": 2}) == pytest.approx(inv_sqrt2)
    assert state.basis_amplitude({"row": 0, "index": 2}) == pytest.approx(0.0)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_expected_state_normalization_rank2():
    data = rank_k_dataset(16, 8, 2, seed=9)
    model = svd_decompose(data, 0.95, 0)
    y = project(data, model)
    state = expected_compressed_state(y)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    # Label 0 on the index register is unused.
    marginal = state.probabilities("index")
    assert marginal[0] == pytest.approx(0.0, abs=1e-15)


def test_expected_row_state_matches_row():
    data = rank_k_dataset(8, 4, 2, seed=4)
    model = svd_decompose(data, 0.95, 0)
    y = project(data, model)
    row = 3
    state = expected_row_state(y, row)
    want = y.values[row] / np.linalg.norm(y.values[row])
    for j, amp in enumerate(want, start=1):
        assert state.basis_amplitude({"index": j}) == pytest.approx(amp, abs=1e-12)


def test_pairwise_overlap_exact_rank_is_lossless():
    data = rank_k_dataset(12, 6, 2, seed=13)
    model = svd_decompose(data, 0.95, 0)
    report = pairwise_overlap_report(data, project(data, model), tolerance=1e-9)
    assert report.max_deviation <= 1e-10
    assert report.fraction_within == 1.0
    assert report.flagged_rows == ()


def test_pairwise_overlap_full_dimension_is_lossless():
    rng = np.random.default_rng(31)
    data = DataMatrix(rng.standard_normal((8, 4)))
    model = svd_decompose(data, 1.0, 0)
    report = pairwise_overlap_report(data, project(data, model), tolerance=1e-9)
    assert report.max_deviation <= 1e-10


def test_pairwise_overlap_noisy_data_recorded():
    # Seed 26 gives signal rows of comparable norm, so no row is swamped by
    # the 1% noise floor. Observed max deviation 2.25e-4 against residual
    # variance 5.1e-5; frozen with headroom as a regression threshold.
    data = rank_k_plus_noise(16, 8, 2, seed=26, noise_fraction=0.01)
    model = svd_decompose(data, 0.95, 0)
    assert model.selected_dim == 2
    report = pairwise_overlap_report(data, project(data, model), tolerance=1e-3)
    residual = 1.0 - model.variance_captured
    assert report.max_deviation <= 10.0 * residual
    assert report.max_deviation <= 3.0e-4
    assert report.deviations.size == 16 * 15 // 2


def test_pairwise_overlap_flags_zero_norm_rows():
    # Third row lives entirely outside the kept 2-dimensional span.
    data = DataMatrix(np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 0.1]]))
    model = svd_decompose(data, 0.95, 0)
    assert model.selected_dim == 2
    report = pairwise_overlap_report(data, project(data, model), tolerance=1e-6)
    assert 2 in report.flagged_rows
