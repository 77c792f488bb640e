"""Basis construction, projection, and reconstruction tests.

The wavelet oracle builds the analysis matrix by directly filtering and
decimating each unit vector (signal-domain recursion), independent of the
production construction which composes per-level filter matrices.
"""

import numpy as np
import pytest

from fungraph import (
    BasisMatrix,
    BasisSpec,
    ConfigError,
    FunctionalDataset,
    IncompatibleGrid,
    LossyRepresentation,
    RankDeficient,
    build_basis,
    check_lossless,
    fit_basis,
    read_basis_csv,
    reconstruct,
    to_basis_space,
)

SQRT3 = np.sqrt(3.0)
LO = np.array([1 + SQRT3, 3 + SQRT3, 3 - SQRT3, 1 - SQRT3]) / (4 * np.sqrt(2))
HI = np.array([LO[3], -LO[2], LO[1], -LO[0]])


def dwt_oracle_matrix(T, levels):
    """Analysis matrix via per-signal periodic filter-decimate recursion."""

    def analyze(x):
        details = []
        approx = x
        for _ in range(levels):
            m = approx.size
            windows = approx[(2 * np.arange(m // 2)[:, None] + np.arange(4)[None, :]) % m]
            details.append(windows @ HI)
            approx = windows @ LO
        return np.concatenate([approx] + details[::-1])

    return np.column_stack([analyze(e) for e in np.eye(T)])


def random_dataset(n, p, T, seed=0):
    return FunctionalDataset(np.random.default_rng(seed).standard_normal((n, p, T)))


class TestBuildBasis:
    def test_identity(self):
        b = build_basis(BasisSpec(kind="identity"), 4)
        assert np.array_equal(b.phi, np.eye(4))

    @pytest.mark.parametrize("T,levels", [(8, 1), (32, 3), (64, 6)])
    def test_wavelet_orthonormal(self, T, levels):
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=levels), T)
        assert b.K == T
        assert np.max(np.abs(b.phi @ b.phi.T - np.eye(T))) < 1e-10

    @pytest.mark.parametrize("T,levels", [(8, 1), (32, 3)])
    def test_wavelet_matches_filter_bank_oracle(self, T, levels):
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=levels), T)
        assert np.max(np.abs(b.phi - dwt_oracle_matrix(T, levels))) < 1e-12

    def test_wavelet_rejects_non_dyadic_grid(self):
        with pytest.raises(IncompatibleGrid):
            build_basis(BasisSpec(kind="wavelet-db2", levels=3), 12)

    def test_fourier_orthonormal(self):
        for T in (8, 9):
            b = build_basis(BasisSpec(kind="fourier"), T)
            assert b.K == T
            assert np.max(np.abs(b.phi @ b.phi.T - np.eye(T))) < 1e-10

    def test_external_rank_deficient(self):
        mat = np.ones((3, 4))
        mat[1] = np.arange(4)
        mat[2] = mat[0]  # two equal rows, rank 2 < 3
        with pytest.raises(RankDeficient):
            build_basis(BasisSpec(kind="external-matrix"), 4, matrix=mat)

    def test_external_valid(self):
        rng = np.random.default_rng(1)
        mat = rng.standard_normal((3, 6))
        b = build_basis(BasisSpec(kind="external-matrix"), 6, matrix=mat)
        assert np.max(np.abs(b.phi @ b.pinv_factor - np.eye(3))) < 1e-10

    def test_more_rows_than_grid_rejected(self):
        with pytest.raises(RankDeficient):
            BasisMatrix(np.random.default_rng(0).standard_normal((5, 4)))

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            BasisSpec(kind="bspline")
        with pytest.raises(ConfigError):
            BasisSpec(energy_keep=0.0)
        with pytest.raises(ConfigError):
            BasisSpec(kind="wavelet-db2", levels=0)
        with pytest.raises(ConfigError):
            BasisSpec(boundary="reflect")


class TestProjection:
    def test_identity_is_exact(self):
        data = random_dataset(2, 3, 6)
        b = build_basis(BasisSpec(kind="identity"), 6)
        assert np.array_equal(to_basis_space(data, b), data.values)

    def test_orthonormal_projection_is_isometry(self):
        data = random_dataset(3, 2, 16)
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=2), 16)
        coeffs = to_basis_space(data, b)
        assert np.max(np.abs(coeffs - data.values @ b.phi.T)) < 1e-12
        norm_in = np.linalg.norm(data.values, axis=2)
        norm_out = np.linalg.norm(coeffs, axis=2)
        assert np.max(np.abs(norm_in - norm_out)) < 1e-10

    def test_projection_residual_matches_least_squares(self):
        # general full-rank 3x6 basis: residual equals the normal-equations solve
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((3, 6))
        b = build_basis(BasisSpec(kind="external-matrix"), 6, matrix=mat)
        data = random_dataset(2, 2, 6, seed=6)
        recon = to_basis_space(data, b) @ b.phi
        for i in range(2):
            for j in range(2):
                y = data.values[i, j]
                coef = np.linalg.solve(mat @ mat.T, mat @ y)
                assert np.max(np.abs(recon[i, j] - coef @ mat)) < 1e-10

    def test_dimension_mismatch(self):
        data = random_dataset(1, 2, 6)
        b = build_basis(BasisSpec(kind="identity"), 4)
        with pytest.raises(Exception):
            to_basis_space(data, b)


class TestReconstruct:
    def test_identity_roundtrip(self):
        data = random_dataset(2, 2, 8)
        b = build_basis(BasisSpec(kind="identity"), 8)
        assert np.array_equal(reconstruct(to_basis_space(data, b), b).values, data.values)

    def test_orthonormal_roundtrip(self):
        data = random_dataset(2, 2, 32)
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=4), 32)
        back = reconstruct(to_basis_space(data, b), b)
        assert np.max(np.abs(back.values - data.values)) < 1e-8

    def test_projection_is_idempotent(self):
        rng = np.random.default_rng(9)
        mat = rng.standard_normal((4, 10))
        b = build_basis(BasisSpec(kind="external-matrix"), 10, matrix=mat)
        data = random_dataset(2, 2, 10, seed=10)
        once = reconstruct(to_basis_space(data, b), b)
        twice = reconstruct(to_basis_space(once, b), b)
        assert np.max(np.abs(once.values - twice.values)) < 1e-10


class TestLossless:
    def test_identity_errors_zero(self):
        data = random_dataset(2, 2, 8)
        b = build_basis(BasisSpec(kind="identity"), 8)
        report = check_lossless(data, b)
        assert report.max_error == 0.0
        assert report.flagged == ()

    def test_orthonormal_errors_tiny(self):
        data = random_dataset(2, 2, 32)
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=3), 32)
        assert check_lossless(data, b).max_error < 1e-8

    def test_mild_truncation_stays_lossless(self):
        # smooth signals concentrate energy at coarse scales; keeping 99%
        # of the energy leaves every curve within a loose epsilon
        t = np.arange(1, 65)
        values = np.stack([
            np.stack([np.sin(2 * np.pi * f * t / 64.0) for f in (1, 2)])
            for _ in range(3)
        ])
        data = FunctionalDataset(values)
        spec = BasisSpec(kind="wavelet-db2", levels=4, energy_keep=0.99, epsilon=0.2)
        import warnings as w

        with w.catch_warnings():
            w.simplefilter("error", LossyRepresentation)
            truncated = fit_basis(spec, data)
        assert truncated.K < 64
        assert check_lossless(data, truncated, epsilon=0.2).max_error <= 0.2

    def test_truncation_flags_rough_signal(self):
        # one curve is pure fine-scale detail, so dropping 10% of energy
        # by count must hit it
        T = 32
        full = build_basis(BasisSpec(kind="wavelet-db2", levels=3), T)
        coeffs = np.zeros((1, 2, T))
        coeffs[0, 0, :8] = 3.0  # coarse block
        coeffs[0, 1, -8:] = 1.0  # finest-detail block
        values = coeffs @ full.phi
        data = FunctionalDataset(values)
        spec = BasisSpec(kind="wavelet-db2", levels=3, energy_keep=0.9, epsilon=1e-6)
        with pytest.warns(LossyRepresentation):
            truncated = fit_basis(spec, data)
        report = check_lossless(data, truncated, epsilon=1e-6)
        assert any(pair[1] == 1 for pair in report.flagged)
        # dropped energy matches the explicit sum over dropped coefficients
        assert truncated.dropped_energy == pytest.approx(8 * 1.0 / (8 * 9.0 + 8 * 1.0))


class TestEnergyRules:
    def test_energy_preserved_without_truncation(self):
        data = random_dataset(3, 2, 32)
        b = build_basis(BasisSpec(kind="wavelet-db2", levels=3), 32)
        coeffs = to_basis_space(data, b)
        assert abs(np.sum(coeffs**2) - np.sum(data.values**2)) < 1e-8

    def test_dropped_energy_monotone_in_energy_keep(self):
        data = random_dataset(4, 3, 64, seed=3)
        dropped = []
        for keep in (0.5, 0.7, 0.9, 0.99, 1.0):
            spec = BasisSpec(kind="wavelet-db2", levels=3, energy_keep=keep, epsilon=10.0)
            dropped.append(fit_basis(spec, data).dropped_energy)
        assert all(a >= b for a, b in zip(dropped, dropped[1:]))

    def test_pinv_identity_invariant_across_kinds(self):
        for spec, T in [
            (BasisSpec(kind="identity"), 12),
            (BasisSpec(kind="fourier"), 12),
            (BasisSpec(kind="wavelet-db2", levels=2), 12),
        ]:
            b = build_basis(spec, T)
            assert np.max(np.abs(b.phi @ b.pinv_factor - np.eye(b.K))) < 1e-10


def test_read_basis_csv(tmp_path):
    mat = np.arange(12.0).reshape(3, 4)
    path = tmp_path / "phi.csv"
    np.savetxt(path, mat, delimiter=",")
    assert np.array_equal(read_basis_csv(path), mat)
