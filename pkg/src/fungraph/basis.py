"""Basis matrices, projection into the dual coefficient space, reconstruction.

A basis is a K x T matrix ``phi`` of full row rank whose rows are basis
functions evaluated on the observation grid. Curves (row vectors of length
T) map to coefficient vectors via the generalized inverse,
``y* = y @ phi' (phi phi')^{-1}``, and back via ``y_hat = y* @ phi``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import FunctionalDataset
from .errors import (
    ConfigError,
    DimensionMismatch,
    IncompatibleGrid,
    LossyRepresentation,
    RankDeficient,
)

# Daubechies-2 orthonormal decomposition filters.
_SQRT3 = np.sqrt(3.0)
_DB2_LO = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * np.sqrt(2.0))
_DB2_HI = np.array([_DB2_LO[3], -_DB2_LO[2], _DB2_LO[1], -_DB2_LO[0]])

_KINDS = ("wavelet-db2", "fourier", "identity", "external-matrix")
_PINV_RCOND = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Configuration for basis construction.

    energy_keep in (0,1] controls coefficient truncation against observed
    data (1.0 keeps everything); epsilon is the maximum tolerated relative
    reconstruction error per curve before a representation counts as lossy.
    """

    kind: str = "wavelet-db2"
    levels: int = 6
    boundary: str = "periodic"
    energy_keep: float = 1.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown basis kind {self.kind!r}, expected one of {_KINDS}")
        if not 0.0 < self.energy_keep <= 1.0:
            raise ConfigError(f"energy_keep must be in (0,1], got {self.energy_keep}")
        if self.kind == "wavelet-db2" and self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        if self.boundary != "periodic":
            raise ConfigError(f"only periodic boundary is supported, got {self.boundary!r}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class BasisMatrix:
    """A K x T basis with its cached generalized-inverse factor."""

    phi: np.ndarray
    pinv_factor: np.ndarray = field(default=None)  # type: ignore[assignment]
    dropped_energy: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2:
            raise DimensionMismatch(f"phi must be 2-d, got shape {phi.shape}")
        K, T = phi.shape
        if K > T:
            raise RankDeficient(f"K={K} exceeds T={T}; a basis cannot have more rows than grid points")
        sv = np.linalg.svd(phi, compute_uv=False)
        if (sv > sv[0] * _PINV_RCOND).sum() < K:
            raise RankDeficient(f"basis matrix has rank {(sv > sv[0] * _PINV_RCOND).sum()} < K={K}")
        pinv = self.pinv_factor
        if pinv is None:
            pinv = np.linalg.pinv(phi, rcond=_PINV_RCOND)
        pinv = np.asarray(pinv, dtype=float)
        if pinv.shape != (T, K):
            raise DimensionMismatch(f"pinv_factor must be {T}x{K}, got {pinv.shape}")
        gram = phi @ pinv
        if np.max(np.abs(gram - np.eye(K))) > 1e-10:
            raise RankDeficient("phi @ pinv_factor deviates from identity beyond 1e-10")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "pinv_factor", pinv)

    @property
    def K(self) -> int:
        return self.phi.shape[0]

    @property
    def T(self) -> int:
        return self.phi.shape[1]


def _periodic_filter_matrix(taps: np.ndarray, m: int) -> np.ndarray:
    """Decimated periodic convolution matrix (m/2 x m) for one filter."""
    out = np.zeros((m // 2, m))
    for i in range(m // 2):
        for q, tap in enumerate(taps):
            out[i, (2 * i + q) % m] += tap
    return out


def _dwt_matrix(T: int, levels: int) -> np.ndarray:
    """Orthonormal periodic db2 analysis matrix, rows ordered coarse to fine."""
    approx = np.eye(T)
    details = []
    m = T
    for _ in range(levels):
        details.append(_periodic_filter_matrix(_DB2_HI, m) @ approx)
        approx = _periodic_filter_matrix(_DB2_LO, m) @ approx
        m //= 2
    return np.vstack([approx] + details[::-1])


def _fourier_matrix(T: int) -> np.ndarray:
    """Orthonormal real Fourier basis on grid indices 0..T-1."""
    idx = np.arange(T)
    rows = [np.full(T, 1.0 / np.sqrt(T))]
    for f in range(1, (T - 1) // 2 + 1):
        ang = 2.0 * np.pi * f * idx / T
        rows.append(np.sqrt(2.0 / T) * np.cos(ang))
        rows.append(np.sqrt(2.0 / T) * np.sin(ang))
    if T % 2 == 0:
        rows.append(np.where(idx % 2 == 0, 1.0, -1.0) / np.sqrt(T))
    return np.vstack(rows)


def build_basis(spec: BasisSpec, T: int, matrix: np.ndarray | None = None) -> BasisMatrix:
    """Construct the full (untruncated) basis matrix for a grid of length T.

    For kind ``external-matrix`` the K x T matrix must be supplied; it is
    rank-checked. Wavelet construction requires T to be a multiple of
    2**levels (no silent padding).
    """
    if spec.kind == "identity":
        eye = np.eye(T)
        return BasisMatrix(eye, eye.copy())
    if spec.kind == "wavelet-db2":
        if T % (1 << spec.levels) != 0:
            raise IncompatibleGrid(
                f"wavelet-db2 with levels={spec.levels} needs T divisible by {1 << spec.levels}, got T={T}"
            )
        return BasisMatrix(_dwt_matrix(T, spec.levels))
    if spec.kind == "fourier":
        return BasisMatrix(_fourier_matrix(T))
    if matrix is None:
        raise ConfigError("external-matrix basis requires the matrix argument")
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != T:
        raise DimensionMismatch(f"external matrix must be K x {T}, got {matrix.shape}")
    return BasisMatrix(matrix)


def to_basis_space(data: FunctionalDataset, basis: BasisMatrix) -> np.ndarray:
    """Project curves into the dual basis space: an (n, p, K) tensor."""
    if data.T != basis.T:
        raise DimensionMismatch(f"data has T={data.T} but basis expects T={basis.T}")
    return data.values @ basis.pinv_factor


def reconstruct(coeffs: np.ndarray, basis: BasisMatrix, grid: np.ndarray | None = None) -> FunctionalDataset:
    """Map an (n, p, K) coefficient tensor back to curves on the grid."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 3 or coeffs.shape[2] != basis.K:
        raise DimensionMismatch(f"coeffs must be (n,p,{basis.K}), got {coeffs.shape}")
    return FunctionalDataset(coeffs @ basis.phi, grid=grid)


@dataclass(frozen=True)
class LosslessReport:
    """Per-curve relative reconstruction errors against a lossless bound."""

    rel_errors: np.ndarray  # (n, p)
    max_error: float
    flagged: tuple  # (subject, variable) 0-based pairs exceeding epsilon
    epsilon: float


def check_lossless(data: FunctionalDataset, basis: BasisMatrix, epsilon: float = 1e-8) -> LosslessReport:
    """Report ||y - y* phi||_2 / ||y||_2 per curve and flag those above epsilon."""
    recon = to_basis_space(data, basis) @ basis.phi
    resid = np.linalg.norm(data.values - recon, axis=2)
    norms = np.linalg.norm(data.values, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(norms > 0, resid / norms, np.where(resid > 0, np.inf, 0.0))
    flagged = tuple(zip(*np.nonzero(rel > epsilon)))
    return LosslessReport(rel, float(rel.max()), flagged, epsilon)


def fit_basis(spec: BasisSpec, data: FunctionalDataset, matrix: np.ndarray | None = None) -> BasisMatrix:
    """Build the basis and, when energy_keep < 1, truncate it against the data.

    Coefficients are ranked by their total squared contribution across all
    curves (coefficient energy times squared row norm, exact for orthogonal
    rows); the smallest set of rows reaching the energy_keep fraction is
    retained. Emits LossyRepresentation when the truncated representation
    leaves some curve above spec.epsilon relative error.
    """
    full = build_basis(spec, data.T, matrix=matrix)
    if spec.energy_keep >= 1.0:
        return full
    coeffs = to_basis_space(data, full)
    row_sq = np.sum(full.phi**2, axis=1)
    energy = np.sum(coeffs**2, axis=(0, 1)) * row_sq
    total = energy.sum()
    order = np.argsort(energy)[::-1]
    cum = np.cumsum(energy[order])
    n_keep = int(np.searchsorted(cum, spec.energy_keep * total) + 1)
    n_keep = min(max(n_keep, 1), full.K)
    kept = np.sort(order[:n_keep])
    dropped = float(1.0 - cum[n_keep - 1] / total) if total > 0 else 0.0
    truncated = BasisMatrix(full.phi[kept], dropped_energy=dropped)
    report = check_lossless(data, truncated, epsilon=spec.epsilon)
    if report.flagged:
        warnings.warn(
            f"truncated basis (K={truncated.K} of {full.K}) leaves {len(report.flagged)} curve(s) "
            f"above epsilon={spec.epsilon} (max relative error {report.max_error:.3g})",
            LossyRepresentation,
        )
    return truncated


def read_basis_csv(path) -> np.ndarray:
    """Read an external basis matrix: K rows x T columns, comma-separated, no header."""
    matrix = np.loadtxt(path, delimiter=",", ndmin=2)
    return matrix
