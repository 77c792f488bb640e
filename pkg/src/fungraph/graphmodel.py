"""Coefficient-space Gaussian model state and its deterministic algebra.

Each basis index k carries a precision matrix factored as
``Omega = D_s P D_s`` where D_s holds the partial standard deviations and
P is a unit-diagonal positive definite matrix of partial correlations.
The shrinkage priors act on the transformed off-diagonals
``c = -rho / (1 - rho^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch, DomainError, NotPositiveDefinite

# Cholesky pivots below this count as a positive-definiteness failure.
PD_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class Hyperparameters:
    """Gamma prior parameters for the partial standard deviations and the
    shrinkage rates. Defaults are the vague Gamma(0.1, 0.1) choices."""

    alpha_s: float = 0.1
    beta_s: float = 0.1
    alpha_lambda: float = 0.1
    beta_lambda: float = 0.1

    def __post_init__(self):
        for name in ("alpha_s", "beta_s", "alpha_lambda", "beta_lambda"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")


def chol_upper(mat: np.ndarray) -> np.ndarray | None:
    """Upper-triangular R with R'R = mat, or None if mat is not PD.

    Any pivot below PD_PIVOT_TOL counts as failure; this is the single
    positive-definiteness certificate used throughout.
    """
    try:
        lower = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diagonal(lower, axis1=-2, axis2=-1)) < PD_PIVOT_TOL:
        return None
    return np.swapaxes(lower, -2, -1)


class BasisGraphState:
    """Sampler state for one basis index: (s, rho, lambda) plus a cached
    Cholesky factor of the partial-correlation matrix."""

    def __init__(self, s: np.ndarray, rho: np.ndarray, lam: float):
        s = np.asarray(s, dtype=float).copy()
        rho = np.asarray(rho, dtype=float).copy()
        p = s.shape[0]
        if s.ndim != 1 or rho.shape != (p, p):
            raise DimensionMismatch(f"need s of shape (p,) and rho of shape (p,p), got {s.shape}, {rho.shape}")
        if np.any(s <= 0):
            raise ConfigError("partial standard deviations must be positive")
        if lam <= 0:
            raise ConfigError("lambda must be positive")
        if not np.allclose(rho, rho.T) or not np.allclose(np.diag(rho), 1.0):
            raise ConfigError("rho must be symmetric with unit diagonal")
        off = rho[~np.eye(p, dtype=bool)]
        if np.any(np.abs(off) >= 1.0):
            raise NotPositiveDefinite("off-diagonal partial correlations must lie in (-1, 1)")
        chol = chol_upper(rho)
        if chol is None:
            raise NotPositiveDefinite("partial correlation matrix is not positive definite")
        self.s = s
        self.rho = rho
        self.lam = float(lam)
        self.chol = chol

    @property
    def p(self) -> int:
        return self.s.shape[0]

    @classmethod
    def neutral(cls, p: int, lam: float) -> "BasisGraphState":
        """The deterministic initial state: s = 1, rho = 0."""
        return cls(np.ones(p), np.eye(p), lam)

    def refresh_chol(self) -> None:
        chol = chol_upper(self.rho)
        if chol is None:
            raise NotPositiveDefinite("state left the positive definite cone")
        self.chol = chol

    def set_rho(self, j: int, l: int, value: float) -> None:
        """Set one partial correlation (both symmetric entries) and refresh."""
        self.rho[j, l] = value
        self.rho[l, j] = value
        self.refresh_chol()

    def c_pairs(self, pairs) -> np.ndarray:
        """c values at the given (j, l) index pairs."""
        r = np.array([self.rho[j, l] for j, l in pairs])
        return rho_to_c(r)


def rho_to_c(rho):
    """Map partial correlation(s) to the shrinkage target c = -rho/(1-rho^2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0):
        raise DomainError("|rho| must be < 1")
    out = -rho / (1.0 - rho**2)
    return out if out.ndim else float(out)


def c_to_rho(c):
    """Inverse of rho_to_c; the removable singularity at c=0 maps to rho=0.

    Uses the cancellation-free form rho = -2c / (1 + sqrt(1 + 4c^2)).
    """
    c = np.asarray(c, dtype=float)
    out = -2.0 * c / (1.0 + np.sqrt(1.0 + 4.0 * c**2))
    return out if out.ndim else float(out)


def precision(state: BasisGraphState) -> np.ndarray:
    """The precision matrix D_s P D_s."""
    if chol_upper(state.rho) is None:
        raise NotPositiveDefinite("partial correlation matrix is not positive definite")
    return state.rho * np.outer(state.s, state.s)


def conditional_cov_pair(state: BasisGraphState, j: int, l: int) -> float:
    """Conditional covariance of coefficients j and l given the rest.

    Equals the off-diagonal of the inverted 2x2 precision submatrix:
    (s_j s_l)^{-1} * { -rho / (1 - rho^2) }.
    """
    if j == l:
        raise ConfigError("requires two distinct variable indices")
    r = state.rho[j, l]
    return float(rho_to_c(r) / (state.s[j] * state.s[l]))


def log_likelihood_k(state: BasisGraphState, ystar_k: np.ndarray) -> float:
    """Gaussian log-likelihood of an (n, p) coefficient slab, 2*pi term dropped.

    (n/2) log|Omega| - 0.5 tr(Omega @ Y'Y) with Y the n x p slab.
    """
    ystar_k = np.asarray(ystar_k, dtype=float)
    if ystar_k.ndim != 2 or ystar_k.shape[1] != state.p:
        raise DimensionMismatch(f"slab must be (n, {state.p}), got {ystar_k.shape}")
    n = ystar_k.shape[0]
    chol = chol_upper(state.rho)
    if chol is None:
        raise NotPositiveDefinite("partial correlation matrix is not positive definite")
    logdet = 2.0 * np.sum(np.log(state.s)) + 2.0 * np.sum(np.log(np.diag(chol)))
    omega = precision(state)
    quad = np.sum(omega * (ystar_k.T @ ystar_k))
    return 0.5 * n * logdet - 0.5 * quad
