"""Back-transformation of posterior draws to conditional cross-covariance
functions on the observation grid, credible-interval summaries, and the
position-indexed edge sets they select."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisMatrix
from .errors import ConfigError, DimensionMismatch
from .graphmodel import c_to_rho
from .sampler import PosteriorDraws


@dataclass(frozen=True)
class CrossCovFunction:
    """Posterior mean and equal-tailed interval of C_jl(t, t) per pair and
    grid index. Arrays have shape (T, n_pairs) in lexicographic pair order."""

    mean: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    pairs: tuple
    ci_level: float
    normalized: bool = False


@dataclass(frozen=True)
class EdgeFunction:
    """Selected edge set per grid index: an edge is present where the
    credible interval (open) excludes zero."""

    selected: np.ndarray  # (T, n_pairs) bool
    lb: np.ndarray
    ub: np.ndarray
    pairs: tuple


def cross_cov_draw(s_draw: np.ndarray, c_draw: np.ndarray, pairs, basis: BasisMatrix, t: int, tprime: int) -> np.ndarray:
    """C(t, t') for one posterior state: sum_k phi_k(t) phi_k(t')
    (s_kj s_kl)^{-1} c_kjl, returned as a full p x p symmetric matrix.

    The diagonal is not a defined quantity for this off-diagonal estimand
    and is fixed at 0.
    """
    s_draw = np.asarray(s_draw, dtype=float)
    c_draw = np.asarray(c_draw, dtype=float)
    K, p = s_draw.shape
    if c_draw.shape != (K, len(pairs)):
        raise DimensionMismatch(f"c draw must be (K, n_pairs) = ({K}, {len(pairs)}), got {c_draw.shape}")
    if basis.K != K:
        raise DimensionMismatch(f"basis has K={basis.K} but draw has K={K}")
    if not (0 <= t < basis.T and 0 <= tprime < basis.T):
        raise DimensionMismatch(f"t={t}, t'={tprime} outside grid of length {basis.T}")
    weight = basis.phi[:, t] * basis.phi[:, tprime]
    out = np.zeros((p, p))
    for i, (j, l) in enumerate(pairs):
        val = np.sum(weight * c_draw[:, i] / (s_draw[:, j] * s_draw[:, l]))
        out[j, l] = val
        out[l, j] = val
    return out


def _pair_weights(draws: PosteriorDraws) -> np.ndarray:
    """(K, M, n_pairs) array of c / (s_j s_l) per draw."""
    pj = np.array([j for j, _ in draws.pairs])
    pl = np.array([l for _, l in draws.pairs])
    return draws.c / (draws.s[:, :, pj] * draws.s[:, :, pl])


def _marginal_variance_diag(draws: PosteriorDraws) -> np.ndarray:
    """(K, M, p) diagonal of the implied coefficient covariance per draw."""
    K, M, p = draws.s.shape
    out = np.empty((K, M, p))
    iu = np.triu_indices(p, 1)
    for k in range(K):
        rho = np.zeros((M, p, p))
        vals = c_to_rho(draws.c[k])
        rho[:, iu[0], iu[1]] = vals
        rho[:, iu[1], iu[0]] = vals
        rho[:, np.arange(p), np.arange(p)] = 1.0
        diag = np.diagonal(np.linalg.inv(rho), axis1=1, axis2=2)
        out[k] = diag / draws.s[k] ** 2
    return out


def summarize(draws: PosteriorDraws, basis: BasisMatrix, ci_level: float = 0.95, normalize: bool = False) -> CrossCovFunction:
    """Posterior mean and equal-tailed credible interval of C_jl(t, t).

    With normalize=True the per-draw values are divided by
    sqrt(|C_jj(t,t)| |C_ll(t,t)|) computed from the marginal reconstruction
    of each variable's variance (an optional normalization, not part of the
    covariance estimand). Per-draw values are formed one grid slice at a
    time to keep memory at O(M p^2).
    """
    if draws.M < 2:
        raise ConfigError(f"need at least 2 retained draws, got {draws.M}")
    if not 0.0 < ci_level < 1.0:
        raise ConfigError(f"ci_level must be in (0,1), got {ci_level}")
    if basis.K != draws.K:
        raise DimensionMismatch(f"basis has K={basis.K} but draws have K={draws.K}")
    T = basis.T
    n_pairs = len(draws.pairs)
    w = _pair_weights(draws)
    phi_sq = basis.phi**2
    sig_diag = _marginal_variance_diag(draws) if normalize else None
    pj = np.array([j for j, _ in draws.pairs])
    pl = np.array([l for _, l in draws.pairs])

    alpha = (1.0 - ci_level) / 2.0
    mean = np.empty((T, n_pairs))
    lb = np.empty((T, n_pairs))
    ub = np.empty((T, n_pairs))
    for t in range(T):
        vals = np.einsum("k,kmp->mp", phi_sq[:, t], w)
        if normalize:
            var_t = np.einsum("k,kmj->mj", phi_sq[:, t], sig_diag)
            vals = vals / np.sqrt(np.abs(var_t[:, pj]) * np.abs(var_t[:, pl]))
        mean[t] = vals.mean(axis=0)
        lb[t] = np.quantile(vals, alpha, axis=0)
        ub[t] = np.quantile(vals, 1.0 - alpha, axis=0)
    return CrossCovFunction(mean, lb, ub, draws.pairs, ci_level, normalized=normalize)


def select_edges(summary: CrossCovFunction) -> EdgeFunction:
    """Edge present at t iff 0 lies outside the open interval (lb, ub)."""
    selected = ~((summary.lb < 0.0) & (summary.ub > 0.0))
    return EdgeFunction(selected, summary.lb.copy(), summary.ub.copy(), summary.pairs)


def lagged_profile(draws: PosteriorDraws, basis: BasisMatrix, j: int, l: int, t: int, tprimes) -> np.ndarray:
    """Posterior-mean C_jl(t, t') for each t' in tprimes."""
    if j == l:
        raise ConfigError("requires two distinct variable indices")
    a, b = min(j, l), max(j, l)
    try:
        idx = draws.pairs.index((a, b))
    except ValueError as exc:
        raise DimensionMismatch(f"pair ({j}, {l}) not covered by the draws") from exc
    tprimes = np.asarray(tprimes, dtype=int)
    if np.any(tprimes < 0) or np.any(tprimes >= basis.T) or not 0 <= t < basis.T:
        raise DimensionMismatch("lag positions outside the grid")
    w = _pair_weights(draws)[:, :, idx]  # (K, M)
    weight = basis.phi[:, t][:, None] * basis.phi[:, tprimes]  # (K, L)
    return np.einsum("kl,km->lm", weight, w).mean(axis=1)


def write_edges_csv(summary: CrossCovFunction, edges: EdgeFunction, path) -> None:
    """Plot-ready summary: header t,j,l,mean,lb,ub,selected (1-based indices)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,j,l,mean,lb,ub,selected\n")
        T = summary.mean.shape[0]
        for t in range(T):
            for i, (j, l) in enumerate(summary.pairs):
                fh.write(
                    f"{t + 1},{j + 1},{l + 1},{summary.mean[t, i]:.12g},"
                    f"{summary.lb[t, i]:.12g},{summary.ub[t, i]:.12g},{int(edges.selected[t, i])}\n"
                )


def write_lagprofile_csv(t: int, tprimes, j: int, l: int, means: np.ndarray, path) -> None:
    """Plot-ready lag profile: header t,tprime,j,l,mean (1-based indices)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,tprime,j,l,mean\n")
        for tp, m in zip(tprimes, means):
            fh.write(f"{t + 1},{tp + 1},{min(j, l) + 1},{max(j, l) + 1},{m:.12g}\n")
