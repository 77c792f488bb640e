"""The hypoexponential family and normal scale mixtures built on it.

A hypoexponential variable is a sum of independent exponentials with
distinct rates; its pdf is a signed mixture of the component exponential
pdfs. Mixing a zero-mean normal's variance over a hypoexponential gives
the shrinkage prior whose predictive-density diagnostics live here:
the predictive m(ybar), the shrinkage function S(ybar) = -d/dy log m,
and the posterior-mean identity E(mu|ybar) = ybar - S(ybar)/n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .errors import ConfigError, DegenerateRates

_MIN_RELATIVE_GAP = 1e-9


def _check_rates(rates: np.ndarray) -> None:
    if rates.ndim != 1 or rates.size == 0:
        raise DegenerateRates("need a non-empty 1-d rate vector")
    if np.any(rates <= 0) or not np.all(np.isfinite(rates)):
        raise DegenerateRates("rates must be strictly positive and finite")
    srt = np.sort(rates)
    gaps = np.diff(srt) / srt[1:]
    if srt.size > 1 and np.min(gaps) <= _MIN_RELATIVE_GAP:
        raise DegenerateRates(
            f"rates too close (min relative gap {np.min(gaps):.2e} <= {_MIN_RELATIVE_GAP}); "
            "perturb ties first, e.g. with perturb_tied_rates"
        )


def perturb_tied_rates(rates, rel_gap: float = _MIN_RELATIVE_GAP) -> np.ndarray:
    """Deterministically split tied rates: member r of a tied group is
    multiplied by (1 + 1e-7 * r). Order of the input is preserved."""
    rates = np.asarray(rates, dtype=float).copy()
    order = np.argsort(rates)
    srt = rates[order]
    group_start = 0
    for i in range(1, srt.size + 1):
        boundary = i == srt.size or (srt[i] - srt[i - 1]) / srt[i] > rel_gap
        if boundary:
            for r in range(i - group_start):
                srt[group_start + r] *= 1.0 + 1e-7 * r
            group_start = i
    rates[order] = srt
    return rates


@dataclass(frozen=True)
class Hypoexponential:
    """Sum of independent exponentials with distinct positive rates."""

    rates: np.ndarray

    def __post_init__(self):
        rates = np.atleast_1d(np.asarray(self.rates, dtype=float))
        _check_rates(rates)
        object.__setattr__(self, "rates", rates)

    @property
    def K(self) -> int:
        return self.rates.size

    def weights(self) -> np.ndarray:
        """Signed mixture coefficients P_k = prod_{h != k} (1 - r_k/r_h)^{-1}."""
        r = self.rates
        ratio = 1.0 - r[:, None] / r[None, :]
        np.fill_diagonal(ratio, 1.0)
        return 1.0 / np.prod(ratio, axis=1)


def hypo_pdf(d: Hypoexponential, x) -> np.ndarray | float:
    """Density sum_k P_k r_k exp(-r_k x) for x >= 0 (0 for x < 0)."""
    x = np.asarray(x, dtype=float)
    w = d.weights() * d.rates
    out = np.where(x < 0, 0.0, np.einsum("k,k...->...", w, np.exp(-np.multiply.outer(d.rates, np.maximum(x, 0.0)))))
    return out if out.ndim else float(out)


def hypo_cdf(d: Hypoexponential, x) -> np.ndarray | float:
    """Distribution function 1 - sum_k P_k exp(-r_k x)."""
    x = np.asarray(x, dtype=float)
    w = d.weights()
    out = np.where(x < 0, 0.0, 1.0 - np.einsum("k,k...->...", w, np.exp(-np.multiply.outer(d.rates, np.maximum(x, 0.0)))))
    return out if out.ndim else float(out)


def hypo_moments(d: Hypoexponential) -> tuple[float, float]:
    """(mean, variance) = (sum 1/r_k, sum 1/r_k^2)."""
    return float(np.sum(1.0 / d.rates)), float(np.sum(1.0 / d.rates**2))


def sample_hypo(d: Hypoexponential, rng: np.random.Generator, size=None):
    """Draw by summing independent exponentials, one per rate in order."""
    shape = () if size is None else (size,)
    total = np.zeros(shape)
    for rate in d.rates:
        total = total + rng.exponential(1.0 / rate, size=size)
    return float(total) if size is None else total


def sample_normal_hypo(d: Hypoexponential, rng: np.random.Generator, size=None):
    """Draw N(0, tau) with the variance tau ~ d (the mixing distribution)."""
    tau = sample_hypo(d, rng, size=size)
    return rng.normal(0.0, np.sqrt(tau), size=size)


def mass_near_zero(d: Hypoexponential, eps: float) -> float:
    """P(tau < eps) for the mixing variable tau ~ d."""
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    return float(hypo_cdf(d, eps))


@dataclass(frozen=True)
class ShrinkageDiagnostic:
    """Diagnostics for a normal-hypoexponential prior with parameters
    ``rates`` = (lambda_1..lambda_K): the prior is N(0, tau^2) with
    tau^2 ~ Hypo(lambda_1/2, ..., lambda_K/2), observed through
    ybar ~ N(mu, 1/n)."""

    n: int
    rates: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        rates = np.atleast_1d(np.asarray(self.rates, dtype=float))
        _check_rates(rates)
        object.__setattr__(self, "rates", rates)

    def weights(self) -> np.ndarray:
        # identical for rates and rates/2: the ratios are scale-free
        return Hypoexponential(self.rates).weights()


def _log_mk_parts(lam: np.ndarray, n: int, ybar: np.ndarray):
    """Log of the two normal-cdf terms of each component predictive density,
    plus the log prefactor. Shapes broadcast as (K, len(ybar))."""
    lam = lam[:, None]
    sqrt_lam = np.sqrt(lam)
    arg = np.sqrt(n) * ybar[None, :]
    shift = np.sqrt(lam / n)
    log_m1 = -sqrt_lam * ybar[None, :] + log_ndtr(arg - shift)
    log_m2 = sqrt_lam * ybar[None, :] + log_ndtr(-arg - shift)
    log_c = 0.5 * np.log(lam) - np.log(2.0) + lam / (2.0 * n)
    return log_m1, log_m2, log_c


def predictive_density_component(diag: ShrinkageDiagnostic, k: int, ybar) -> np.ndarray | float:
    """m_k(ybar): the predictive density under the k-th normal-exponential
    component (variance mixed over Exp(lambda_k/2)). Evaluated in log space
    so the large-|ybar| tail does not underflow intermediate terms."""
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    lam = diag.rates[k : k + 1]
    log_m1, log_m2, log_c = _log_mk_parts(lam, diag.n, ybar)
    out = np.exp(log_c + np.logaddexp(log_m1, log_m2))[0]
    return out if out.size > 1 else float(out[0])


def predictive_mixture(diag: ShrinkageDiagnostic, ybar) -> np.ndarray | float:
    """m(ybar) = sum_k P_k m_k(ybar)."""
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    log_m1, log_m2, log_c = _log_mk_parts(diag.rates, diag.n, ybar)
    w = diag.weights()[:, None]
    terms = np.concatenate([log_c + log_m1, log_c + log_m2], axis=0)
    signs = np.concatenate([np.broadcast_to(np.sign(w), log_m1.shape)] * 2, axis=0)
    log_abs = terms + np.log(np.abs(np.concatenate([np.broadcast_to(w, log_m1.shape)] * 2, axis=0)))
    val, sign = logsumexp(log_abs, axis=0, b=signs, return_sign=True)
    out = sign * np.exp(val)
    return out if out.size > 1 else float(out[0])


def shrinkage_S(diag: ShrinkageDiagnostic, ybar) -> np.ndarray | float:
    """S(ybar) = -d/dy log m(ybar), positive for positive ybar.

    The density-term parts of dm_k/dy cancel exactly, leaving
    dm_k/dy = c_k sqrt(lambda_k) (m_k2 - m_k1); both numerator and
    denominator are combined by signed log-sum-exp.
    """
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    log_m1, log_m2, log_c = _log_mk_parts(diag.rates, diag.n, ybar)
    w = diag.weights()[:, None]
    half_log_lam = 0.5 * np.log(diag.rates)[:, None]

    log_abs_w = np.log(np.abs(w)) + log_c
    sign_w = np.broadcast_to(np.sign(w), log_m1.shape)

    den_logs = np.concatenate([log_abs_w + log_m1, log_abs_w + log_m2], axis=0)
    den_signs = np.concatenate([sign_w, sign_w], axis=0)
    log_den, sign_den = logsumexp(den_logs, axis=0, b=den_signs, return_sign=True)

    num_logs = np.concatenate([log_abs_w + half_log_lam + log_m1, log_abs_w + half_log_lam + log_m2], axis=0)
    num_signs = np.concatenate([sign_w, -sign_w], axis=0)
    log_num, sign_num = logsumexp(num_logs, axis=0, b=num_signs, return_sign=True)

    out = sign_num * sign_den * np.exp(log_num - log_den)
    return out if out.size > 1 else float(out[0])


def posterior_mean_mu(diag: ShrinkageDiagnostic, ybar) -> np.ndarray | float:
    """E(mu | ybar) = ybar - S(ybar)/n."""
    ybar = np.atleast_1d(np.asarray(ybar, dtype=float))
    out = ybar - np.atleast_1d(shrinkage_S(diag, ybar)) / diag.n
    return out if out.size > 1 else float(out[0])


def induced_rates(t: int, basis, s_k: np.ndarray, lam: np.ndarray, j: int, l: int) -> np.ndarray:
    """Rates lambda_k s_kj s_kl / phi_k(t)^2 over bases supported at grid
    index t (bases with phi_k(t) = 0 are dropped)."""
    phi_t = basis.phi[:, t]
    s_k = np.asarray(s_k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mask = phi_t**2 > 0.0
    return lam[mask] * s_k[mask, j] * s_k[mask, l] / phi_t[mask] ** 2
