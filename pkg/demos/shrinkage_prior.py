"""The hypoexponential mixing family and the shrinkage it induces.

A sum of independent exponentials with distinct rates has a signed-mixture
density; mixing a zero-mean normal's variance over it yields the prior the
model induces on every conditional cross-covariance value. This script
tabulates the density, verifies the scale-mixture identity by simulation,
and traces the shrinkage function S out to its tail limit.
"""

import numpy as np

import fungraph as fg

rates = np.array([1.0, 2.0, 5.0])
d = fg.Hypoexponential(rates)
mean, var = fg.hypo_moments(d)
print(f"rates {rates}: mean={mean:.4f} (sum of 1/rate), var={var:.4f} (sum of 1/rate^2)")
print(f"signed mixture weights: {np.round(d.weights(), 4)}")

xs = np.linspace(0, 6, 13)
print("x, pdf(x):")
for x, f in zip(xs, fg.hypo_pdf(d, xs)):
    print(f"  {x:4.1f}  {f:.5f}")

# scale-mixture identity: a sum of Laplace variables with parameters
# lam_k equals a normal with variance mixed over Hypo(lam_k / 2)
rng = np.random.default_rng(1)
laplace_sum = sum(rng.laplace(0, 1 / np.sqrt(l), size=200_000) for l in rates)
mixture = fg.sample_normal_hypo(fg.Hypoexponential(rates / 2), rng, size=200_000)
qs = [0.05, 0.25, 0.5, 0.75, 0.95]
print("quantiles of Laplace sum vs normal-hypoexponential mixture:")
print(" ", np.round(np.quantile(laplace_sum, qs), 3))
print(" ", np.round(np.quantile(mixture, qs), 3))

# shrinkage: posterior means are pulled toward zero by S(ybar)/n, and the
# pull for large signals is capped by sqrt of the smallest rate
diag = fg.ShrinkageDiagnostic(n=5, rates=rates)
print("ybar, S(ybar), posterior mean:")
for ybar in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 40.0):
    s = fg.shrinkage_S(diag, ybar)
    print(f"  {ybar:5.1f}  {s:7.4f}  {fg.posterior_mean_mu(diag, ybar):8.4f}")
print(f"tail limit of |S| is sqrt(min rate) = {np.sqrt(rates.min()):.4f}")

# prior mass near zero of the mixing variance controls how hard weak
# signals are zeroed out
for eps in (0.01, 0.1, 0.5):
    print(f"P(variance < {eps}) = {fg.mass_near_zero(fg.Hypoexponential(rates / 2), eps):.4f}")
