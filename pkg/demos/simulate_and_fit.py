"""End-to-end pipeline on a small synthetic panel: generate data with a
position-varying sparse graph, fit the basis-space model by MCMC, select
edges from credible intervals, and score the recovery.

Runs in about a minute (the acceptance-scale runs use n=50, p=10, T=128
with 6000 iterations; this demo is scaled down).
"""

import numpy as np

import fungraph as fg

scenario = fg.ScenarioConfig(
    autocorrelation="ar1", dynamic=1, n=30, p=6, T=64, seed=5,
    e1=((0, 1),), e2=((2, 3),), e3=((3, 4),),
)
data, truth = fg.generate(scenario)
print(f"generated n={scenario.n}, p={scenario.p}, T={scenario.T}; "
      f"true edges per position: {truth.present.sum(axis=1).min()}..{truth.present.sum(axis=1).max()}")

basis = fg.fit_basis(fg.BasisSpec(kind="wavelet-db2", levels=5), data)
coeffs = fg.to_basis_space(data, basis)
print(f"basis: K={basis.K} slabs of shape ({scenario.n}, {scenario.p})")

config = fg.SamplerConfig(iterations=2000, burn_in=500, thin=3, seed=5)
draws = fg.run_chain(coeffs, config)
print(f"retained {draws.M} draws per slab; "
      f"mean MH acceptance: rho {draws.accept_rho.mean():.2f}, s {draws.accept_s.mean():.2f}")

summary = fg.summarize(draws, basis, ci_level=0.95)
edges = fg.select_edges(summary)
imtpr, imfpr = fg.imtpr_imfpr(edges, truth)
points, auc = fg.roc_points(np.abs(summary.mean), truth)
print(f"IMTPR={imtpr:.3f}  IMFPR={imfpr:.3f}  AUC={auc:.3f}")

# where is the (2,3) edge detected? its generating level rises and falls
pair_idx = edges.pairs.index((2, 3))
detected = np.nonzero(edges.selected[:, pair_idx])[0] + 1
print(f"edge (3,4) [1-based] detected at positions {detected.min()}..{detected.max()} "
      f"(true level peaks mid-domain)")
