"""
Learning the fibre from intensity images
========================================

Random phase patterns are shown on the planes and only output intensities
are recorded. Gradient descent on the intensity residual recovers each
fibre block up to its own global phase.
"""

# %%
import numpy as np

from mmfnet.medium import sample_medium
from mmfnet.tmchar import block_similarity, fit_tm, fitted_medium, generate_probe_data

medium = sample_medium(N=16, M=32, seed=9)
probes, data = generate_probe_data(medium, n_probes=128, seed=1)
print("intensity records:", data.y.shape)

# %%
fit = fit_tm(probes, data, medium)
print("per-block similarity:\n", block_similarity(fit, medium))
print("loss after fit (per block):\n", fit.loss[..., -1])

# %%
# The block phases are unobservable: the raw overlap with the truth is not 1.
raw = abs(np.vdot(medium.U1, fit.U1)) / np.vdot(medium.U1, medium.U1).real
print("raw full-matrix overlap %.3f, after block alignment %.6f"
      % (raw, abs(np.vdot(medium.U1, fit.aligned(medium))) / 32))

# %%
# The fitted medium can now stand in for the truth when designing gates.
estimate = fitted_medium(fit, medium)
