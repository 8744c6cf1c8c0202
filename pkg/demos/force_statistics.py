"""
Thermal force statistics of a discretized bath
===============================================

Sample many thermal microstates of a 2000-oscillator bath, synthesize the
random force R(t) and compare beta <R(t) R(t + s)> with the memory kernel of
the same discrete bath.
"""

import numpy as np

from oscbath import SpectralModel, discretize_bath
from oscbath.bath import discrete_kernel, force_samples

# %%
model = SpectralModel.white(gamma=1.0, omega_cut=100.0)
omegas, weights = discretize_bath(model, 2000)
lags = np.linspace(0.0, 3 * np.pi / 100.0, 7)
times = np.concatenate([[0.0], 2.0 + lags])
R = force_samples(omegas, weights, 1.0, 1.0, times, size=4000, master_seed=7, threads=4)

# %%
# Stationarity: the covariance between t = 2 and t = 2 + s depends on s only.
Rc = R - R.mean(axis=0)
K = discrete_kernel(omegas, weights, 1.0, lags)
for j, s in enumerate(lags):
    cov = Rc[:, 1] @ Rc[:, 1 + j] / (len(R) - 1)
    print(f"s={s:.4f}  beta<RR>={cov:9.3f}  K(s)={K[j]:9.3f}  diff/K(0)={(cov - K[j]) / K[0]:+.3f}")
se = R.std(axis=0, ddof=1) / np.sqrt(len(R))
print("max |<R>| / stderr:", np.max(np.abs(R.mean(axis=0)) / se))
