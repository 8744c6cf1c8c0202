"""
Classical limit of the quantum kernel
======================================

The quantum noise kernel alpha carries x coth(x) with x = beta hbar omega / 2.
When beta hbar Omega is small, beta alpha reduces to the classical memory
kernel K, and the quantum thermal spreading reduces to the classical MSD.
"""

import numpy as np

from oscbath import SpectralModel, memory_kernel, quantum_kernel

# %%
model = SpectralModel.white(gamma=1.0, omega_cut=20.0)
K = memory_kernel(model, 0.005, 5.0, "quadrature")
for x in (1.0, 1e-1, 1e-2, 1e-3):
    alpha = quantum_kernel(model, 1.0, x / 20.0, 0.005, 5.0, "quadrature")
    err = np.max(np.abs(alpha.values - K.values)) / K.values[0]
    print(f"beta hbar Omega={x:<6}  sup|beta alpha - K| / K(0) = {err:.2e}")
