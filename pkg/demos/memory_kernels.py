"""
Green functions for white and exponential memory
=================================================

The homogeneous solution I(tau) of the generalized Langevin equation and its
integral Delta(tau) decide every moment in this package.  For white noise
they are exponentials.  For an exponential memory kernel the equation can be
embedded in a two-variable linear system and integrated with RK4, which gives
an independent check on the Volterra solver.
"""

import numpy as np

from oscbath import SpectralModel, memory_kernel, solve_green
from oscbath.gle import exponential_kernel_green

# %%
# White noise: I = exp(-gamma tau); the error falls by 4 when h halves.
for h in (0.01, 0.005, 0.0025):
    g = solve_green(memory_kernel(SpectralModel.white(gamma=1.0), h, 20.0), 1.0)
    print(f"h={h:<7} sup|I - exp(-tau)| = {np.max(np.abs(g.I - np.exp(-g.tau))):.3e}")

# %%
# Exponential memory K = (M gamma / tau_L) exp(-tau / tau_L).
for tau_L in (0.2, 2.0):
    model = SpectralModel.lorentzian(tau_L, gamma=0.5)
    k = memory_kernel(model, 0.005, 40.0)
    g = solve_green(k, 1.0)
    ref = exponential_kernel_green(1.0, k.values[0], tau_L, g.tau)
    print(f"tau_L={tau_L}: K(0)={k.values[0]:.3f}  min I={g.I.min():+.3f}  "
          f"Delta(40)={g.Delta[-1]:.4f}  sup error vs RK4={np.max(np.abs(g.I - ref)):.2e}")
# Short memory relaxes monotonically; long memory overshoots (I < 0) before
# Delta settles at 1 / gamma.
