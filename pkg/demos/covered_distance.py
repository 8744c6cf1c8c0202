"""
Covered distance and initial conditions
========================================

A particle starts at x0 with velocity v0 in a white-noise bath.  With the
bath thermalized around the particle the mean comes to rest after v0 / gamma,
wherever it started.  With the bath thermalized around the origin the
particle also feels a kick -M gamma x0, so the distance depends on x0.
"""

import numpy as np

from oscbath import (InitMode, QuantumScenario, SpectralModel, WavePacket, memory_kernel,
                     quantum_kernel, solve_green, spurious_kick)
from oscbath.quantum import mean_position_series, msd_series

# %%
# One white-noise bath, one Green function, shared by all runs.
M, gamma, beta, h, t_max = 1.0, 1.0, 1.0, 0.005, 20.0
model = SpectralModel.white(M=M, gamma=gamma)
kernel = memory_kernel(model, h, t_max)
green = solve_green(kernel, M)
alpha = quantum_kernel(model, beta, 1.0, h, t_max, "high_temperature")

# %%
# Sweep the starting point.
for x0 in (0.0, 1.0, 2.0):
    packet = WavePacket(x0, 2.0, 1.0)
    row = []
    for mode in InitMode:
        scn = QuantumScenario(packet, green, alpha, None, mode, beta, gamma, kernel)
        row.append(mean_position_series(scn).values[-1] - x0)
    kick, v_eff = spurious_kick(M, gamma, x0, 2.0)
    print(f"x0={x0:.0f}  L correlated={row[0]:.6f}  L uncorrelated={row[1]:.6f}  "
          f"kick={kick:+.1f} -> v0 eff={v_eff:+.1f}")

# %%
# The packet width: thermal spreading on top of the free quantum spreading.
scn = QuantumScenario(WavePacket(1.0, 2.0, 1.0), green, alpha, beta=beta, gamma=gamma,
                      kernel=kernel)
var = msd_series(scn)
for tau in (0.0, 1.0, 5.0, 20.0):
    print(f"tau={tau:5.1f}  variance={var.at(tau):.6f}")
print("long-time slope:", np.polyfit(var.t[-2000:], var.values[-2000:], 1)[0],
      "expected", 2 / (M * beta * gamma))
