"""Oscillator-bath model of classical and quantum dissipative systems."""

from .bath import (BathRealization, FullSystemState, InitMode, Lagrangian, discretize_bath,
                   integrate_ensemble, integrate_full_system, random_force, sample_thermal)
from .forcing import ForceSpec
from .gle import (ClassicalInit, GreenTable, classical_mean, classical_msd, classical_trajectory,
                  solve_green)
from .quantum import (QuantumScenario, WavePacket, epsilon, mean_position,
                      mean_square_displacement, spurious_kick)
from .series import MomentSeries, Trajectory
from .spectral import (KernelTable, SpectralModel, memory_kernel, power_spectrum,
                       quantum_kernel)

__version__ = "0.1.0"
