"""
Mean and spread of a Gaussian wave packet coupled to the oscillator bath.

For correlated initial conditions (bath centred on the packet's mean
position) the centre moves classically and the variance is

    sigma(tau)^2 = sigma0^2 + (hbar Delta / (2 M sigma0))^2 + eps(tau) / M^2

with ``eps = int int Delta alpha Delta``.  Uncorrelated (factorized) initial
conditions add a deterministic force -K(t - t0) x0; for white noise this is a
kick -M gamma x0 that makes the covered distance depend on the frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bath import InitMode
from .forcing import ForceSpec
from .gle import (ClassicalInit, GreenTable, causal_convolution, quadratic_functional,
                  uncorrelated_mean)
from .series import MomentSeries
from .spectral import KernelKind, KernelTable

__all__ = [
    "WavePacket",
    "QuantumScenario",
    "epsilon",
    "epsilon_series",
    "eta",
    "mean_position",
    "mean_position_series",
    "mean_square_displacement",
    "msd_series",
    "spurious_kick",
    "white_noise_mean",
    "white_noise_variance",
    "white_epsilon",
]


@dataclass(frozen=True)
class WavePacket:
    x0: float = 0.0
    v0: float = 0.0
    sigma0: float = 1.0
    hbar: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not (self.hbar > 0 and self.M > 0):
            raise ValueError("hbar and M must be positive")

    @property
    def momentum_spread(self) -> float:
        return self.hbar / (2.0 * self.sigma0)


@dataclass(frozen=True)
class QuantumScenario:
    """Everything needed for the wave-packet moments.

    ``kernel`` (the memory kernel) is only needed for the uncorrelated mean
    with a non-white kernel; ``gamma`` selects the white-noise closed forms.
    """

    packet: WavePacket
    green: GreenTable
    alpha: KernelTable
    f: Optional[ForceSpec] = None
    init_mode: InitMode = InitMode.CORRELATED
    beta: float = 1.0
    gamma: Optional[float] = None
    kernel: Optional[KernelTable] = None

    def __post_init__(self):
        object.__setattr__(self, "init_mode", InitMode(self.init_mode))
        if self.alpha.kind is not KernelKind.QUANTUM:
            raise ValueError("alpha must be a quantum kernel")
        if self.alpha.beta is not None and not math.isclose(self.alpha.beta, self.beta):
            raise ValueError(f"alpha built at beta={self.alpha.beta}, scenario has {self.beta}")
        if self.alpha.hbar is not None and not math.isclose(self.alpha.hbar, self.packet.hbar):
            raise ValueError(
                f"alpha built at hbar={self.alpha.hbar}, packet has {self.packet.hbar}"
            )

    @property
    def tau(self):
        return self.green.tau


def _grid_index(h, n, tau):
    tau = np.asarray(tau, dtype=float)
    idx = np.rint(tau / h).astype(int)
    if np.any(np.abs(idx * h - tau) > 1e-9 * max(h, 1.0)) or np.any(idx < 0) or np.any(idx >= n):
        raise ValueError("tau must lie on the Green-function grid")
    return idx


def epsilon_series(green: GreenTable, alpha: KernelTable) -> np.ndarray:
    """eps(tau) = int_0^tau int_0^tau Delta(s) alpha(|s-u|) Delta(u) ds du on the whole grid."""
    if not math.isclose(green.grid_step, alpha.grid_step, rel_tol=1e-12):
        raise ValueError(
            f"grid mismatch: green h = {green.grid_step}, alpha h = {alpha.grid_step}"
        )
    return quadratic_functional(green.Delta, alpha)


def epsilon(green: GreenTable, alpha: KernelTable, tau):
    eps = epsilon_series(green, alpha)
    return eps[_grid_index(green.grid_step, len(green), tau)]


def eta(green: GreenTable, f: Optional[ForceSpec], t0: float = 0.0) -> np.ndarray:
    """eta[f](tau) = int_{t0}^{t0+tau} Delta(t0 + tau - s) f(s) ds on the whole grid."""
    if f is None or f.is_zero:
        return np.zeros(len(green))
    return causal_convolution(green.Delta, f(t0 + green.tau), green.grid_step)


def white_noise_mean(x0, v0, gamma, tau, mode=InitMode.CORRELATED):
    """Closed-form mean for white noise: x0 + v0 D(tau) (correlated) or x0 e^{-g tau} + v0 D (uncorrelated)."""
    tau = np.asarray(tau, dtype=float)
    if gamma == 0:
        return x0 + v0 * tau
    decay = np.exp(-gamma * tau)
    drift = v0 / gamma * (1.0 - decay)
    if InitMode(mode) is InitMode.CORRELATED:
        return x0 + drift
    return x0 * decay + drift


def white_epsilon(M, beta, gamma, tau):
    """eps(tau) for a high-temperature white-noise alpha = (2 M gamma / beta) delta."""
    g = gamma * np.asarray(tau, dtype=float)
    return 2.0 * M / (beta * gamma**2) * (g - 1.5 + 2.0 * np.exp(-g) - 0.5 * np.exp(-2.0 * g))


def white_noise_variance(packet: WavePacket, beta, gamma, tau, mode=InitMode.CORRELATED):
    """Closed-form wave-packet variance for white noise at high temperature."""
    tau = np.asarray(tau, dtype=float)
    M, s0 = packet.M, packet.sigma0
    g = gamma * tau
    spread = (packet.hbar * (1.0 - np.exp(-g)) / (2.0 * M * s0 * gamma)) ** 2
    thermal = 2.0 / (M * beta * gamma**2) * (g - 1.5 + 2.0 * np.exp(-g) - 0.5 * np.exp(-2.0 * g))
    initial = s0**2 if InitMode(mode) is InitMode.CORRELATED else s0**2 * np.exp(-2.0 * g)
    return initial + spread + thermal


def _is_white(scn: QuantumScenario) -> bool:
    k = scn.kernel
    white_kernel = k is None or (k.impulse_weight > 0 and not np.any(k.values))
    return scn.gamma is not None and white_kernel


def mean_position_series(scn: QuantumScenario, t0: float = 0.0) -> MomentSeries:
    """<X>(tau) on the whole grid."""
    p = scn.packet
    tau = scn.tau
    if scn.init_mode is InitMode.CORRELATED:
        values = p.x0 + p.v0 * scn.green.Delta + eta(scn.green, scn.f, t0) / p.M
    elif _is_white(scn):
        values = white_noise_mean(p.x0, p.v0, scn.gamma, tau, InitMode.UNCORRELATED)
        values = values + eta(scn.green, scn.f, t0) / p.M
    else:
        if scn.kernel is None:
            raise ValueError("uncorrelated mean with a colored kernel needs scn.kernel")
        values = _uncorrelated_mean(scn, t0)
    return MomentSeries(t0 + tau, values, "mean", meta={"mode": scn.init_mode.value})


def _uncorrelated_mean(scn, t0):
    p = scn.packet
    return uncorrelated_mean(scn.green, scn.kernel, ClassicalInit(p.x0, p.v0), scn.f, p.M, t0).values


def mean_position(scn: QuantumScenario, tau, t0: float = 0.0):
    series = mean_position_series(scn, t0)
    return series.values[_grid_index(scn.green.grid_step, len(scn.green), tau)]


def msd_series(scn: QuantumScenario) -> MomentSeries:
    """Wave-packet variance sigma(tau)^2 on the whole grid."""
    p = scn.packet
    if scn.init_mode is InitMode.CORRELATED:
        spread = (p.hbar * scn.green.Delta / (2.0 * p.M * p.sigma0)) ** 2
        values = p.sigma0**2 + spread + epsilon_series(scn.green, scn.alpha) / p.M**2
    elif _is_white(scn):
        values = white_noise_variance(p, scn.beta, scn.gamma, scn.tau, InitMode.UNCORRELATED)
    else:
        raise ValueError("uncorrelated variance is only available for white noise")
    return MomentSeries(scn.tau, values, "msd", meta={"mode": scn.init_mode.value})


def mean_square_displacement(scn: QuantumScenario, tau):
    series = msd_series(scn)
    return series.values[_grid_index(scn.green.grid_step, len(scn.green), tau)]


def spurious_kick(M: float, gamma: float, x0: float, v0: float):
    """Momentum kick of the white-noise spurious force and the resulting initial velocity.

    Returns ``(dp, v0_eff)`` with ``dp = -M gamma x0`` and ``v0_eff = v0 + dp / M``.
    """
    dp = -M * gamma * x0
    return dp, v0 + dp / M
