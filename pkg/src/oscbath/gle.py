"""
Generalized Langevin equation for a forced particle, solved through its
Green function.

With ``M I'(tau) + int_0^tau I(tau - s) K(s) ds = 0`` and ``I(0) = 1``, and
``Delta(tau) = int_0^tau I``, the particle coordinate is

    x(t) = x0 + v0 Delta(t) + (1/M) int_0^t Delta(t - s) [f(s) + R(s)] ds

so every moment reduces to convolutions against Delta.  All grids start at
the initial time: tau = t - t0 = 0, h, 2h, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .bath import BathRealization, InitMode, member_seed, random_force, sample_thermal
from .forcing import ForceSpec
from .series import MomentSeries
from .spectral import KernelKind, KernelTable

__all__ = [
    "GreenTable",
    "ClassicalInit",
    "GreenSolverError",
    "default_grid_step",
    "solve_green",
    "causal_convolution",
    "quadratic_functional",
    "classical_mean",
    "classical_msd",
    "uncorrelated_mean",
    "exponential_kernel_green",
    "classical_trajectory",
    "response_basis",
    "classical_ensemble",
]

# |I| above this means the kernel is not dissipative or h is too coarse
INSTABILITY_BOUND = 1e3


class GreenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class GreenTable:
    """Green function I(tau) and its running integral Delta(tau) on a uniform grid."""

    grid_step: float
    I: np.ndarray
    Delta: np.ndarray

    def __post_init__(self):
        for name in ("I", "Delta"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def tau(self) -> np.ndarray:
        return self.grid_step * np.arange(len(self.I))

    def __len__(self):
        return len(self.I)


@dataclass(frozen=True)
class ClassicalInit:
    x0: float = 0.0
    v0: float = 0.0
    sigma0: float = 0.0

    def __post_init__(self):
        if not self.sigma0 >= 0:
            raise ValueError(f"sigma0 must be >= 0, got {self.sigma0}")


def default_grid_step(gamma: float, tau_max: float) -> float:
    """min(tau_rel / 200, tau_max / 2000) with tau_rel = 1/gamma."""
    if gamma > 0:
        return min(1.0 / gamma / 200.0, tau_max / 2000.0)
    return tau_max / 2000.0


def _n_points(h, tau_max):
    return int(math.floor(tau_max / h + 1e-9)) + 1


def solve_green(kernel: KernelTable, M: float, h: Optional[float] = None,
                tau_max: Optional[float] = None) -> GreenTable:
    """Solve ``M I' + int_0^tau I(tau - s) K(s) ds = 0`` with ``I(0) = 1``.

    Implicit trapezoid in time combined with product-trapezoid quadrature of
    the convolution, O(h^2).  The impulse part ``c delta(s)`` of K contributes
    exactly ``(c/2) I(tau)``.

    Raises
    ------
    GreenSolverError
        If ``|I|`` exceeds ``INSTABILITY_BOUND``.
    """
    if kernel.kind is not KernelKind.MEMORY:
        raise ValueError("solve_green needs a memory kernel")
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    if h is None:
        h = kernel.grid_step
    if not math.isclose(h, kernel.grid_step, rel_tol=1e-12):
        raise ValueError(f"h = {h} differs from the kernel grid step {kernel.grid_step}")
    h = kernel.grid_step
    n = len(kernel) if tau_max is None else _n_points(h, tau_max)
    if n > len(kernel):
        raise ValueError(f"kernel table too short: {len(kernel)} points for {n} requested")

    K = np.asarray(kernel.values[:n])
    half_impulse = 0.5 * kernel.impulse_weight
    a = 0.5 * h / M
    denom = 1.0 + a * (half_impulse + 0.5 * h * K[0])
    I = np.empty(n)
    I[0] = 1.0
    conv = 0.0  # int_0^tau_n I(tau_n - s) K_smooth(s) ds at the current node
    for j in range(n - 1):
        # C_{j+1} = h [K_0 I_{j+1} / 2 + sum_{i=1}^{j} K_i I_{j+1-i} + K_{j+1} I_0 / 2]
        tail = h * (np.dot(K[1:j + 1], I[j:0:-1]) + 0.5 * K[j + 1] * I[0])
        rhs = I[j] - a * (half_impulse * I[j] + conv) - a * tail
        I[j + 1] = rhs / denom
        conv = tail + 0.5 * h * K[0] * I[j + 1]
        if abs(I[j + 1]) > INSTABILITY_BOUND or not math.isfinite(I[j + 1]):
            raise GreenSolverError(
                f"|I| exceeded {INSTABILITY_BOUND:g} at tau = {(j + 1) * h:.6g}; "
                "kernel not dissipative or grid step too large"
            )
    Delta = cumulative_trapezoid(I, dx=h, initial=0.0)
    return GreenTable(h, I, Delta)


def exponential_kernel_green(M: float, amplitude: float, tau_c: float, tau, substeps: int = 8):
    """Green function for ``K = amplitude * exp(-tau / tau_c)`` by Markovian embedding.

    With ``z = int_0^tau K(tau - s) I(s) ds`` the pair (I, z) obeys the ODE
    ``M I' = -z``, ``z' = amplitude I - z / tau_c``, integrated with classical
    RK4 at ``substeps`` steps per grid interval.  ``tau`` must be uniform and
    start at 0.
    """
    tau = np.asarray(tau, dtype=float)
    if len(tau) < 2:
        return np.ones_like(tau)
    dt = (tau[1] - tau[0]) / substeps
    A = np.array([[0.0, -1.0 / M], [amplitude, -1.0 / tau_c]])
    y = np.array([1.0, 0.0])
    out = np.empty(len(tau))
    out[0] = 1.0
    for n in range(1, len(tau)):
        for _ in range(substeps):
            k1 = A @ y
            k2 = A @ (y + 0.5 * dt * k1)
            k3 = A @ (y + 0.5 * dt * k2)
            k4 = A @ (y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[n] = y[0]
    return out


def causal_convolution(Delta, values, h):
    """Trapezoid ``int_0^{tau_n} Delta(tau_n - s) g(s) ds`` on every grid node.

    ``Delta[0]`` must vanish (it does for every GreenTable).
    """
    Delta = np.asarray(Delta, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(Delta)
    full = np.convolve(Delta, values[:n])[:n]
    return h * (full - 0.5 * Delta * values[0] - 0.5 * Delta[0] * values[:n])


def quadratic_functional(Delta, kernel: KernelTable):
    """``int_0^tau int_0^tau Delta(s) k(|s - u|) Delta(u) ds du`` on every grid node.

    Double trapezoid of the smooth part, accumulated node by node from one
    causal convolution; the impulse part contributes ``c * int_0^tau Delta^2``
    exactly.
    """
    Delta = np.asarray(Delta, dtype=float)
    n = len(Delta)
    if len(kernel) < n:
        raise ValueError(f"kernel has {len(kernel)} points, need {n}")
    if Delta[0] != 0.0:
        raise ValueError("Delta(0) must be zero")
    h = kernel.grid_step
    k = np.asarray(kernel.values[:n])
    # r_i = sum_{j<=i} k_{i-j} Delta_j ; S(i) = full-weight sum over the square [0,i]^2
    r = np.convolve(k, Delta)[:n]
    S = np.cumsum(2.0 * Delta * r - k[0] * Delta**2)
    smooth = h * h * (S - Delta * r + 0.25 * k[0] * Delta**2)
    smooth[0] = 0.0
    impulse = kernel.impulse_weight * cumulative_trapezoid(Delta**2, dx=h, initial=0.0)
    return smooth + impulse


def _force_on_grid(f: Optional[ForceSpec], t0, tau):
    if f is None or f.is_zero:
        return np.zeros_like(tau)
    return f(t0 + tau)


def classical_mean(green: GreenTable, init: ClassicalInit, f: Optional[ForceSpec], M: float,
                   t0: float = 0.0, scenario: str = "") -> MomentSeries:
    """Ensemble mean <x(t)> = x0 + v0 Delta + (1/M) int Delta(t - s) f(s) ds."""
    tau = green.tau
    mean = init.x0 + init.v0 * green.Delta
    fv = _force_on_grid(f, t0, tau)
    if np.any(fv):
        mean = mean + causal_convolution(green.Delta, fv, green.grid_step) / M
    return MomentSeries(t0 + tau, mean, "mean", scenario)


def uncorrelated_mean(green: GreenTable, kernel: KernelTable, init: ClassicalInit,
                      f: Optional[ForceSpec], M: float, t0: float = 0.0,
                      scenario: str = "") -> MomentSeries:
    """Mean position for a bath centred on the origin instead of on x0.

    The bath then exerts the extra deterministic force ``-K(t - t0) x0``;
    an impulse part ``c delta`` enters with half weight, i.e. as a velocity
    kick ``-c x0 / (2 M)``.
    """
    _check_grids(green, kernel)
    n = len(green)
    if len(kernel) < n:
        raise ValueError("memory kernel shorter than the Green-function grid")
    base = classical_mean(green, init, f, M, t0, scenario)
    kick = -0.5 * kernel.impulse_weight * init.x0 * green.Delta
    smooth = -init.x0 * causal_convolution(green.Delta, kernel.values[:n], green.grid_step)
    return MomentSeries(base.t, base.values + (kick + smooth) / M, "mean", scenario,
                        {"mode": "uncorrelated"})


def classical_msd(green: GreenTable, kernel: KernelTable, init: ClassicalInit, M: float,
                  beta: float, t0: float = 0.0, scenario: str = "") -> MomentSeries:
    """Mean-square displacement ``sigma0^2 + (1/(M^2 beta)) int int Delta K Delta``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    _check_grids(green, kernel)
    msd = init.sigma0**2 + quadratic_functional(green.Delta, kernel) / (M * M * beta)
    return MomentSeries(t0 + green.tau, msd, "msd", scenario)


def _check_grids(green, kernel):
    if not math.isclose(green.grid_step, kernel.grid_step, rel_tol=1e-12):
        raise ValueError(
            f"grid mismatch: green h = {green.grid_step}, kernel h = {kernel.grid_step}"
        )


def classical_trajectory(green: GreenTable, bath: BathRealization, init: ClassicalInit,
                         f: Optional[ForceSpec], M: float, t0: float = 0.0) -> MomentSeries:
    """One realization x(t) of the GLE, driven by the random force of ``bath``.

    The bath velocities are drawn with zero mean, so the force is taken with
    zero velocity reference (see ``random_force``); for an uncorrelated bath
    the deterministic part -K(t - t0) x0 is included.
    """
    tau = green.tau
    R = random_force(bath, init.x0, 0.0, 0.0, tau)
    if bath.init_mode is InitMode.UNCORRELATED:
        R = R[0] + R[1]
    drive = R + _force_on_grid(f, t0, tau)
    x = init.x0 + init.v0 * green.Delta + causal_convolution(green.Delta, drive, green.grid_step) / M
    return MomentSeries(t0 + tau, x, "trajectory")


def response_basis(green: GreenTable, omegas, tau_idx):
    """``int_0^tau Delta(tau - s) cos(w s) ds`` and the sine analogue at selected nodes.

    Returns two arrays of shape ``len(tau_idx) x len(omegas)``.  Realizations
    of a linear bath then map to trajectories by a matrix product.
    """
    h = green.grid_step
    omegas = np.asarray(omegas, dtype=float)
    tau = green.tau
    C = np.empty((len(tau_idx), len(omegas)))
    S = np.empty_like(C)
    for row, n in enumerate(tau_idx):
        if n == 0:
            C[row] = 0.0
            S[row] = 0.0
            continue
        wts = np.full(n + 1, h)
        wts[0] = wts[-1] = 0.5 * h
        d = green.Delta[n::-1] * wts  # Delta(tau_n - s_j) with trapezoid weights
        phase = np.multiply.outer(tau[: n + 1], omegas)
        C[row] = d @ np.cos(phase)
        S[row] = d @ np.sin(phase)
    return C, S


def classical_ensemble(green: GreenTable, omegas, weights, m, beta, init: ClassicalInit,
                       f: Optional[ForceSpec], M: float, size: int, master_seed: int,
                       tau_idx, mode=InitMode.CORRELATED):
    """Positions at ``tau_idx`` for ``size`` thermal realizations (``size x len(tau_idx)``).

    Equivalent to calling ``classical_trajectory`` per member, evaluated via
    ``response_basis`` so that large ensembles are cheap.
    """
    omegas = np.asarray(omegas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    tau_idx = np.asarray(tau_idx, dtype=int)
    k = m * weights * omegas**2
    C, S = response_basis(green, omegas, tau_idx)
    base = classical_mean(green, ClassicalInit(init.x0, init.v0), f, M).values[tau_idx]
    mode = InitMode(mode)
    out = np.empty((size, len(tau_idx)))
    for i in range(size):
        b = sample_thermal(omegas, weights, m, beta, init.x0, mode, member_seed(master_seed, i))
        a = k * (b.q - init.x0)
        bb = k * b.qdot / omegas
        out[i] = (C @ a + S @ bb) / M
    return base + out
