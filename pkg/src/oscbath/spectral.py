"""
Bath spectral densities and the kernels built from them.

A bath is described by its frequency distribution G(omega): the continuum
limit of a sum over oscillators, so that ``sum_n phi(omega_n)`` becomes
``int G(omega) phi(omega) d omega``.  From G one gets

* the memory (friction) kernel   K(tau)     = int G m w^2 cos(w tau) dw
* the quantum noise kernel       alpha(tau) = int G (m hbar w^3 / 2) coth(beta hbar w / 2) cos(w tau) dw

White noise gives a delta kernel, which is carried as an explicit impulse
weight next to a smooth tabulated part rather than as a tall grid bin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

__all__ = [
    "SpectralKind",
    "KernelKind",
    "SpectralModel",
    "KernelTable",
    "quadrature_nodes",
    "memory_kernel",
    "quantum_kernel",
    "power_spectrum",
    "x_coth_x",
    "MAX_GRID_POINTS",
]

#: budget on the number of points of any tabulated kernel
MAX_GRID_POINTS = 20_000_000

# below this value of beta*hbar*omega, coth is replaced by its Laurent series
_COTH_SERIES_THRESHOLD = 1e-6

# white-noise quantum kernel collapses to (2 M gamma / beta) delta when beta*hbar*Omega <= this
HIGH_TEMPERATURE_THRESHOLD = 1e-2


class SpectralKind(str, enum.Enum):
    WHITE = "white"
    LORENTZIAN = "lorentzian"
    TABULATED = "tabulated"


class KernelKind(str, enum.Enum):
    MEMORY = "memory"
    QUANTUM = "quantum"


@dataclass(frozen=True)
class SpectralModel:
    """Frequency distribution G(omega) of an oscillator bath.

    Parameters
    ----------
    kind : SpectralKind
        ``white``, ``lorentzian`` or ``tabulated``.
    M : float
        Mass of the central particle.
    m : float
        Mass of a bath oscillator.
    gamma : float
        Friction coefficient (1/time).
    omega_cut : float
        High-frequency cutoff of the band used for quadratures and baths.
    tau_L : float, optional
        Correlation time of the Lorentzian distribution.
    omega_min : float, optional
        Low-frequency end of the band.  Defaults to ``1e-3 * omega_cut``
        (white) or ``1e-3 * min(omega_cut, 1/tau_L)`` (Lorentzian).
    table : sequence of (omega, G) pairs, optional
        Tabulated distribution.  A single pair is a discrete spectral line of
        weight G.  For tabulated models ``omega_min``/``omega_cut`` are the
        table ends.
    """

    kind: SpectralKind
    M: float = 1.0
    m: float = 1.0
    gamma: float = 1.0
    omega_cut: float = 100.0
    tau_L: Optional[float] = None
    omega_min: Optional[float] = None
    table: Optional[tuple] = None

    def __post_init__(self):
        kind = SpectralKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not (self.M > 0 and self.m > 0):
            raise ValueError(f"masses must be positive, got M={self.M}, m={self.m}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

        if kind is SpectralKind.TABULATED:
            if not self.table:
                raise ValueError("tabulated model needs a non-empty table")
            arr = np.asarray(self.table, dtype=float).reshape(-1, 2)
            w, g = arr[:, 0], arr[:, 1]
            if np.any(w <= 0) or np.any(np.diff(w) <= 0):
                raise ValueError("table frequencies must be positive and strictly increasing")
            if np.any(g < 0) or not np.all(np.isfinite(g)):
                raise ValueError("table values G(omega) must be finite and >= 0")
            object.__setattr__(self, "table", tuple(map(tuple, arr.tolist())))
            object.__setattr__(self, "omega_min", float(w[0]))
            object.__setattr__(self, "omega_cut", float(w[-1]))
            return

        if kind is SpectralKind.LORENTZIAN:
            if self.tau_L is None or not self.tau_L > 0:
                raise ValueError(f"Lorentzian model needs tau_L > 0, got {self.tau_L}")
        if self.omega_min is None:
            scale = self.omega_cut
            if kind is SpectralKind.LORENTZIAN:
                scale = min(self.omega_cut, 1.0 / self.tau_L)
            object.__setattr__(self, "omega_min", 1e-3 * scale)
        if not 0 < self.omega_min < self.omega_cut:
            raise ValueError(
                f"need 0 < omega_min < omega_cut, got {self.omega_min}, {self.omega_cut}"
            )

    # -- constructors -----------------------------------------------------

    @classmethod
    def white(cls, M=1.0, m=1.0, gamma=1.0, omega_cut=100.0, omega_min=None):
        return cls(SpectralKind.WHITE, M=M, m=m, gamma=gamma,
                   omega_cut=omega_cut, omega_min=omega_min)

    @classmethod
    def lorentzian(cls, tau_L, M=1.0, m=1.0, gamma=1.0, omega_cut=None, omega_min=None):
        if omega_cut is None:
            omega_cut = 1000.0 / tau_L
        return cls(SpectralKind.LORENTZIAN, M=M, m=m, gamma=gamma, tau_L=tau_L,
                   omega_cut=omega_cut, omega_min=omega_min)

    @classmethod
    def tabulated(cls, omegas, values, M=1.0, m=1.0, gamma=1.0):
        """``gamma`` is only bookkeeping here (e.g. default grid steps)."""
        pairs = tuple(zip(np.atleast_1d(omegas).tolist(), np.atleast_1d(values).tolist()))
        return cls(SpectralKind.TABULATED, M=M, m=m, gamma=gamma, table=pairs)

    # -- evaluation -------------------------------------------------------

    def density(self, omega):
        """G(omega).  For tabulated models, linear interpolation inside the table."""
        w = np.asarray(omega, dtype=float)
        if self.kind is SpectralKind.TABULATED:
            arr = np.asarray(self.table)
            if len(arr) == 1:
                return np.where(w == arr[0, 0], arr[0, 1], 0.0)
            return np.interp(w, arr[:, 0], arr[:, 1], left=0.0, right=0.0)
        g = 2.0 * self.M * self.gamma / (math.pi * self.m * w**2)
        if self.kind is SpectralKind.LORENTZIAN:
            g = g / (1.0 + (w * self.tau_L) ** 2)
        return g

    def coupling_density(self, omega):
        """m omega^2 G(omega), finite at omega -> 0 for the white and Lorentzian families."""
        w = np.asarray(omega, dtype=float)
        if self.kind is SpectralKind.TABULATED:
            return self.m * w**2 * self.density(w)
        c = np.full_like(w, 2.0 * self.M * self.gamma / math.pi)
        if self.kind is SpectralKind.LORENTZIAN:
            c = c / (1.0 + (w * self.tau_L) ** 2)
        return c


@dataclass(frozen=True)
class KernelTable:
    """Kernel = ``impulse_weight * delta(tau)`` + smooth part on tau = 0, h, 2h, ...

    The impulse sits at the lower end of every one-sided time integral, so a
    convolution over [0, t] picks up half of it.
    """

    impulse_weight: float
    grid_step: float
    values: np.ndarray
    kind: KernelKind = KernelKind.MEMORY
    beta: Optional[float] = None
    hbar: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not self.grid_step > 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if not (np.all(np.isfinite(vals)) and math.isfinite(self.impulse_weight)):
            raise ValueError("kernel values must be finite")

    @property
    def tau(self) -> np.ndarray:
        return self.grid_step * np.arange(len(self.values))

    @property
    def tau_max(self) -> float:
        return self.grid_step * (len(self.values) - 1)

    def __len__(self):
        return len(self.values)

    def scaled(self, factor: float) -> "KernelTable":
        return KernelTable(self.impulse_weight * factor, self.grid_step, self.values * factor,
                           self.kind, self.beta, self.hbar)

    def truncated(self, n: int) -> "KernelTable":
        if n > len(self.values):
            raise ValueError(f"kernel has {len(self.values)} points, {n} requested")
        return KernelTable(self.impulse_weight, self.grid_step, self.values[:n],
                           self.kind, self.beta, self.hbar)

    def to_csv(self, path) -> Path:
        path = Path(path)
        header = (f"# impulse_weight={float(self.impulse_weight)!r} kind={self.kind.value}"
                  f" grid_step={float(self.grid_step)!r}")
        if self.beta is not None:
            header += f" beta={float(self.beta)!r} hbar={float(self.hbar)!r}"
        with open(path, "w") as fh:
            fh.write(header + "\ntau,value\n")
            for t, v in zip(self.tau.tolist(), self.values.tolist()):
                fh.write(f"{t!r},{v!r}\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "KernelTable":
        with open(path) as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing kernel metadata header")
            meta = dict(tok.split("=", 1) for tok in header[1:].split())
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        tau, vals = data[:, 0], data[:, 1]
        if "grid_step" in meta:
            h = float(meta["grid_step"])
        else:
            h = tau[1] - tau[0] if len(tau) > 1 else 1.0
        beta = float(meta["beta"]) if "beta" in meta else None
        hbar = float(meta["hbar"]) if "hbar" in meta else None
        return cls(float(meta["impulse_weight"]), float(h), vals, KernelKind(meta["kind"]),
                   beta, hbar)


def _grid(grid_step, tau_max):
    if not grid_step > 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if not tau_max >= grid_step:
        raise ValueError(f"tau_max ({tau_max}) must be >= grid_step ({grid_step})")
    ratio = tau_max / grid_step
    if not math.isfinite(ratio) or ratio + 1 > MAX_GRID_POINTS:
        raise ValueError(f"grid of {ratio:.3g} steps exceeds the budget of {MAX_GRID_POINTS}")
    n = int(math.floor(ratio + 1e-9)) + 1
    return grid_step * np.arange(n)


def quadrature_nodes(model: SpectralModel, n: Optional[int] = None):
    """Uniform trapezoid nodes on [omega_min, omega_cut] and their measure weights.

    Returns ``(omegas, weights)`` with ``weights = G(omega) * d_omega`` (halved
    at both ends), so that ``sum(weights * phi(omegas))`` approximates
    ``int G phi d omega``.  Tabulated models with ``n`` None use the table
    nodes themselves; a one-line table returns the line with weight G.
    """
    if model.kind is SpectralKind.TABULATED:
        arr = np.asarray(model.table)
        if len(arr) == 1:
            return arr[:, 0].copy(), arr[:, 1].copy()
        if n is None or n == len(arr):
            w = arr[:, 0]
            return w.copy(), arr[:, 1] * _trapezoid_weights(w)
    if n is None:
        raise ValueError("number of nodes required for a continuous spectral model")
    if n < 1:
        raise ValueError(f"need at least one node, got {n}")
    if n == 1:
        w = np.array([model.omega_cut])
        return w, model.density(w) * (model.omega_cut - model.omega_min)
    w = np.linspace(model.omega_min, model.omega_cut, n)
    return w, model.density(w) * _trapezoid_weights(w)


def _trapezoid_weights(x):
    dx = np.diff(x)
    wts = np.zeros_like(x)
    wts[:-1] += 0.5 * dx
    wts[1:] += 0.5 * dx
    return wts


def _default_omega_points(model, tau_max):
    # >= 32 nodes per period of cos(omega tau_max); the floor keeps low-tau_max tables accurate
    span = model.omega_cut - model.omega_min
    return max(4096, int(math.ceil(32 * span * tau_max / (2 * math.pi))) + 1)


def _cosine_sum(omegas, amplitudes, tau, chunk=2048):
    """sum_k amplitudes[k] cos(omegas[k] tau_j), summed in ascending-omega order."""
    out = np.empty(len(tau))
    for start in range(0, len(tau), chunk):
        tt = tau[start:start + chunk]
        out[start:start + chunk] = np.cos(np.outer(tt, omegas)) @ amplitudes
    return out


def memory_kernel(model: SpectralModel, grid_step: float, tau_max: float,
                  method: str = "auto", n_omega: Optional[int] = None) -> KernelTable:
    """Tabulate the memory kernel K(tau) of a bath.

    Parameters
    ----------
    model : SpectralModel
    grid_step, tau_max : float
        Uniform tau grid 0, h, ..., tau_max.
    method : {"auto", "quadrature"}
        ``auto`` returns the closed forms for white noise (impulse 2 M gamma)
        and Lorentzian noise; ``quadrature`` integrates G over the finite band
        [omega_min, omega_cut] for every kind, which is what a discretized
        bath of that band actually produces.
    n_omega : int, optional
        Number of frequency nodes for the quadrature.

    Returns
    -------
    KernelTable
    """
    tau = _grid(grid_step, tau_max)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if model.gamma == 0 and model.kind is not SpectralKind.TABULATED:
        return KernelTable(0.0, grid_step, np.zeros_like(tau))

    if method == "auto" and model.kind is SpectralKind.WHITE:
        return KernelTable(2.0 * model.M * model.gamma, grid_step, np.zeros_like(tau))
    if method == "auto" and model.kind is SpectralKind.LORENTZIAN:
        amp = model.M * model.gamma / model.tau_L
        return KernelTable(0.0, grid_step, amp * np.exp(-tau / model.tau_L))

    if model.kind is SpectralKind.TABULATED and n_omega is None:
        omegas, wts = quadrature_nodes(model)
    else:
        omegas, wts = quadrature_nodes(model, n_omega or _default_omega_points(model, tau[-1]))
    vals = _cosine_sum(omegas, wts * model.m * omegas**2, tau)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite memory kernel; check the spectral table")
    return KernelTable(0.0, grid_step, vals)


def x_coth_x(x):
    """x coth(x), using 1 + x^2/3 where 2x < 1e-6 (coth ~ 1/x + x/3)."""
    x = np.asarray(x, dtype=float)
    small = 2.0 * np.abs(x) < _COTH_SERIES_THRESHOLD
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x**2 / 3.0, safe / np.tanh(safe))


def quantum_kernel(model: SpectralModel, beta: float, hbar: float, grid_step: float,
                   tau_max: float, method: str = "auto",
                   n_omega: Optional[int] = None) -> KernelTable:
    """Tabulate the quantum noise kernel alpha(tau).

    White noise in the high-temperature regime ``beta*hbar*omega_cut <=
    HIGH_TEMPERATURE_THRESHOLD`` returns the impulse form ``K / beta`` when
    ``method="auto"``; everything else is integrated on the band.
    ``method="high_temperature"`` returns ``K / beta`` (the auto memory kernel)
    for any model, regardless of ``beta * hbar``.
    """
    if not (beta > 0 and hbar > 0):
        raise ValueError(f"need beta > 0 and hbar > 0, got {beta}, {hbar}")
    tau = _grid(grid_step, tau_max)
    if method not in ("auto", "quadrature", "high_temperature"):
        raise ValueError(f"unknown method {method!r}")
    meta = dict(kind=KernelKind.QUANTUM, beta=beta, hbar=hbar)
    if method == "high_temperature":
        K = memory_kernel(model, grid_step, tau_max, "auto", n_omega)
        return KernelTable(K.impulse_weight / beta, grid_step, K.values / beta, **meta)
    if model.gamma == 0 and model.kind is not SpectralKind.TABULATED:
        return KernelTable(0.0, grid_step, np.zeros_like(tau), **meta)
    if (method == "auto" and model.kind is SpectralKind.WHITE
            and beta * hbar * model.omega_cut <= HIGH_TEMPERATURE_THRESHOLD):
        return KernelTable(2.0 * model.M * model.gamma / beta, grid_step,
                           np.zeros_like(tau), **meta)

    if model.kind is SpectralKind.TABULATED and n_omega is None:
        omegas, wts = quadrature_nodes(model)
    else:
        omegas, wts = quadrature_nodes(model, n_omega or _default_omega_points(model, tau[-1]))
    # (1/2) m hbar w^3 coth(beta hbar w / 2) = m w^2 * (1/beta) * x coth x,  x = beta hbar w / 2
    amp = wts * model.m * omegas**2 * x_coth_x(0.5 * beta * hbar * omegas) / beta
    vals = _cosine_sum(omegas, amp, tau)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite quantum kernel")
    return KernelTable(0.0, grid_step, vals, **meta)


def power_spectrum(kernel: KernelTable, beta: float, omega):
    """One-sided cosine transform of the force correlation <R(0) R(tau)> = K/beta.

    ``P(omega) = int_0^inf cos(omega tau) K(tau) d tau / beta``, with the impulse
    contributing half its weight.  For a kernel built from G this equals
    ``(pi / 2 beta) m omega^2 G(omega)``.  The table must cover the decay of K.
    """
    if kernel.kind is not KernelKind.MEMORY:
        raise ValueError("power_spectrum needs a memory kernel")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    w = np.asarray(omega, dtype=float)
    nyquist = math.pi / kernel.grid_step
    if np.any(w < 0) or np.any(w >= nyquist):
        raise ValueError(f"omega outside the resolvable band [0, {nyquist:.6g})")
    tau = kernel.tau
    integrand = np.cos(np.multiply.outer(w, tau)) * kernel.values
    smooth = trapezoid(integrand, dx=kernel.grid_step, axis=-1)
    return (0.5 * kernel.impulse_weight + smooth) / beta
