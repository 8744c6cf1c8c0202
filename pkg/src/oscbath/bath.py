"""
Microscopic oscillator bath: discretization, thermal sampling, the random
force it exerts and direct integration of particle + bath.

The continuum G(omega) is re-discretized on uniform trapezoid nodes.  Each
oscillator n carries an effective mass ``m_eff = m * w_n`` where ``w_n =
G(omega_n) d_omega``, so that ``sum_n m_eff omega_n^2 cos(omega_n tau)``
reproduces the band-limited memory kernel.  Discrete baths are
quasi-periodic and recur after ``2 pi / d_omega``; keep horizons well below.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .forcing import ForceSpec
from .series import Trajectory
from .spectral import SpectralModel, quadrature_nodes

__all__ = [
    "InitMode",
    "Lagrangian",
    "BathRealization",
    "FullSystemState",
    "discretize_bath",
    "recurrence_time",
    "member_seed",
    "sample_thermal",
    "sample_ensemble",
    "discrete_kernel",
    "random_force",
    "force_samples",
    "system_energy",
    "integrate_full_system",
    "integrate_ensemble",
    "StabilityError",
]

# members per work unit; fixed so that results do not depend on the worker count
ENSEMBLE_CHUNK = 64


class StabilityError(RuntimeError):
    """Raised when a time step violates the integrator stability guard or the state blows up."""


class InitMode(str, enum.Enum):
    """Where the bath oscillators are centred at t0.

    ``correlated``: around the particle's initial position x0 (thermal
    equilibrium of the coupled bath).  ``uncorrelated``: around the origin
    (factorized initial state).
    """

    CORRELATED = "correlated"
    UNCORRELATED = "uncorrelated"


class Lagrangian(str, enum.Enum):
    """``translated``: coupling 1/2 m w^2 (q - x)^2.  ``bilinear``: 1/2 m w^2 q^2 - k q x, k = m w^2."""

    TRANSLATED = "translated"
    BILINEAR = "bilinear"


@dataclass(frozen=True)
class BathRealization:
    omegas: np.ndarray
    weights: np.ndarray
    m: float
    q: np.ndarray
    qdot: np.ndarray
    init_mode: InitMode = InitMode.CORRELATED
    seed: Optional[int] = None

    def __post_init__(self):
        arrays = {}
        for name in ("omegas", "weights", "q", "qdot"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        object.__setattr__(self, "init_mode", InitMode(self.init_mode))
        n = len(arrays["omegas"])
        if n < 1 or any(len(a) != n for a in arrays.values()):
            raise ValueError("omegas, weights, q and qdot must have the same length N >= 1")
        if np.any(arrays["omegas"] <= 0) or np.any(arrays["weights"] < 0):
            raise ValueError("need omegas > 0 and weights >= 0")

    def __len__(self):
        return len(self.omegas)

    @property
    def masses(self) -> np.ndarray:
        return self.m * self.weights

    @property
    def couplings(self) -> np.ndarray:
        """Spring constants m_eff * omega^2."""
        return self.m * self.weights * self.omegas**2

    @property
    def active(self) -> np.ndarray:
        return self.weights > 0

    def shifted(self, c: float) -> "BathRealization":
        """Same realization with every oscillator coordinate displaced by c."""
        return replace(self, q=self.q + c)


@dataclass(frozen=True)
class FullSystemState:
    x: float
    xdot: float
    bath: Optional[BathRealization] = None
    t: float = 0.0
    lagrangian: Lagrangian = Lagrangian.TRANSLATED
    M: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "lagrangian", Lagrangian(self.lagrangian))
        if not (math.isfinite(self.x) and math.isfinite(self.xdot)):
            raise ValueError("non-finite particle state")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")


def discretize_bath(model: SpectralModel, N: int):
    """Frequencies and measure weights of an N-oscillator bath for ``model``.

    Nodes are uniform on [omega_min, omega_cut] with trapezoid end weights;
    ``sum(weights * m * omegas**2 * cos(omegas * tau))`` approximates K(tau).
    A one-line tabulated model returns that line unchanged.
    """
    if N < 1:
        raise ValueError(f"need N >= 1 oscillators, got {N}")
    omegas, weights = quadrature_nodes(model, N)
    if model.gamma == 0 and model.kind.value != "tabulated":
        weights = np.zeros_like(weights)
    return omegas, weights


def recurrence_time(omegas) -> float:
    """Quasi-period 2 pi / d_omega of a uniformly discretized bath."""
    omegas = np.asarray(omegas)
    if len(omegas) < 2:
        return math.inf
    return 2 * math.pi / float(np.min(np.diff(omegas)))


def member_seed(master_seed: int, index: int) -> int:
    """64-bit seed of ensemble member ``index``, independent of scheduling."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_thermal(omegas, weights, m, beta, x0, mode=InitMode.CORRELATED,
                   seed=None) -> BathRealization:
    """Draw oscillator positions and velocities from the canonical distribution.

    Positions are Gaussian around x0 (correlated) or 0 (uncorrelated) with
    variance ``1 / (beta m_eff omega^2)``; velocities have mean 0 and
    variance ``1 / (beta m_eff)``.  Zero-weight oscillators are inert: they sit
    at the centre with zero velocity.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    mode = InitMode(mode)
    omegas = np.asarray(omegas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, len(omegas)))

    centre = float(x0) if mode is InitMode.CORRELATED else 0.0
    active = weights > 0
    m_eff = np.where(active, m * weights, 1.0)
    q = np.where(active, centre + z[0] / np.sqrt(beta * m_eff * omegas**2), centre)
    qdot = np.where(active, z[1] / np.sqrt(beta * m_eff), 0.0)
    return BathRealization(omegas, weights, m, q, qdot, mode, seed)


def sample_ensemble(omegas, weights, m, beta, x0, mode, size, master_seed):
    """Positions and velocities (each ``size x N``) of an ensemble of realizations."""
    return _sample_range(np.asarray(omegas, dtype=float), np.asarray(weights, dtype=float),
                         m, beta, x0, mode, 0, size, master_seed)


def discrete_kernel(omegas, weights, m, tau):
    """Memory kernel of a discrete bath, sum_n m_eff omega_n^2 cos(omega_n tau)."""
    omegas = np.asarray(omegas, dtype=float)
    k = m * np.asarray(weights, dtype=float) * omegas**2
    tau = np.asarray(tau, dtype=float)
    return np.cos(np.multiply.outer(tau, omegas)) @ k


def random_force(bath: BathRealization, x0: float, v0: float, t0: float, t):
    """Random force exerted by the bath on the particle.

    ``R(t) = sum m_eff w^2 [(q0 - x0) cos(w (t-t0)) + (qdot0 - v0)/w sin(w (t-t0))]``.

    For an uncorrelated realization the pair ``(R', dF)`` is returned, with
    ``R'`` using q0 in place of (q0 - x0) and the deterministic part
    ``dF(t) = -K(t - t0) x0``; ``R' + dF`` equals the expression above.

    Bath velocities are drawn with zero mean, and eliminating such a bath
    exactly gives the force with ``v0 = 0``; a nonzero ``v0`` adds the
    deterministic drift ``-v0 * int_0^{t-t0} K``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < t0):
        raise ValueError("random force requested before t0")
    k = bath.couplings
    phase = np.multiply.outer(t - t0, bath.omegas)
    c, s = np.cos(phase), np.sin(phase)
    vel = k * (bath.qdot - v0) / bath.omegas
    if bath.init_mode is InitMode.CORRELATED:
        return np.sum(c * (k * (bath.q - x0)) + s * vel, axis=-1)
    r_prime = np.sum(c * (k * bath.q) + s * vel, axis=-1)
    d_force = -x0 * np.sum(c * k, axis=-1)
    return r_prime, d_force


def force_samples(omegas, weights, m, beta, times, size, master_seed, x0=0.0, v0=0.0,
                  mode=InitMode.CORRELATED, threads=1):
    """Random force of ``size`` thermal realizations at ``times`` (``size x len(times)``).

    For uncorrelated sampling the returned force is the total R' + dF.
    """
    omegas = np.asarray(omegas, dtype=float)
    k = m * np.asarray(weights, dtype=float) * omegas**2
    times = np.asarray(times, dtype=float)
    cos_t = np.cos(np.multiply.outer(omegas, times))
    sin_t = np.sin(np.multiply.outer(omegas, times))

    def work(start):
        stop = min(start + ENSEMBLE_CHUNK, size)
        out = np.empty((stop - start, len(times)))
        for j, i in enumerate(range(start, stop)):
            b = sample_thermal(omegas, weights, m, beta, x0, mode, member_seed(master_seed, i))
            out[j] = (k * (b.q - x0)) @ cos_t + (k * (b.qdot - v0) / omegas) @ sin_t
        return out

    starts = range(0, size, ENSEMBLE_CHUNK)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        blocks = list(pool.map(work, starts))
    return np.concatenate(blocks, axis=0) if blocks else np.empty((0, len(times)))


def system_energy(x, xdot, q, qdot, bath: BathRealization, lagrangian, M, potential=None, t=0.0):
    """Total mechanical energy of particle + bath (arrays broadcast over leading axes)."""
    lagrangian = Lagrangian(lagrangian)
    m_eff, k = bath.masses, bath.couplings
    x = np.asarray(x, dtype=float)
    kin = 0.5 * M * np.asarray(xdot) ** 2 + 0.5 * np.sum(m_eff * np.asarray(qdot) ** 2, axis=-1)
    q = np.asarray(q)
    if lagrangian is Lagrangian.TRANSLATED:
        pot = 0.5 * np.sum(k * (q - x[..., None]) ** 2, axis=-1)
    else:
        pot = np.sum(0.5 * k * q**2, axis=-1) - x * np.sum(k * q, axis=-1)
    if potential is not None:
        pot = pot - x * potential(t)
    return kin + pot


def _verlet(x, v, q, p, omegas, k, M, lagrangian, potential, t0, dt, steps, record_every,
            with_energy=False, m_eff=None):
    """Velocity Verlet on a batch.  x, v: (B,); q, p (velocities): (B, N)."""
    w2 = omegas**2
    translated = lagrangian is Lagrangian.TRANSLATED
    has_force = potential is not None and not potential.is_zero

    def accel(x, q, t):
        y = q - x[:, None]
        if translated:
            fb = np.sum(k * y, axis=-1)
        else:
            fb = np.sum(k * q, axis=-1)
        if has_force:
            fb = fb + potential(t)
        return fb / M, -w2 * y

    n_rec = steps // record_every + 1
    B = len(x)
    T = t0 + dt * record_every * np.arange(n_rec)
    X = np.empty((B, n_rec))
    V = np.empty((B, n_rec))
    E = np.empty((B, n_rec)) if with_energy else None

    def energy(x, v, q, p):
        kin = 0.5 * M * v**2 + 0.5 * np.sum(m_eff * p**2, axis=-1)
        if translated:
            pot = 0.5 * np.sum(k * (q - x[:, None]) ** 2, axis=-1)
        else:
            pot = np.sum(0.5 * k * q**2, axis=-1) - x * np.sum(k * q, axis=-1)
        return kin + pot

    ax, aq = accel(x, q, t0)
    X[:, 0], V[:, 0] = x, v
    if with_energy:
        E[:, 0] = energy(x, v, q, p)
    half = 0.5 * dt
    for step in range(1, steps + 1):
        v = v + half * ax
        p = p + half * aq
        x = x + dt * v
        q = q + dt * p
        ax, aq = accel(x, q, t0 + step * dt)
        v = v + half * ax
        p = p + half * aq
        if step % record_every == 0:
            r = step // record_every
            X[:, r], V[:, r] = x, v
            if with_energy:
                E[:, r] = energy(x, v, q, p)
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
                raise StabilityError(f"non-finite state at t = {t0 + step * dt:.6g}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise StabilityError("non-finite state at the end of the run")
    return T, X, V, E


def _check_dt(dt, omegas):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if len(omegas) and dt * float(np.max(omegas)) >= 0.5:
        raise StabilityError(
            f"dt * max(omega) = {dt * float(np.max(omegas)):.3g} violates the guard < 0.5"
        )


def integrate_full_system(state: FullSystemState, potential: Optional[ForceSpec], dt: float,
                          steps: int, record_every: int = 1,
                          with_energy: bool = False) -> Trajectory:
    """Integrate particle + bath with velocity Verlet and return the particle trajectory.

    The equations of motion are the exact Lagrange equations of the chosen
    coupling with ``V(x, t) = -x f(t)``.  With ``with_energy`` the total
    energy at every recorded step is attached as ``trajectory.energy``.
    """
    bath = state.bath
    if bath is None:
        omegas = k = m_eff = np.zeros(0)
        q = p = np.zeros((1, 0))
    else:
        act = bath.active
        omegas, k, m_eff = bath.omegas[act], bath.couplings[act], bath.masses[act]
        q, p = bath.q[act][None, :], bath.qdot[act][None, :]
    _check_dt(dt, omegas)
    T, X, V, E = _verlet(np.array([state.x]), np.array([state.xdot]), q, p, omegas, k, state.M,
                         state.lagrangian, potential, state.t, dt, steps, record_every,
                         with_energy, m_eff)
    return Trajectory(T, X[0], V[0], E[0] if with_energy else None)


def integrate_ensemble(omegas, weights, m, beta, x0, v0, M, mode, size, master_seed, dt, steps,
                       lagrangian=Lagrangian.TRANSLATED, potential=None, record_every=1,
                       t0=0.0, threads=1, shift=0.0):
    """Integrate ``size`` independently sampled particle + bath systems.

    Member i draws its bath from ``member_seed(master_seed, i)``.  ``shift``
    displaces the particle and every oscillator by the same constant after
    sampling.  Returns ``(t, X, V)`` with X, V of shape ``size x n_records``.
    """
    omegas = np.asarray(omegas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    act = weights > 0
    om, k, m_eff = omegas[act], (m * weights * omegas**2)[act], (m * weights)[act]
    _check_dt(dt, om)
    lagrangian = Lagrangian(lagrangian)

    def work(start):
        stop = min(start + ENSEMBLE_CHUNK, size)
        q, p = _sample_range(omegas, weights, m, beta, x0, mode, start, stop, master_seed)
        n = stop - start
        x = np.full(n, float(x0) + shift)
        v = np.full(n, float(v0))
        return _verlet(x, v, q[:, act] + shift, p[:, act], om, k, M, lagrangian, potential,
                       t0, dt, steps, record_every, False, m_eff)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, range(0, size, ENSEMBLE_CHUNK)))
    T = results[0][0]
    X = np.concatenate([r[1] for r in results], axis=0)
    V = np.concatenate([r[2] for r in results], axis=0)
    return T, X, V


def _sample_range(omegas, weights, m, beta, x0, mode, start, stop, master_seed):
    q = np.empty((stop - start, len(omegas)))
    p = np.empty_like(q)
    for j, i in enumerate(range(start, stop)):
        b = sample_thermal(omegas, weights, m, beta, x0, mode, member_seed(master_seed, i))
        q[j], p[j] = b.q, b.qdot
    return q, p
