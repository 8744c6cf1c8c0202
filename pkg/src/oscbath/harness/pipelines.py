"""Computation pipelines behind the scenario runner.

Each pipeline returns a context mapping consumed by the checks, plus the
tables it can emit (anything with a ``to_csv`` method).
"""

from __future__ import annotations

import math
from typing import Any, Dict

import numpy as np

from ..bath import (BathRealization, FullSystemState, InitMode, Lagrangian, discrete_kernel,
                    discretize_bath, force_samples, integrate_ensemble, integrate_full_system,
                    member_seed, recurrence_time, sample_thermal)
from ..gle import (ClassicalInit, classical_mean, classical_msd, default_grid_step, solve_green,
                   uncorrelated_mean)
from ..quantum import QuantumScenario, WavePacket, mean_position_series, msd_series
from ..series import MomentSeries
from ..spectral import SpectralKind, memory_kernel, quantum_kernel
from .config import ConfigError, Scenario


class Table:
    """Plain CSV table: named columns of equal length."""

    def __init__(self, columns: Dict[str, np.ndarray]):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in columns.items()}

    def to_csv(self, path):
        names = list(self.columns)
        data = np.column_stack([self.columns[n] for n in names])
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        return path


def correlation_time(model) -> float:
    """Decay time of the bath force correlations."""
    if model.kind is SpectralKind.LORENTZIAN:
        return model.tau_L
    return math.pi / model.omega_cut


def grid_step(scn: Scenario) -> float:
    return scn.horizon.h or default_grid_step(scn.gamma, scn.horizon.t_max)


def _force_on(scn):
    return None if scn.force.is_zero else scn.force


def _bath(scn: Scenario):
    omegas, weights = discretize_bath(scn.spectral, scn.ensemble.n_oscillators)
    limit = 0.5 * recurrence_time(omegas)
    if scn.horizon.t_max >= limit:
        raise ConfigError(
            f"horizon.t_max: {scn.horizon.t_max:g} violates the recurrence guard "
            f"t_max < {limit:.6g} for N = {len(omegas)}"
        )
    return omegas, weights


def run_moments(scn: Scenario) -> Dict[str, Any]:
    h = grid_step(scn)
    t_max = scn.horizon.t_max
    t0 = scn.horizon.t0
    M, f = scn.M, _force_on(scn)
    kernel = memory_kernel(scn.spectral, h, t_max, scn.option("kernel_method", "auto"))
    green = solve_green(kernel, M)
    init = ClassicalInit(scn.x0, scn.v0, 0.0)
    mean = classical_mean(green, init, f, M, t0, scn.id)
    msd = classical_msd(green, kernel, init, M, scn.beta, t0, scn.id)
    alpha = quantum_kernel(scn.spectral, scn.beta, scn.hbar, h, t_max,
                           scn.option("alpha_method", "auto"))
    packet = WavePacket(scn.x0, scn.v0, scn.sigma0, scn.hbar, M)
    white = scn.spectral.kind is SpectralKind.WHITE
    gamma = scn.gamma if white else None
    q = {}
    for mode in InitMode:
        qs = QuantumScenario(packet, green, alpha, f, mode, scn.beta, gamma, kernel)
        q[f"quantum_mean_{mode.value}"] = mean_position_series(qs, t0)
        try:
            q[f"quantum_msd_{mode.value}"] = msd_series(qs)
        except ValueError:
            q[f"quantum_msd_{mode.value}"] = None
    tables = {
        "kernel": kernel,
        "alpha": alpha,
        "green": Table({"tau": green.tau, "I": green.I, "Delta": green.Delta}),
        "mean": mean,
        "msd": msd,
        "quantum_mean": {k: v for k, v in q.items() if k.startswith("quantum_mean")},
        "quantum_msd": {k: v for k, v in q.items() if k.startswith("quantum_msd") and v},
    }
    ctx = dict(h=h, kernel=kernel, green=green, alpha=alpha, mean=mean, msd=msd,
               packet=packet, **q)
    return {"ctx": ctx, "tables": tables}


def run_fdt(scn: Scenario, threads: int = 1) -> Dict[str, Any]:
    omegas, weights = _bath(scn)
    m = scn.spectral.m
    tc = correlation_time(scn.spectral)
    n_lags = int(scn.option("lags", 31))
    lags = np.linspace(0.0, float(scn.option("lag_span", 3.0)) * tc, n_lags)
    t_max = scn.horizon.t_max
    offsets = np.asarray(scn.option("offsets", [0.0, 0.3 * t_max, 0.6 * t_max]), dtype=float)
    if np.any(offsets + lags[-1] > t_max + 1e-12):
        raise ConfigError("options.offsets: offset + lag span exceeds horizon.t_max")
    times = np.unique(np.concatenate([offsets, (offsets[:, None] + lags[None, :]).ravel()]))
    R = force_samples(omegas, weights, m, scn.beta, times, scn.ensemble.size,
                      scn.ensemble.master_seed, x0=scn.x0, mode=scn.init_mode, threads=threads)
    n = R.shape[0]
    Rc = R - R.mean(axis=0)
    k_lag = discrete_kernel(omegas, weights, m, lags)
    rows = {"offset": [], "lag": [], "beta_cov": [], "kernel": [], "rel_error": []}
    for a in offsets:
        ia = np.searchsorted(times, a)
        for lag, k in zip(lags, k_lag):
            ib = int(np.argmin(np.abs(times - (a + lag))))
            cov = scn.beta * float(Rc[:, ia] @ Rc[:, ib]) / (n - 1)
            rows["offset"].append(a)
            rows["lag"].append(lag)
            rows["beta_cov"].append(cov)
            rows["kernel"].append(k)
            rows["rel_error"].append((cov - k) / k_lag[0])
    mean = R.mean(axis=0)
    se = R.std(axis=0, ddof=1) / math.sqrt(n)
    table = Table(rows)
    ctx = dict(fdt_rows={k: np.asarray(v) for k, v in rows.items()}, force_mean=mean,
               force_se=se, times=times, kernel0=k_lag[0])
    tables = {
        "fdt_table": table,
        "kernel": Table({"lag": lags, "kernel": k_lag}),
        "force_mean": Table({"t": times, "mean": mean, "stderr": se}),
    }
    return {"ctx": ctx, "tables": tables}


def _checkpoints(n_steps, count):
    return np.unique(np.rint(np.linspace(0, n_steps, count + 1)[1:]).astype(int))


def run_micro(scn: Scenario, threads: int = 1) -> Dict[str, Any]:
    omegas, weights = _bath(scn)
    ens = scn.ensemble
    dt = ens.dt
    steps = int(round(scn.horizon.t_max / dt))
    M, f = scn.M, _force_on(scn)
    m = scn.spectral.m
    t0 = scn.horizon.t0
    T, X, _ = integrate_ensemble(omegas, weights, m, scn.beta, scn.x0, scn.v0, M, scn.init_mode,
                                 ens.size, ens.master_seed, dt, steps, scn.lagrangian, f,
                                 t0=t0, threads=threads)
    # GLE prediction on the integrator's own grid
    kernel = memory_kernel(scn.spectral, dt, steps * dt, scn.option("gle_kernel", "quadrature"))
    green = solve_green(kernel, M)
    init = ClassicalInit(scn.x0, scn.v0, 0.0)
    if scn.init_mode is InitMode.CORRELATED:
        gle_mean = classical_mean(green, init, f, M, t0, scn.id)
    else:
        gle_mean = uncorrelated_mean(green, kernel, init, f, M, t0, scn.id)
    gle_msd = classical_msd(green, kernel, init, M, scn.beta, t0, scn.id)

    # mean initial state: the exact ensemble average of a linear system
    centre = scn.x0 if scn.init_mode is InitMode.CORRELATED else 0.0
    bath = BathRealization(omegas, weights, m, np.full(len(omegas), centre),
                           np.zeros(len(omegas)), scn.init_mode)
    det = integrate_full_system(FullSystemState(scn.x0, scn.v0, bath, t0, scn.lagrangian, M),
                                f, dt, steps)

    idx = _checkpoints(steps, ens.checkpoints)
    mean = X.mean(axis=0)
    n = X.shape[0]
    var = X.var(axis=0, ddof=1) if n > 1 else np.zeros(X.shape[1])
    se = np.sqrt(var / n)
    ctx = dict(idx=idx, t=T, ens_mean=mean, ens_var=var, ens_se=se, gle_mean=gle_mean.values,
               gle_var=gle_msd.values, det=det.x, dt=dt)
    tables = {
        "ensemble": Table({"t": T, "mean": mean, "stderr": se, "msd": var}),
        "gle_mean": gle_mean,
        "gle_msd": gle_msd,
        "trajectory": det,
    }
    return {"ctx": ctx, "tables": tables}


def run_contrast(scn: Scenario, threads: int = 1) -> Dict[str, Any]:
    omegas, weights = _bath(scn)
    ens = scn.ensemble
    dt = ens.dt
    steps = int(scn.option("steps", round(scn.horizon.t_max / dt)))
    if steps * dt > scn.horizon.t_max * (1 + 1e-12):
        raise ConfigError("options.steps: steps * ensemble.dt exceeds horizon.t_max")
    c = float(scn.option("shift", 1.0))
    M, f = scn.M, _force_on(scn)
    m = scn.spectral.m
    t0 = scn.horizon.t0
    bath = sample_thermal(omegas, weights, m, scn.beta, scn.x0, InitMode.CORRELATED,
                          member_seed(ens.master_seed, 0))
    deviation, cols = {}, {}
    with np.errstate(over="ignore", invalid="ignore"):
        for lag in Lagrangian:
            base = integrate_full_system(FullSystemState(scn.x0, scn.v0, bath, t0, lag, M),
                                         f, dt, steps)
            moved = integrate_full_system(
                FullSystemState(scn.x0 + c, scn.v0, bath.shifted(c), t0, lag, M), f, dt, steps)
            diff = moved.x - base.x - c
            deviation[lag.value] = float(np.max(np.abs(diff)))
            cols["t"] = base.t
            cols[f"{lag.value}_x"] = base.x
            cols[f"{lag.value}_shift_error"] = diff

        drift_steps = int(scn.option("drift_steps", steps))
        T, X, _ = integrate_ensemble(omegas, weights, m, scn.beta, scn.x0, scn.v0, M,
                                     InitMode.CORRELATED, ens.size, ens.master_seed, dt,
                                     drift_steps, Lagrangian.BILINEAR, f, t0=t0, threads=threads)
    mean = X.mean(axis=0)
    se = X.std(axis=0, ddof=1) / math.sqrt(X.shape[0])
    ctx = dict(deviation=deviation, drift_mean=mean, drift_se=se, drift_t=T)
    tables = {
        "contrast": Table(cols),
        "ensemble": Table({"t": T, "mean": mean, "stderr": se,
                           "msd": X.var(axis=0, ddof=1)}),
    }
    return {"ctx": ctx, "tables": tables}


RUNNERS = {
    "moments": lambda scn, threads: run_moments(scn),
    "fdt": run_fdt,
    "micro": run_micro,
    "contrast": run_contrast,
}
