import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oscbath.bath import BathRealization, InitMode, discretize_bath, member_seed, sample_thermal
from oscbath.forcing import ForceSpec
from oscbath.gle import (ClassicalInit, GreenSolverError, causal_convolution, classical_ensemble,
                         classical_mean, classical_msd, classical_trajectory, default_grid_step,
                         exponential_kernel_green, quadratic_functional, solve_green,
                         uncorrelated_mean)
from oscbath.spectral import KernelTable, SpectralModel, memory_kernel


def white(gamma=1.0, M=1.0, h=0.005, tau_max=20.0):
    return memory_kernel(SpectralModel.white(M=M, gamma=gamma), h, tau_max)


def embedding_oracle(M, A, tau_c, tau):
    """(I, z, Delta) for K = A exp(-tau / tau_c) via the matrix exponential."""
    L = np.array([[0.0, -1.0 / M, 0.0], [A, -1.0 / tau_c, 0.0], [1.0, 0.0, 0.0]])
    return np.array([expm(L * t) @ [1.0, 0.0, 0.0] for t in tau])


def dense_double_trapezoid(Delta, k, h, impulse=0.0):
    n = len(Delta)
    out = np.zeros(n)
    for j in range(1, n):
        w = np.full(j + 1, h)
        w[0] = w[-1] = h / 2
        d = Delta[: j + 1] * w
        lag = np.abs(np.subtract.outer(np.arange(j + 1), np.arange(j + 1)))
        out[j] = d @ k[lag] @ d + impulse * (d @ Delta[: j + 1])
    return out


def test_zero_kernel_gives_free_motion():
    k = KernelTable(0.0, 0.1, np.zeros(51))
    g = solve_green(k, 2.0)
    assert np.all(g.I == 1.0)
    assert np.allclose(g.Delta, g.tau, atol=1e-13)


def test_white_green_function():
    g = solve_green(white(), 1.0)
    assert g.I[0] == 1.0 and g.Delta[0] == 0.0
    assert np.max(np.abs(g.I - np.exp(-g.tau))) < 1e-4
    assert np.max(np.abs(g.Delta - (1 - np.exp(-g.tau)))) < 1e-4
    assert g.Delta[-1] == pytest.approx(1.0, abs=1e-8)
    assert (g.Delta[1] - g.Delta[0]) / g.grid_step == pytest.approx(1.0, abs=g.grid_step)


def test_white_green_convergence_order():
    errs = []
    for h in (0.02, 0.01, 0.005):
        g = solve_green(white(h=h, tau_max=10.0), 1.0)
        errs.append(np.max(np.abs(g.I - np.exp(-g.tau))))
    for a, b in zip(errs, errs[1:]):
        assert 3.2 <= a / b <= 4.8


def test_lorentzian_green_matches_embedding():
    M, gamma, tau_L = 1.0, 0.5, 2.0
    k = memory_kernel(SpectralModel.lorentzian(tau_L, M=M, gamma=gamma), 0.01, 20.0)
    g = solve_green(k, M)
    ref = embedding_oracle(M, k.values[0], tau_L, g.tau[::20])
    assert np.max(np.abs(g.I[::20] - ref[:, 0])) < 1e-4
    assert np.max(np.abs(g.Delta[::20] - ref[:, 2])) < 1e-4


def test_rk4_embedding_agrees_with_matrix_exponential():
    tau = np.linspace(0.0, 10.0, 101)
    rk = exponential_kernel_green(1.3, 0.7, 0.8, tau)
    ref = embedding_oracle(1.3, 0.7, 0.8, tau)[:, 0]
    assert np.max(np.abs(rk - ref)) < 1e-10


@pytest.mark.parametrize("model", [
    SpectralModel.white(gamma=2.0),
    SpectralModel.lorentzian(0.2, gamma=1.0),
    SpectralModel.lorentzian(1.0, gamma=0.2),
])
def test_delta_is_monotone_for_overdamped_memory(model):
    # exponential memory is overdamped when tau_L <= M / (4 gamma)
    g = solve_green(memory_kernel(model, 0.01, 15.0), model.M)
    assert np.all(np.diff(g.Delta) >= -1e-12)
    assert np.all(g.Delta <= g.tau + 1e-12)


@pytest.mark.parametrize("tau_L,gamma", [(0.5, 1.0), (3.0, 0.3)])
def test_underdamped_memory_overshoots(tau_L, gamma):
    g = solve_green(memory_kernel(SpectralModel.lorentzian(tau_L, gamma=gamma), 0.01, 100.0), 1.0)
    assert g.I.min() < 0
    assert np.all(g.Delta <= g.tau + 1e-12)
    assert g.Delta[-1] == pytest.approx(1.0 / gamma, rel=1e-3)


def test_weak_friction_approaches_free_motion():
    gaps = []
    for gamma in (1e-1, 1e-2, 1e-3):
        g = solve_green(white(gamma=gamma, h=0.01, tau_max=5.0), 1.0)
        gaps.append(np.max(np.abs(g.Delta - g.tau)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.02


def test_unstable_kernel_is_detected():
    k = KernelTable(-2.0, 0.01, np.zeros(2001))
    with pytest.raises(GreenSolverError):
        solve_green(k, 1.0)


def test_solver_input_validation():
    k = white(h=0.01, tau_max=1.0)
    with pytest.raises(ValueError):
        solve_green(k, 0.0)
    with pytest.raises(ValueError):
        solve_green(k, 1.0, h=0.02)
    with pytest.raises(ValueError):
        solve_green(k, 1.0, tau_max=2.0)
    assert len(solve_green(k, 1.0, tau_max=0.5)) == 51


def test_default_grid_step():
    assert default_grid_step(1.0, 20.0) == pytest.approx(0.005)
    assert default_grid_step(0.01, 20.0) == pytest.approx(0.01)
    assert default_grid_step(0.0, 20.0) == pytest.approx(0.01)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32))
def test_causal_convolution_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    h = 0.1
    Delta = np.concatenate([[0.0], rng.normal(size=n - 1)])
    g = rng.normal(size=n)
    out = causal_convolution(Delta, g, h)
    for j in range(n):
        w = np.full(j + 1, h)
        w[0] = w[-1] = h / 2
        if j == 0:
            w[:] = 0.0
        assert out[j] == pytest.approx(np.sum(w * Delta[j::-1] * g[: j + 1]), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_quadratic_functional_matches_dense_quadrature(n, seed, impulse):
    rng = np.random.default_rng(seed)
    h = 0.05
    Delta = np.concatenate([[0.0], rng.normal(size=n - 1)])
    k = rng.normal(size=n)
    got = quadratic_functional(Delta, KernelTable(impulse, h, k))
    assert np.allclose(got, dense_double_trapezoid(Delta, k, h, impulse), atol=1e-11)


def test_quadratic_functional_requires_zero_start():
    with pytest.raises(ValueError):
        quadratic_functional(np.ones(5), KernelTable(1.0, 0.1, np.zeros(5)))


def test_mean_covered_distance():
    g = solve_green(white(), 1.0)
    m = classical_mean(g, ClassicalInit(1.0, 2.0), None, 1.0)
    assert m.values[0] == 1.0
    assert m.values[-1] == pytest.approx(3.0, abs=1e-7)


def test_mean_at_rest_stays_put():
    g = solve_green(white(), 1.0)
    assert np.all(classical_mean(g, ClassicalInit(0.7, 0.0), ForceSpec.zero(), 1.0).values == 0.7)


def test_constant_force_without_friction():
    g = solve_green(KernelTable(0.0, 0.01, np.zeros(301)), 2.0)
    m = classical_mean(g, ClassicalInit(), ForceSpec.constant(1.5), 2.0)
    assert np.allclose(m.values, 1.5 * g.tau**2 / 4.0, atol=1e-12)


def test_sinusoidal_force_with_white_noise():
    # x'' + x' = A sin(w t) from rest: x = int_0^t (1 - exp(-(t - s))) A sin(w s) ds
    A, w = 1.0, 2.0
    g = solve_green(white(h=0.002, tau_max=10.0), 1.0)
    m = classical_mean(g, ClassicalInit(), ForceSpec.sinusoid(A, w), 1.0)
    t = g.tau[::500]
    ref = A * (1 / w - np.cos(w * t) / w - (w * np.exp(-t) - w * np.cos(w * t)
                                          + np.sin(w * t)) / (1 + w * w))
    assert np.allclose(m.values[::500], ref, atol=1e-5)


def test_white_msd_closed_form():
    g = solve_green(white(), 1.0)
    k = white()
    msd = classical_msd(g, k, ClassicalInit(sigma0=0.0), 1.0, 1.0)
    assert msd.at(1.0) == pytest.approx(0.3361825, abs=1e-5)
    tau = g.tau
    exact = 2 * (tau - 1.5 + 2 * np.exp(-tau) - 0.5 * np.exp(-2 * tau))
    assert np.max(np.abs(msd.values - exact)) < 1e-3


def test_msd_starts_at_initial_spread():
    g = solve_green(white(), 1.0)
    msd = classical_msd(g, white(), ClassicalInit(sigma0=0.4), 1.0, 1.0)
    assert msd.values[0] == pytest.approx(0.16)


def test_msd_long_time_slope():
    M, beta, gamma = 2.0, 0.5, 1.5
    k = memory_kernel(SpectralModel.white(M=M, gamma=gamma), 0.005, 40.0)
    msd = classical_msd(solve_green(k, M), k, ClassicalInit(), M, beta)
    slope = (msd.at(40.0) - msd.at(20.0)) / 20.0
    assert slope == pytest.approx(2.0 / (M * beta * gamma), rel=1e-2)


def test_frame_covariance_of_mean():
    g = solve_green(memory_kernel(SpectralModel.lorentzian(1.0), 0.01, 10.0), 1.0)
    f = ForceSpec.piecewise([1.0, 4.0], [0.0, 1.0, -0.5])
    a = classical_mean(g, ClassicalInit(0.0, 1.0), f, 1.0).values
    b = classical_mean(g, ClassicalInit(2.5, 1.0), f, 1.0).values
    assert np.allclose(b - a, 2.5, atol=1e-14, rtol=0)


def test_uncorrelated_white_mean_closed_form():
    g = solve_green(white(), 1.0)
    m = uncorrelated_mean(g, white(), ClassicalInit(1.0, 2.0), None, 1.0)
    exact = np.exp(-g.tau) + 2.0 * (1 - np.exp(-g.tau))
    assert np.max(np.abs(m.values - exact)) < 1e-4
    assert m.values[-1] == pytest.approx(2.0, abs=1e-6)


def test_uncorrelated_colored_mean_matches_embedding():
    # x' = v, M v' = -z + w, z' = A v - z / tc, w' = -w / tc, w(0) = -A x0
    M, A, tc, x0, v0 = 1.0, 0.25, 2.0, 1.5, 0.5
    k = memory_kernel(SpectralModel.lorentzian(tc, M=M, gamma=0.5), 0.005, 30.0)
    assert k.values[0] == pytest.approx(A)
    g = solve_green(k, M)
    m = uncorrelated_mean(g, k, ClassicalInit(x0, v0), None, M)
    L = np.array([[0, 1, 0, 0], [0, 0, -1 / M, 1 / M], [0, A, -1 / tc, 0], [0, 0, 0, -1 / tc]])
    y0 = np.array([x0, v0, 0.0, -A * x0])
    ref = np.array([(expm(L * t) @ y0)[0] for t in g.tau[::200]])
    assert np.max(np.abs(m.values[::200] - ref)) < 1e-4


def test_trajectory_without_noise_is_the_mean():
    model = SpectralModel.white(omega_cut=20.0)
    omegas, weights = discretize_bath(model, 50)
    bath = BathRealization(omegas, weights, 1.0, np.full(50, 0.3), np.zeros(50))
    k = memory_kernel(model, 0.01, 5.0)
    g = solve_green(k, 1.0)
    f = ForceSpec.constant(0.2)
    traj = classical_trajectory(g, bath, ClassicalInit(0.3, 1.0), f, 1.0)
    assert np.allclose(traj.values, classical_mean(g, ClassicalInit(0.3, 1.0), f, 1.0).values)


def test_trajectory_single_oscillator_two_body():
    # GLE of one oscillator: K = k cos(w tau); compare with the exact 2-DOF flow
    w, weight, m, M = 1.2, 0.5, 1.0, 1.0
    kspring = m * weight * w**2
    model = SpectralModel.tabulated([w], [weight], M, m)
    errs = []
    for h in (0.02, 0.01):
        k = memory_kernel(model, h, 10.0)
        g = solve_green(k, M)
        bath = BathRealization([w], [weight], m, [0.9], [0.4])
        x = classical_trajectory(g, bath, ClassicalInit(0.2, -0.3), None, M).values
        L = np.array([[0, 0, 1, 0], [0, 0, 0, 1],
                      [-kspring / M, kspring / M, 0, 0], [kspring / (m * weight), -w**2, 0, 0]])
        ref = np.array([(expm(L * t) @ [0.2, 0.9, -0.3, 0.4])[0] for t in g.tau])
        errs.append(np.max(np.abs(x - ref)))
    assert errs[1] < 1e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_ensemble_matches_per_member_trajectories():
    model = SpectralModel.white(omega_cut=20.0)
    omegas, weights = discretize_bath(model, 80)
    k = memory_kernel(model, 0.01, 4.0)
    g = solve_green(k, 1.0)
    init = ClassicalInit(0.5, 1.0)
    idx = np.array([0, 100, 399])
    X = classical_ensemble(g, omegas, weights, 1.0, 1.0, init, None, 1.0, 5, 17, idx)
    for i in range(5):
        b = sample_thermal(omegas, weights, 1.0, 1.0, 0.5, seed=member_seed(17, i))
        x = classical_trajectory(g, b, init, None, 1.0).values
        assert np.allclose(X[i], x[idx], atol=1e-12)


def test_ensemble_variance_matches_msd():
    model = SpectralModel.white(omega_cut=40.0, omega_min=0.005)
    omegas, weights = discretize_bath(model, 2000)
    k = memory_kernel(model, 0.005, 5.0, "quadrature")
    g = solve_green(k, 1.0)
    init = ClassicalInit(0.0, 1.0)
    idx = np.array([200, 400, 600, 800, 1000])
    X = classical_ensemble(g, omegas, weights, 1.0, 1.0, init, None, 1.0, 10_000, 2, idx)
    msd = classical_msd(g, k, init, 1.0, 1.0).values[idx]
    assert np.allclose(X.var(axis=0), msd, rtol=0.05)


def test_uncorrelated_ensemble_mean():
    model = SpectralModel.white(omega_cut=40.0, omega_min=0.005)
    omegas, weights = discretize_bath(model, 1000)
    k = memory_kernel(model, 0.005, 3.0, "quadrature")
    g = solve_green(k, 1.0)
    init = ClassicalInit(1.0, 0.0)
    idx = np.array([100, 300, 600])
    X = classical_ensemble(g, omegas, weights, 1.0, 1.0, init, None, 1.0, 4000, 4, idx,
                           InitMode.UNCORRELATED)
    ref = uncorrelated_mean(g, k, init, None, 1.0).values[idx]
    se = X.std(axis=0) / math.sqrt(len(X))
    assert np.all(np.abs(X.mean(axis=0) - ref) < 4 * se)
