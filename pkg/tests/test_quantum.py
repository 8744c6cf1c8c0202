import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oscbath.bath import InitMode
from oscbath.forcing import ForceSpec
from oscbath.gle import ClassicalInit, classical_mean, classical_msd, solve_green
from oscbath.spectral import KernelTable, SpectralModel, memory_kernel, quantum_kernel
from oscbath.quantum import (QuantumScenario, WavePacket, epsilon, epsilon_series, eta,
                             mean_position, mean_position_series, mean_square_displacement,
                             msd_series, spurious_kick, white_epsilon, white_noise_mean,
                             white_noise_variance)

H = 0.005
# 1 + ((1 - e^-1) / 2)^2 + 2 (1 - 3/2 + 2 e^-1 - e^-2 / 2)
VAR_AT_1 = 1.4360765816725884


def white_setup(gamma=1.0, M=1.0, beta=1.0, tau_max=20.0, h=H):
    model = SpectralModel.white(M=M, gamma=gamma)
    k = memory_kernel(model, h, tau_max)
    a = quantum_kernel(model, beta, 1.0, h, tau_max, "high_temperature")
    return k, solve_green(k, M), a


def scenario(packet, mode=InitMode.CORRELATED, gamma=1.0, f=None, **kw):
    k, g, a = white_setup(gamma=gamma, M=packet.M, **kw)
    return QuantumScenario(packet, g, a, f, mode, kw.get("beta", 1.0), gamma, k)


def test_correlated_mean_covers_three():
    s = scenario(WavePacket(1.0, 2.0, 1.0))
    m = mean_position_series(s)
    assert m.values[0] == 1.0
    assert m.values[-1] == pytest.approx(3.0, abs=1e-7)
    assert m.meta["mode"] == "correlated"


def test_uncorrelated_mean_covers_two():
    s = scenario(WavePacket(1.0, 2.0, 1.0), InitMode.UNCORRELATED)
    assert mean_position(s, 0.0) == 1.0
    assert mean_position(s, 20.0) == pytest.approx(2.0, abs=1e-7)


def test_variance_closed_form_value():
    s = scenario(WavePacket(1.0, 2.0, 1.0))
    assert mean_square_displacement(s, 1.0) == pytest.approx(VAR_AT_1, abs=1e-5)
    assert mean_square_displacement(s, 0.0) == 1.0
    exact = white_noise_variance(s.packet, 1.0, 1.0, s.tau)
    assert np.max(np.abs(msd_series(s).values - exact)) < 1e-3


def test_variance_error_is_second_order():
    errs = []
    for h in (0.01, 0.005):
        s = scenario(WavePacket(1.0, 2.0, 1.0), h=h, tau_max=2.0)
        errs.append(abs(mean_square_displacement(s, 1.0) - VAR_AT_1))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_variance_matches_classical_msd_plus_spread():
    p = WavePacket(0.0, 0.0, 0.7, hbar=1.0, M=1.0)
    s = scenario(p)
    classical = classical_msd(s.green, s.kernel, ClassicalInit(sigma0=p.sigma0), 1.0, 1.0)
    spread = (p.hbar * s.green.Delta / (2 * p.M * p.sigma0)) ** 2
    assert np.allclose(msd_series(s).values, classical.values + spread, atol=1e-12)


def test_wide_packet_suppresses_quantum_spread():
    s = scenario(WavePacket(0.0, 0.0, 10.0))
    excess = msd_series(s).values - 100.0
    eps = epsilon_series(s.green, s.alpha)
    assert np.max(np.abs(excess - eps)) < 1e-2 * np.max(eps) + 1e-3


def test_frictionless_limit_is_free_packet():
    p = WavePacket(0.0, 0.0, 0.5)
    s = scenario(p, gamma=1e-6, tau_max=5.0)
    free = p.sigma0**2 + (p.hbar * s.tau / (2 * p.M * p.sigma0)) ** 2
    assert np.allclose(msd_series(s).values, free, rtol=1e-4)


@pytest.mark.parametrize("gamma,beta,M", [(1.0, 1.0, 1.0), (0.4, 2.0, 3.0)])
def test_white_epsilon_closed_form(gamma, beta, M):
    model = SpectralModel.white(M=M, gamma=gamma)
    a = quantum_kernel(model, beta, 1.0, H, 10.0, "high_temperature")
    g = solve_green(memory_kernel(model, H, 10.0), M)
    assert a.impulse_weight == pytest.approx(2 * M * gamma / beta)
    assert np.max(np.abs(epsilon_series(g, a) - white_epsilon(M, beta, gamma, g.tau))) < 1e-3


def test_epsilon_impulse_scaling_is_cubic():
    k, g, a = white_setup(h=1e-4, tau_max=0.02)
    e1, e2 = epsilon(g, a, [0.02, 0.01])
    assert e2 / e1 == pytest.approx(1 / 8, rel=1e-2)


def test_epsilon_smooth_scaling_is_quartic():
    model = SpectralModel.lorentzian(1.0)
    # quartic once tau is well below the inverse band edge
    k = memory_kernel(model, 1e-5, 0.002)
    g = solve_green(k, 1.0)
    a = quantum_kernel(model, 1.0, 1.0, 1e-5, 0.002)
    assert a.impulse_weight == 0.0
    e1, e2 = epsilon(g, a, [0.002, 0.001])
    assert e2 / e1 == pytest.approx(1 / 16, rel=2e-2)
    assert e1 == pytest.approx(a.values[0] * 0.002**4 / 4, rel=2e-2)


def test_epsilon_of_single_line():
    # alpha = c cos(w0 s), Delta = s without friction: eps = c |int_0^t s e^{i w0 s} ds|^2
    c, w0, T = 0.6565176427496656, 1.0, 2.0
    g = solve_green(KernelTable(0.0, 1e-3, np.zeros(2001)), 1.0)
    a = KernelTable(0.0, 1e-3, c * np.cos(w0 * g.tau))
    I = (np.exp(1j * w0 * T) * (1 - 1j * w0 * T) - 1) / w0**2
    assert epsilon(g, a, T) == pytest.approx(c * abs(I) ** 2, rel=1e-5)


def test_variance_is_never_below_initial():
    model = SpectralModel.lorentzian(1.5, gamma=0.8)
    k = memory_kernel(model, 0.01, 20.0)
    g = solve_green(k, 1.0)
    a = quantum_kernel(model, 0.5, 1.0, 0.01, 20.0)
    s = QuantumScenario(WavePacket(0.0, 0.0, 0.3), g, a, kernel=k, beta=0.5)
    assert np.all(msd_series(s).values >= 0.09 - 1e-15)


def test_spurious_kick():
    dp, v = spurious_kick(2.0, 0.5, 3.0, 1.0)
    assert dp == -3.0 and v == -0.5
    assert spurious_kick(1.0, 1.0, 0.0, 2.0) == (-0.0, 2.0)
    s = scenario(WavePacket(1.0, 2.0, 1.0), InitMode.UNCORRELATED)
    _, v_eff = spurious_kick(1.0, 1.0, 1.0, 2.0)
    # the kicked packet drifts by v_eff / gamma from x0
    assert mean_position(s, 20.0) - 1.0 == pytest.approx(v_eff, abs=1e-7)


ALPHA_LORENTZ = quantum_kernel(SpectralModel.lorentzian(0.7, gamma=0.6), 1.0, 1.0, 0.01, 5.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-2, 2), st.floats(0.1, 4.0))
def test_correlated_mean_follows_classical_mean(x0, v0, f0, omega):
    model = SpectralModel.lorentzian(0.7, gamma=0.6)
    k = memory_kernel(model, 0.01, 5.0)
    g = solve_green(k, 1.0)
    f = ForceSpec.sinusoid(f0, omega)
    s = QuantumScenario(WavePacket(x0, v0, 1.0), g, ALPHA_LORENTZ, f, kernel=k)
    ref = classical_mean(g, ClassicalInit(x0, v0), f, 1.0).values
    assert np.allclose(mean_position_series(s).values, ref, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_correlated_mean_is_frame_covariant(x0, c):
    a = mean_position_series(scenario(WavePacket(x0, 1.0, 1.0), tau_max=5.0)).values
    b = mean_position_series(scenario(WavePacket(x0 + c, 1.0, 1.0), tau_max=5.0)).values
    assert np.allclose(b - a, c, atol=1e-12 * (1 + abs(c) + abs(x0)))


def test_uncorrelated_mean_depends_on_frame():
    a = scenario(WavePacket(0.0, 1.0, 1.0), InitMode.UNCORRELATED, tau_max=5.0)
    b = scenario(WavePacket(2.0, 1.0, 1.0), InitMode.UNCORRELATED, tau_max=5.0)
    d = mean_position_series(b).values - mean_position_series(a).values
    assert np.allclose(d, 2.0 * np.exp(-a.tau))


def test_uncorrelated_colored_mean_matches_embedding():
    M, x0, v0, tau_L = 1.0, 1.0, 2.0, 2.0
    model = SpectralModel.lorentzian(tau_L, M=M, gamma=0.5)
    k = memory_kernel(model, H, 20.0)
    g = solve_green(k, M)
    a = quantum_kernel(model, 1.0, 1.0, H, 20.0)
    s = QuantumScenario(WavePacket(x0, v0, 1.0), g, a, None, InitMode.UNCORRELATED, kernel=k)
    A = k.values[0]
    L = np.array([[0, 1, 0, 0], [0, 0, -1 / M, 1 / M],
                  [0, A, -1 / tau_L, 0], [0, 0, 0, -1 / tau_L]])
    at = [5.0, 10.0, 20.0]
    ref = [(expm(L * t) @ [x0, v0, 0.0, -A * x0])[0] for t in at]
    assert np.allclose(mean_position(s, at), ref, atol=1e-4)
    with pytest.raises(ValueError):
        msd_series(s)


def test_eta_of_constant_force_white():
    k, g, _ = white_setup(tau_max=5.0)
    e = eta(g, ForceSpec.constant(2.0))
    assert np.allclose(e, 2.0 * (g.tau - 1 + np.exp(-g.tau)), atol=1e-4)
    assert not np.any(eta(g, None))


def test_white_closed_forms_agree_on_modes():
    p = WavePacket(1.0, 2.0, 1.0)
    tau = np.array([0.0, 1.0, 30.0])
    assert white_noise_mean(1.0, 2.0, 1.0, tau)[-1] == pytest.approx(3.0)
    assert white_noise_mean(1.0, 2.0, 1.0, tau, "uncorrelated")[-1] == pytest.approx(2.0)
    assert white_noise_mean(1.0, 2.0, 0.0, tau).tolist() == [1.0, 3.0, 61.0]
    vc = white_noise_variance(p, 1.0, 1.0, tau)
    vu = white_noise_variance(p, 1.0, 1.0, tau, InitMode.UNCORRELATED)
    assert vc[0] == vu[0] == 1.0
    assert vc[1] - vu[1] == pytest.approx(1 - math.exp(-2.0))


def test_off_grid_time_rejected():
    s = scenario(WavePacket(), tau_max=1.0)
    with pytest.raises(ValueError):
        mean_position(s, 0.0025)
    with pytest.raises(ValueError):
        mean_position(s, 2.0)


def test_inconsistent_inputs_rejected():
    with pytest.raises(ValueError):
        WavePacket(sigma0=0.0)
    with pytest.raises(ValueError):
        WavePacket(hbar=-1.0)
    k, g, a = white_setup(beta=2.0, tau_max=1.0)
    with pytest.raises(ValueError):
        QuantumScenario(WavePacket(), g, a, beta=1.0)
    with pytest.raises(ValueError):
        QuantumScenario(WavePacket(hbar=0.5), g, a, beta=2.0)
    other = quantum_kernel(SpectralModel.white(), 2.0, 1.0, 0.01, 1.0, "high_temperature")
    with pytest.raises(ValueError):
        msd_series(QuantumScenario(WavePacket(), g, other, beta=2.0))


def test_series_csv_keeps_mode(tmp_path):
    s = scenario(WavePacket(1.0, 2.0, 1.0), InitMode.UNCORRELATED, tau_max=1.0)
    path = mean_position_series(s).to_csv(tmp_path / "mean.csv")
    text = path.read_text()
    assert "mode=uncorrelated" in text.splitlines()[0]
    from oscbath.series import MomentSeries
    back = MomentSeries.from_csv(path)
    assert back.meta["mode"] == "uncorrelated"
    assert np.array_equal(back.values, mean_position_series(s).values)
