import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ive

from shallow_ansatz.burgers import (
    PAPER_CONFIGS,
    UPWIND,
    BurgersConfig,
    BurgersError,
    GridField,
    convergence_order,
    encode_state,
    evolve,
    initial_profile,
    integrate,
    stable_dt,
)


def cole_hopf_sine(x, t, nu, amplitude=1.0, terms=80):
    """Exact solution for u0 = A sin(2 pi x) via the heat equation.

    phi0 = exp(beta cos(2 pi x)) up to a constant, beta = A / (4 pi nu);
    its Fourier coefficients are modified Bessel functions.
    """
    beta = amplitude / (4 * math.pi * nu)
    k = np.arange(1, terms + 1)[:, None]
    decay = np.exp(-nu * (2 * math.pi * k) ** 2 * t)
    coef = ive(k, beta) * decay
    phi = ive(0, beta) + 2 * np.sum(coef * np.cos(2 * math.pi * k * x), axis=0)
    dphi = -2 * np.sum(coef * 2 * math.pi * k * np.sin(2 * math.pi * k * x), axis=0)
    return -2 * nu * dphi / phi


def test_cole_hopf_oracle_starts_at_the_profile():
    x = np.linspace(0, 1, 33)
    assert np.allclose(cole_hopf_sine(x, 0.0, 0.05), np.sin(2 * np.pi * x), atol=1e-12)


def test_solver_matches_cole_hopf():
    cfg = BurgersConfig(nu=0.05, t_final=0.083, qubits=6, init="sin")
    field = evolve(cfg)
    exact = cole_hopf_sine(field.x, cfg.t_final, cfg.nu)
    assert np.max(np.abs(field.values - exact)) < 3e-4


def test_solver_converges_at_second_order_to_cole_hopf():
    errs = []
    for m in (32, 64, 128):
        x = np.arange(m) / m
        u = integrate(np.sin(2 * np.pi * x), 0.05, 0.083)
        errs.append(np.max(np.abs(u - cole_hopf_sine(x, 0.083, 0.05))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 1.9


def test_constant_profile_is_stationary():
    u = integrate(np.full(32, 0.7), nu=0.1, t_final=0.3)
    assert np.allclose(u, 0.7, atol=1e-14)


@pytest.mark.parametrize("name", sorted(PAPER_CONFIGS))
def test_paper_configs_conserve_the_sum(name):
    cfg = PAPER_CONFIGS[name]
    fine = cfg.points * cfg.refine
    u0 = initial_profile(cfg, np.arange(fine) / fine)
    scale = max(abs(u0.sum()), np.abs(u0).sum())
    drift = []
    integrate(u0, cfg.nu, cfg.t_final, observer=lambda t, u: drift.append(abs(u.sum() - u0.sum())))
    assert max(drift) / scale < 1e-8


def test_laminar_state_diffuses_to_its_mean():
    cfg = PAPER_CONFIGS["state1"]
    field = evolve(cfg)
    assert np.ptp(field.values) < 1e-10
    assert field.values.mean() == pytest.approx(cfg.width * math.sqrt(2 * math.pi), rel=1e-10)


def test_turbulent_sine_steepens():
    cfg = PAPER_CONFIGS["state3"]
    m = cfg.points * cfg.refine
    u = integrate(initial_profile(cfg, np.arange(m) / m), cfg.nu, cfg.t_final)
    # the front at x = 1/2 is far steeper than the initial 2 pi
    assert np.min(np.diff(u)) * m < -20


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=4), st.floats(0.02, 0.2))
def test_max_amplitude_never_grows(coeffs, nu):
    x = np.arange(64) / 64
    u0 = sum(c * np.sin(2 * np.pi * (k + 1) * x) for k, c in enumerate(coeffs))
    peaks = [np.max(np.abs(u0))]
    integrate(u0, nu, 0.05, observer=lambda t, u: peaks.append(np.max(np.abs(u))))
    assert all(b <= a + 1e-12 for a, b in zip(peaks, peaks[1:]))


def test_upwind_is_first_order_and_conservative():
    cfg = BurgersConfig(nu=0.02, t_final=0.083, qubits=5, init="sin", scheme=UPWIND)
    order, errors = convergence_order(cfg)
    assert order >= 1
    u0 = np.sin(2 * np.pi * np.arange(64) / 64)
    u = integrate(u0, 0.02, 0.2, UPWIND)
    assert abs(u.sum()) < 1e-10


def test_central_is_second_order_on_a_smooth_gaussian():
    order, _ = convergence_order(BurgersConfig(nu=1e-2, t_final=0.083, qubits=5))
    assert order >= 2 - 0.05


def test_stability_limit():
    u = np.ones(16)
    assert stable_dt(u, 1 / 16, 10.0) == pytest.approx(0.5 * (1 / 16) ** 2 / 20)
    assert stable_dt(u, 1 / 16, 1e-3) == pytest.approx(0.5 / 16)
    with pytest.raises(BurgersError, match="stability"):
        integrate(u, 10.0, 0.1, dt=1e-2)


def test_blow_up_is_reported():
    u0 = np.array([np.nan, 1.0, 0.0, -1.0])
    with pytest.raises(BurgersError, match="blew up"):
        integrate(u0, 0.1, 0.01)


def test_config_validation():
    with pytest.raises(BurgersError):
        BurgersConfig(nu=0.0, t_final=1.0)
    with pytest.raises(BurgersError):
        BurgersConfig(nu=1.0, t_final=1.0, init="step")
    with pytest.raises(BurgersError):
        GridField(np.ones(6), 0.0)
    with pytest.raises(BurgersError):
        GridField(np.array([1.0, np.inf]), 0.0)


def test_encode_constant_field_is_uniform():
    s = encode_state(GridField(np.ones(16), 0.0))
    assert np.allclose(s.amplitudes, 0.25)
    assert s.n == 4


def test_encode_delta_is_the_zero_state():
    v = np.zeros(8)
    v[0] = 3.0
    assert np.allclose(encode_state(v).amplitudes, np.eye(8)[0])


def test_encode_rejects_zero_and_odd_lengths():
    with pytest.raises(BurgersError):
        encode_state(np.zeros(4))
    with pytest.raises(BurgersError):
        encode_state(np.ones(5))


@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3), st.floats(1e-3, 1e3))
def test_encoding_is_normalised_and_scale_free(values, c):
    v = np.array(values)
    s = encode_state(v)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(encode_state(c * v).amplitudes, s.amplitudes, atol=1e-12)
