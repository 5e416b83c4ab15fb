import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrch import wavetrain as W

import oracles


def test_gamma_is_surface_tension_integral():
    # int Q'^2/2 + F(Q) = int Q'^2 = 2 gamma (equipartition)
    eta = np.linspace(-40, 40, 400001)
    Q = W.heteroclinic(eta)
    dQ = np.gradient(Q, eta)
    assert abs(np.trapezoid(dQ**2, eta) - 2 * W.GAMMA) < 1e-8
    assert abs(np.trapezoid(dQ**2 / 2 + W.potential(Q), eta) - 2 * W.GAMMA) < 1e-8


def test_heteroclinic_solves_profile_equation():
    eta = np.linspace(-6, 6, 121)
    h = 1e-4
    Q = W.heteroclinic
    d2 = (Q(eta + h) - 2 * Q(eta) + Q(eta - h)) / h**2
    assert np.abs(d2 - W.potential_derivative(Q(eta))).max() < 1e-6


def test_xi_at_threshold_is_zero():
    assert W.solve_xi(-1.0) == 0.0
    assert W.solve_xi(-0.5) == 0.0
    assert W.solve_xi(3.0) == 0.0


def test_xi_rejects_zero_theta():
    with pytest.raises(ValueError):
        W.solve_xi(0.0)


@pytest.mark.parametrize("theta", [-1.0001, -1.05, -2.25, -3.0, -12.0, -50.0])
def test_xi_matches_bisection_oracle(theta):
    assert abs(W.solve_xi(theta) - oracles.bisect_xi(theta)) < 1e-12 * max(1.0, -theta)


def test_xi_near_threshold_small_positive():
    xi = W.solve_xi(-1.05)
    # xi^2 ~ 3 (|theta| - 1)/|theta| for theta -> -1
    assert 0 < xi < 0.5
    assert abs(xi**2 - 3 * 0.05 / 1.05) < 0.01


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, -1.000001))
def test_speed_equation_residual(theta):
    xi = W.solve_xi(theta)
    assert abs(xi + theta * math.tanh(xi)) < 1e-13 * max(1.0, -theta)
    assert 0 < xi <= -theta


def test_xi_monotone_in_theta():
    th = -np.linspace(1.01, 40, 300)
    xi = np.array([W.solve_xi(t) for t in th])
    assert np.all(np.diff(xi) > 0)


def test_speed_scales():
    assert W.speed(-4, 2, 2) == pytest.approx(4 * W.solve_xi(-4))
    assert W.speed(-2, 1, 3) == pytest.approx(3 * W.speed(-2, 1, 1))
    with pytest.raises(ValueError):
        W.speed(-2, 0.0, 1)
    with pytest.raises(ValueError):
        W.speed(-2, 1.0, 0)


def test_model_params_validation():
    with pytest.raises(ValueError):
        W.ModelParams(epsilon=0, tau=1, theta=-2)
    with pytest.raises(ValueError):
        W.ModelParams(epsilon=0.1, tau=-1, theta=-2)
    with pytest.raises(ValueError):
        W.ModelParams(epsilon=0.1, tau=1, theta=0)


def test_dimensional_conversion():
    dp = W.DimensionalParams(kappa=4.0, beta=1.0, L=2.0, H=1.0, D12=0.3, D21=-0.6, D22=0.2)
    mp_ = dp.to_model()
    assert dp.theta == pytest.approx(0.3 * -0.6 / 0.04)
    assert mp_.epsilon == pytest.approx(1.0)
    assert mp_.tau == pytest.approx(2.0 / (0.2 * 2.0))
    assert mp_.rho == pytest.approx(0.5)


def test_sharp_speed_reference_value():
    # sqrt|D12 D21| = 0.15, D22 = 0.1 gives theta = -2.25
    dp = W.DimensionalParams(kappa=1, beta=1, L=1, H=1, D12=0.15, D21=-0.15, D22=0.1)
    ds = W.dimensional_speeds(dp, normalized=True)
    assert ds.c_sharp == pytest.approx(5.853, abs=1e-3)
    assert ds.bm_valid
    assert ds.c_bm == pytest.approx(2 * math.pi * math.sqrt(1 - 0.01 / 0.0225))


def test_bm_speed_invalid_when_radicand_negative():
    dp = W.DimensionalParams(kappa=1, beta=1, L=1, H=1, D12=0.05, D21=-0.05, D22=0.1)
    ds = W.dimensional_speeds(dp)
    assert not ds.bm_valid and math.isnan(ds.c_bm)
    assert ds.c_sharp == 0.0


@pytest.mark.parametrize("theta,tau,N", [(-2.0, 1.0, 1), (-1.3, 0.5, 2), (-6.0, 2.0, 3), (-9.0, 0.25, 1)])
def test_profile_conditions(theta, tau, N):
    prof = W.build_profile(W.ModelParams(0.01, tau, theta), N)
    res = oracles.profile_residuals(prof)
    assert max(res.values()) < 1e-10, res


def test_profile_front_values_and_slopes():
    prof = W.build_profile(W.ModelParams(0.01, 1.3, -2.5), 2)
    for n in range(1, 5):
        xn = n / 4
        assert prof.v0(xn - 1e-12) == pytest.approx(prof.front_value(n), abs=1e-9)
        mid = xn - 1 / 8
        assert prof.dw0(mid) == pytest.approx(prof.w0_slope(n))
        assert prof.w0(xn - 1e-12) == pytest.approx(prof.theta * prof.front_value(n), abs=1e-9)


def test_dv0_matches_finite_difference():
    prof = W.build_profile(W.ModelParams(0.01, 1.0, -3.0), 1)
    x = np.linspace(0.05, 0.45, 9)
    h = 1e-6
    fd = (prof.v0(x + h) - prof.v0(x - h)) / (2 * h)
    assert np.allclose(prof.dv0(x), fd, rtol=1e-6)


def test_stationary_profile_is_flat():
    prof = W.build_profile(W.ModelParams(0.01, 1.0, -0.5), 2)
    x = np.linspace(0, 1, 50, endpoint=False)
    assert prof.c0 == 0
    assert np.all(prof.v0(x) == 0) and np.all(prof.w0(x) == 0)


def test_signed_distance_unshifted():
    x = np.array([0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.9])
    d = W.signed_distance(x, 1)
    assert np.allclose(d, [0.0, 0.1, 0.25, 0.1, 0.0, -0.1, -0.1])


def test_signed_distance_with_zero_shifts_matches_plain():
    x = np.linspace(0, 1, 97, endpoint=False)
    for N in (1, 2, 3):
        assert np.allclose(W.signed_distance(x, N, np.zeros(2 * N)), W.signed_distance(x, N), atol=1e-15)


def test_signed_distance_shift_moves_zero():
    x = np.linspace(0, 1, 2001, endpoint=False)
    d = W.signed_distance(x, 1, np.array([0.05, -0.02]))
    # fronts now at 0.55 (front 1) and 0.98 (front 2 = front 0)
    assert abs(np.interp(0.55, x, d)) < 1e-12
    assert np.interp(0.5, x, d) > 0 and np.interp(0.6, x, d) < 0
    assert np.interp(0.97, x, d) < 0 and np.interp(0.99, x, d) > 0


def test_composite_fields_and_overlap_warning():
    params = W.ModelParams(0.01, 1.0, -2.0)
    prof = W.build_profile(params, 1)
    u, v = W.composite_fields(prof, params)
    x = np.linspace(0, 1, 1000, endpoint=False)
    assert np.allclose(v(x), prof.v0(x) - u(x) / params.tau)
    # equal phase fractions: mean(u) ~ 0
    assert abs(oracles.trapezoid_periodic(u, 4000)) < 1e-10
    with pytest.warns(RuntimeWarning):
        big = W.ModelParams(0.2, 1.0, -2.0)
        W.composite_fields(W.build_profile(big, 2), big)


def test_profile_csv_roundtrip(tmp_path):
    params = W.ModelParams(0.005, 1.5, -2.5)
    prof = W.build_profile(params, 2)
    path = tmp_path / "p.csv"
    W.write_profile_csv(path, prof, params, 64)
    header, cols = W.read_profile_csv(path)
    assert header["c0"] == prof.c0 and header["N"] == 2
    x = np.arange(64) / 64
    assert np.array_equal(cols["v0"], prof.v0(x))
    assert np.array_equal(cols["x"], x)


def test_v0_mean_zero_by_trapezoid():
    prof = W.build_profile(W.ModelParams(0.01, 1.0, -2.0), 1)
    x = np.linspace(0, 1, 200001)
    assert abs(np.trapezoid(prof.v0(x), x)) < 1e-8
