import math

import numpy as np
import pytest

from nrch import stability as S
from nrch.kernels import circulant_eigenvector
from nrch.wavetrain import ModelParams

import oracles


def P(theta, tau=1.0):
    return ModelParams(epsilon=0.01, tau=tau, theta=theta)


# -- argument principle on functions with known zeros ------------------------


@pytest.mark.parametrize(
    "zeros,expected",
    [
        ([], 0),
        ([2.0], 1),
        ([1.0, 3.0 + 4.0j, 3.0 - 4.0j], 3),
        ([-1.0, 0.5 + 20j, 0.5 - 20j], 2),
        ([-2.0, -1.0 + 1j, -1.0 - 1j], 0),
    ],
)
def test_count_unstable_rational(zeros, expected):
    # F = prod(lam - z) / prod(lam + 7)^(n-1) ~ lam, poles in the left half-plane
    n = len(zeros)

    def F(lam):
        lam = np.asarray(lam, dtype=complex)
        out = lam + 0.3 if n == 0 else np.ones_like(lam)
        for z in zeros:
            out = out * (lam - z)
        return out / (lam + 7.0) ** max(n - 1, 0)

    tr = S.count_unstable(F, 1.0)
    assert tr.Z == expected
    assert abs(tr.Z_raw - expected) < 1e-3


def test_count_unstable_with_indent_excludes_origin():
    def F(lam):
        lam = np.asarray(lam, dtype=complex)
        return lam * (lam - 1.5) / (lam + 4.0)

    assert S.count_unstable(F, 1.0, indent=1e-6).Z == 1


def test_count_rejects_zero_tail():
    with pytest.raises(ValueError):
        S.count_unstable(lambda l: l, 0.0)


def test_trace_phase_ends_at_odd_multiple_of_pi():
    tr = S.stability_count(S.Mode(0.0), P(-2.0), 1)
    assert tr.Z == 1
    total = tr.phase[-1]
    assert abs(total - (2 * tr.Z - 1) * math.pi) < 1e-3 * 2 * math.pi


def test_trace_csv(tmp_path):
    tr = S.stability_count(S.Mode.from_q(1, 0), P(-0.5), 1)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda_I,ReF,ImF,arg_unwrapped"
    assert len(lines) == len(tr.lam) + 1


# -- modes ------------------------------------------------------------------


def test_mode_validation():
    with pytest.raises(ValueError):
        S.Mode(-1.0)
    with pytest.raises(ValueError):
        S.Mode(1.0, k=-1)
    with pytest.raises(ValueError):
        S.Mode(1.0, k=2).check(1)
    m = S.Mode.from_q(2, 1, rho=0.5)
    assert m.omega == pytest.approx(8 * math.pi) and m.q == 2


@pytest.mark.parametrize("N", [1, 2, 3])
def test_alternating_sum_of_modes(N):
    for k in range(2 * N):
        g = circulant_eigenvector(k, N)
        alt = np.sum((-1.0) ** np.arange(2 * N) * g)
        if k == N:
            assert abs(alt) == pytest.approx(2 * N)
            assert S.volume_defect(k, N) != 0
        else:
            assert abs(alt) < 1e-12
            assert S.volume_defect(k, N) == pytest.approx(0, abs=1e-12)


def test_mu_branch():
    m = S.mu(1j * 3.0, 2.0, 1.0)
    assert m.real >= 0
    assert abs(m * m - (4.0 + 3j)) < 1e-12


# -- dispersion functions ----------------------------------------------------


def test_stationary_requires_positive_omega():
    with pytest.raises(ValueError):
        S.f_stationary(1.0, S.Mode(0.0), P(-2.0), 1)


@pytest.mark.parametrize("mode,traveling", [(S.Mode(3.0, 0), False), (S.Mode(3.0, 1), True), (S.Mode(12.0, 0), True)])
def test_linear_asymptote(mode, traveling):
    params = P(-2.5)
    F = S.dispersion(mode, params, 1, traveling)
    c = S.tail_coefficient(mode, 1)
    # corrections decay like |lam|^(-1/2)
    for lam in (1e10j, -1e10j, 3e10j):
        assert abs(F(lam) / (c * lam) - 1) < 1e-3


def test_zero_mode_tail():
    lam = 1e8j
    assert abs(S.zero_mode_stationary(lam, -2.0, 1.0, 2) / lam - 1 / 8) < 1e-3


def test_traveling_translation_mode_is_neutral():
    F = S.dispersion(S.Mode(0.0, 0), P(-2.0), 1, traveling=True)
    assert abs(F(1e-12)) < 1e-8


@pytest.mark.parametrize("traveling", [False, True])
def test_conjugation_pairs_k_with_2N_minus_k(traveling):
    N, lam = 2, 2.0 + 7.0j
    for k in range(2 * N):
        Fk = S.dispersion(S.Mode(5.0, k), P(-3.0), N, traveling)
        Fp = S.dispersion(S.Mode(5.0, (2 * N - k) % (2 * N)), P(-3.0), N, traveling)
        assert abs(Fk(np.conj(lam)) - np.conj(Fp(lam))) < 1e-12 * abs(Fk(lam))
        if traveling:
            assert S.self_conjugate(S.Mode(5.0, k), N) == (k in (0, N))
        else:
            # mirror symmetry makes every stationary mode self-conjugate
            assert abs(Fk(lam) - Fp(lam)) < 1e-12 * abs(Fk(lam))


def test_threshold_for_non_self_conjugate_mode():
    # travelling N = 2, k = 1: a single eigenvalue crosses
    mode = S.Mode(30.0, 1)
    res = S.find_threshold(mode, 1.0, 2, traveling=True)
    assert res.converged and res.residual < 1e-10
    above = S.stability_count(mode, P(res.theta_star + 1e-4), 2, traveling=True).Z
    below = S.stability_count(mode, P(res.theta_star - 1e-4), 2, traveling=True).Z
    assert below == above + 1


def test_stationary_zero_mode_counts():
    assert S.stability_count(S.Mode(0.0), P(-0.5), 1).Z == 0
    assert S.stability_count(S.Mode(0.0), P(-2.0), 1).Z == 1


def test_stationary_q1_counts():
    m = S.Mode.from_q(1, 0)
    assert S.stability_count(m, P(-0.5), 1).Z == 0
    assert S.stability_count(m, P(-2.0), 1).Z == 0
    assert S.stability_count(m, P(-4.0), 1).Z == 2


@pytest.mark.parametrize("theta,tau,N,k", [(-2.0, 1.0, 2, 1), (-4.0, 0.5, 2, 3), (-0.9, 1.0, 2, 1), (-3.0, 2.0, 3, 2)])
def test_stationary_omega_zero_nonzero_k(theta, tau, N, k):
    mode, params = S.Mode(0.0, k), P(theta, tau)
    # continuous in omega -> 0+
    lam = 2.0 + 3.0j
    assert abs(S.f_stationary(lam, S.Mode(1e-7, k), params, N) - S.f_stationary(lam, mode, params, N)) < 1e-10
    F = S.dispersion(mode, params, N, False)
    roots = oracles.newton_roots(F, re_max=2000, im_max=2000, n=24)
    assert S.stability_count(mode, params, N).Z == len(roots)


def test_zero_mode_real_root_matches_oracle():
    roots = oracles.newton_roots(lambda l: S.zero_mode_stationary(l, -2.0, 1.0, 1), re_max=30, im_max=10, n=12)
    assert len(roots) == 1 and abs(roots[0].imag) < 1e-8


@pytest.mark.parametrize(
    "theta,tau,N,q,k,traveling",
    [
        (-3.0, 1.0, 1, 1, 0, False),
        (-5.0, 0.5, 1, 2, 1, False),
        (-1.5, 2.0, 2, 1, 2, False),
        (-3.0, 1.0, 1, 1, 0, True),
    ],
)
def test_winding_matches_newton_oracle(theta, tau, N, q, k, traveling):
    mode = S.Mode.from_q(q, k)
    params = P(theta, tau)
    Z = S.stability_count(mode, params, N, traveling=traveling).Z
    F = S.dispersion(mode, params, N, traveling)
    roots = oracles.newton_roots(F, re_max=6000, im_max=6000, n=24)
    assert Z == len(roots)


# -- thresholds --------------------------------------------------------------


def test_stationary_threshold_q1():
    mode = S.Mode.from_q(1, 0)
    res = S.find_threshold(mode, 1.0, 1)
    assert res.converged and res.residual < 1e-10
    assert res.theta_star == pytest.approx(-2.3747, abs=1e-3)
    F = S.dispersion(mode, P(res.theta_star), 1, False)
    assert abs(F(1j * res.lambda_star)) < 1e-8
    assert S.stability_count(mode, P(res.theta_star + 0.01), 1).Z == 0
    assert S.stability_count(mode, P(res.theta_star - 0.01), 1).Z == 2


def test_threshold_seeded_matches_unseeded():
    mode = S.Mode.from_q(2, 0)
    a = S.find_threshold(mode, 1.0, 1)
    b = S.find_threshold(mode, 1.0, 1, seed=(a.theta_star - 0.05, a.lambda_star * 1.05))
    assert b.theta_star == pytest.approx(a.theta_star, abs=1e-9)


def test_threshold_not_found_raises():
    with pytest.raises(S.ThresholdError):
        S.find_threshold(S.Mode(2.0, 0), 1.0, 1, traveling=True, theta_range=(-1.0, -4.0))


def test_threshold_scan_sorted_and_parallel_identical():
    kw = dict(tau_grid=[1.0, 0.5], omega_grid=[2 * math.pi * 2, 2 * math.pi], k_set=[0, 1], N=1)
    t1 = S.threshold_scan(**kw, jobs=1)
    t2 = S.threshold_scan(**kw, jobs=2)
    keys = [(r.tau, r.omega, r.k) for r in t1.rows]
    assert keys == sorted(keys)
    assert np.array_equal(t1.column("theta_star"), t2.column("theta_star"), equal_nan=True)
    conv = [r for r in t1.rows if r.converged]
    assert conv and all(r.residual < 1e-10 for r in conv)


def test_threshold_table_outputs(tmp_path):
    t = S.threshold_scan([1.0], [2 * math.pi], [0], 1)
    t.write_csv(tmp_path / "t.csv")
    t.write_summary(tmp_path / "s.json")
    head = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert head.startswith("tau,omega,k,N,theta_star")
    assert '"n_rows": 1' in (tmp_path / "s.json").read_text()
