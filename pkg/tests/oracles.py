"""Independent reference computations for the tests.

None of these reuse the closed forms in the package: the speed root is found
by plain bisection in extended precision, the kernels come from the matrix
exponential of the ODE's first-order system, profile conditions are checked
through exact local fits, and unstable eigenvalues are located by brute-force
Newton iteration from a grid of seeds.
"""
import math

import mpmath as mp
import numpy as np
from scipy.linalg import expm


def bisect_xi(theta, digits=40):
    """Positive root of xi + theta tanh(xi) = 0 by bisection (0 if none)."""
    if theta >= -1:
        return 0.0
    with mp.workdps(digits):
        th = mp.mpf(theta)
        lo, hi = mp.mpf("1e-30"), -th
        for _ in range(200):
            mid = (lo + hi) / 2
            if mid + th * mp.tanh(mid) > 0:
                hi = mid
            else:
                lo = mid
        return float((lo + hi) / 2)


def _system(a, b):
    # G'' + a G' - b^2 G = 0 as y' = A y with y = (G, G')
    return np.array([[0.0, 1.0], [b * b, -a]], dtype=complex)


def periodic_green(x, a, b, jump):
    """1-periodic solution on (0, 1) with y(0+) - y(1-) = jump, y = (G, G')."""
    A = _system(a, b)
    Phi = expm(A)
    y0 = np.linalg.solve(np.eye(2) - Phi, np.asarray(jump, dtype=complex))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([(expm(A * xi) @ y0)[0] for xi in x])


def dense_kernel_matrices(a, b, N):
    """(-1)^{m+n} G(x_m - x_n mod 1) for both kernels, G_II at 0 taken as 0+."""
    n = 2 * N
    d = np.arange(n) / n
    gI = periodic_green(d, a, b, (0.0, 1.0))
    gII = periodic_green(d, a, b, (1.0, 0.0))
    idx = np.subtract.outer(np.arange(n), np.arange(n)) % n
    sign = (-1.0) ** np.add.outer(np.arange(n), np.arange(n))
    return sign * gI[idx], sign * gII[idx]


def local_fit(f, lo, hi, rate, frac=(0.3, 0.7)):
    """Fit f = A + B exp(rate x) (or A + B x when rate == 0) from two interior
    points of (lo, hi).  Returns (fit, dfit) callables."""
    x1, x2 = lo + frac[0] * (hi - lo), lo + frac[1] * (hi - lo)
    f1, f2 = float(f(x1)), float(f(x2))
    if rate == 0:
        B = (f2 - f1) / (x2 - x1)
        A = f1 - B * x1
        return (lambda x: A + B * x), (lambda x: B)
    # shift the exponential to the interval start to avoid overflow
    e1, e2 = math.exp(rate * (x1 - lo)), math.exp(rate * (x2 - lo))
    B = (f2 - f1) / (e2 - e1)
    A = f1 - B * e1
    return (lambda x: A + B * math.exp(rate * (x - lo))), (lambda x: B * rate * math.exp(rate * (x - lo)))


def three_point_defect(f, x, h, rate):
    """Vanishes (up to roundoff) exactly when g = A + B exp(rate x) near x."""
    r = math.exp(rate * h)
    return (f(x + h) - f(x)) - r * (f(x) - f(x - h))


def _polish(F, seeds, tol, dedup, maxiter):
    roots = []
    for z in seeds:
        z = complex(z)
        ok = False
        for _ in range(maxiter):
            try:
                fz = complex(F(z))
                h = 1e-7 * (1 + abs(z))
                dz = (complex(F(z + h)) - complex(F(z - h))) / (2 * h)
            except (ArithmeticError, ValueError):
                break
            if not np.isfinite(fz) or dz == 0 or not np.isfinite(dz):
                break
            step = fz / dz
            z = z - step
            if z.real <= 0:
                break
            if abs(step) < tol * (1 + abs(z)):
                ok = True
                break
        if ok and z.real > 1e-8:
            scale = max(1.0, abs(complex(F(z + 1))))
            if abs(complex(F(z))) < 1e-8 * scale and all(abs(z - r) > dedup * (1 + abs(r)) for r in roots):
                roots.append(z)
    return roots


def newton_roots(F, re_max=50.0, im_max=50.0, n=30, tol=1e-10, dedup=1e-6, maxiter=80):
    """Distinct zeros with Re > 0 found by secant-Newton from an n x n seed grid
    over (0, re_max] x [-im_max, im_max]."""
    seeds = [complex(re, im) for re in np.linspace(re_max / n, re_max, n) for im in np.linspace(-im_max, im_max, n)]
    return _polish(F, seeds, tol, dedup, maxiter)


def newton_roots_logpolar(F, r_min=0.1, r_max=1e6, n_r=40, n_phi=15, tol=1e-10, dedup=1e-6, maxiter=100):
    """Like newton_roots, with seeds on a log-polar grid of the right half-plane
    so that roots of very different magnitude are all reached."""
    r = np.geomspace(r_min, r_max, n_r)
    phi = np.linspace(-0.48 * np.pi, 0.48 * np.pi, n_phi)
    seeds = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
    return _polish(F, seeds, tol, dedup, maxiter)


def trapezoid_periodic(f, n):
    x = np.arange(n) / n
    return float(np.mean(f(x)))


def profile_residuals(profile, h=1e-3):
    """Largest defect of each travelling-profile condition.

    One-sided limits at the fronts come from exact fits on the neighbouring
    intervals, so the defects are at roundoff level for a correct profile.
    """
    N, tau, theta, c0 = profile.N, profile.tau, profile.theta, profile.c0
    rate = -tau * c0
    nodes = np.arange(2 * N + 1) / (2 * N)
    fits_v, fits_w = [], []
    ode_v = ode_w = 0.0
    for j in range(1, 2 * N + 1):
        lo, hi = nodes[j - 1], nodes[j]
        fits_v.append(local_fit(profile.v0, lo, hi, rate))
        fits_w.append(local_fit(profile.w0, lo, hi, 0.0))
        for x in np.linspace(lo, hi, 7)[1:-1]:
            hh = min(h, (x - lo) / 2, (hi - x) / 2)
            ode_v = max(ode_v, abs(three_point_defect(lambda s: float(profile.v0(s)), x, hh, rate)))
            ode_w = max(ode_w, abs(three_point_defect(lambda s: float(profile.w0(s)), x, hh, 0.0)))
    res = dict(w_ode=ode_w, v_ode=ode_v, pin=0.0, jump_w=0.0, jump_v=0.0, jump_dw=0.0, jump_dv=0.0)
    for n in range(1, 2 * N + 1):
        xn = nodes[n]
        # interval n lies left of x_n, interval n+1 (periodically) to its right
        lv, ldv = fits_v[n - 1]
        lw, ldw = fits_w[n - 1]
        rv, rdv = fits_v[n % (2 * N)]
        rw, rdw = fits_w[n % (2 * N)]
        xr = xn if n < 2 * N else 0.0
        res["pin"] = max(res["pin"], abs(lw(xn) - theta * lv(xn)))
        res["jump_w"] = max(res["jump_w"], abs(rw(xr) - lw(xn)))
        res["jump_v"] = max(res["jump_v"], abs(rv(xr) - lv(xn)))
        res["jump_dw"] = max(res["jump_dw"], abs((rdw(xr) - ldw(xn)) - 2 * (-1) ** (n + 1) * c0))
        res["jump_dv"] = max(res["jump_dv"], abs((rdv(xr) - ldv(xn)) - 2 * (-1) ** n * c0))
    from scipy.integrate import quad

    mean = sum(quad(lambda s: float(profile.v0(s)), nodes[j], nodes[j + 1], epsabs=1e-14, epsrel=1e-13)[0] for j in range(2 * N))
    res["mean_v"] = abs(mean)
    return res
