"""Linear stability of periodic wave-trains via the argument principle.

A perturbation is labelled by a transverse wavenumber omega and a circulant
index k over the 2N front displacements.  For each (omega, k) the growth
rates lambda are the zeros of a scalar dispersion function F(lambda) that
has no poles in the right half-plane, so the number of unstable zeros is

    Z = 1/2 + (change of arg F along the imaginary axis, +i inf -> -i inf) / 2 pi.

The change of argument is accumulated from adaptively refined samples, and
the tails beyond a cut-off are taken from the known linear asymptote.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kernels import zeta_pair
from .wavetrain import GAMMA, ModelParams, solve_xi

MAX_PHASE_STEP = np.pi / 2
# refinement target; strictly tighter than the contract so that no swing
# through the origin can hide between two samples
_REFINE_STEP = np.pi / 8
MIN_STEP = 1e-12
ASYMPTOTE_RTOL = 1e-4


class ContourError(ArithmeticError):
    """The contour could not be resolved (a zero sits on or next to it)."""


class ThresholdError(RuntimeError):
    """No threshold was found or the solver did not converge."""


@dataclass(frozen=True)
class Mode:
    """Perturbation mode: transverse wavenumber ``omega`` and circulant index ``k``."""

    omega: float
    k: int = 0
    q: Optional[float] = None

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("k must be a nonnegative integer")

    @classmethod
    def from_q(cls, q, k=0, rho=1.0):
        """Mode with omega = 2 pi q / rho."""
        if q < 0:
            raise ValueError("q must be nonnegative")
        return cls(omega=2 * math.pi * q / rho, k=k, q=q)

    def check(self, N):
        if self.k > 2 * N - 1:
            raise ValueError("k must lie in 0..2N-1")


def volume_defect(k, N):
    """Alternating sum of the components of g_k; the omega = 0 mode is
    volume preserving only when this vanishes (every k except k = N)."""
    g = np.exp(1j * np.pi * k * np.arange(2 * N) / N)
    return np.sum((-1.0) ** np.arange(2 * N) * g)


def mu(lam, omega, tau):
    """Principal sqrt(omega^2 + tau lambda) (nonnegative real part)."""
    return np.sqrt(omega**2 + tau * np.asarray(lam, dtype=complex))


def _zeta_small_b(k, N):
    # a = 0, b -> 0 limits of the two eigenvalues (k != N)
    c = math.cos(math.pi * k / N)
    if abs(1 + c) < 1e-14:
        raise ValueError("k = N is not volume preserving at omega = 0")
    z1 = -1.0 / (4 * N * (1 + c))
    z2 = 0.5 * (1 + np.exp(1j * math.pi * k / N)) / (1 + c)
    return z1, z2


def _outer_zetas(mode, N):
    if mode.omega == 0:
        return _zeta_small_b(mode.k, N)
    return zeta_pair(mode.k, 0.0, mode.omega, N)


def f_stationary(lam, mode: Mode, params: ModelParams, N: int):
    """Dispersion function of the stationary train.

    omega = 0 is admitted for k not in (0, N), where the outer kernel has a
    finite small-b limit; the k = 0 zero mode has its own expression.
    """
    mode.check(N)
    if mode.omega == 0 and mode.k in (0, N):
        raise ValueError("omega = 0 needs k not in (0, N); use zero_mode_stationary for k = 0")
    lam = np.asarray(lam, dtype=complex)
    z_om = _outer_zetas(mode, N)[0]
    z_mu, _ = zeta_pair(mode.k, 0.0, mu(lam, mode.omega, params.tau), N)
    return 0.5 * GAMMA * mode.omega**2 - lam * z_om - lam * params.theta * z_mu


def _tanhc(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-2
    z2 = z * z
    series = 1 - z2 / 3 + 2 * z2 * z2 / 15 - 17 * z2**3 / 315
    with np.errstate(invalid="ignore", divide="ignore"):
        full = np.tanh(z) / np.where(small, 1.0, z)
    return np.where(small, series, full)


def zero_mode_stationary(lam, theta, tau, N):
    """(lambda/4N) (1 + theta tanh(z)/z) with z = sqrt(tau lambda)/4N."""
    lam = np.asarray(lam, dtype=complex)
    z = np.sqrt(tau * lam) / (4 * N)
    return lam / (4 * N) * (1 + theta * _tanhc(z))


def f_traveling(lam, mode: Mode, params: ModelParams, N: int, c0: Optional[float] = None):
    """Dispersion function of the travelling train.

    ``c0`` defaults to the wave-train speed for ``params``.  omega = 0 is
    admitted (using the b -> 0 limits of the outer kernel spectra) except
    for k = N, which is not volume preserving.
    """
    mode.check(N)
    tau, theta = params.tau, params.theta
    if c0 is None:
        c0 = 4 * N * solve_xi(theta) / tau
    lam = np.asarray(lam, dtype=complex)
    a = tau * c0
    z1_om, z2_om = _outer_zetas(mode, N)
    z1_mu, z2_mu = zeta_pair(mode.k, a, mu(lam, mode.omega, tau), N)
    E = math.exp(a / (2 * N))
    jump = c0 * (1 + (1 + 2 * theta) * E) / (1 + E)
    return (
        -lam * z1_om
        - theta * (lam + tau * c0**2) * z1_mu
        + c0 * z2_om
        + theta * c0 * z2_mu
        + 0.5 * GAMMA * mode.omega**2
        - 0.5 * jump
    )


def tail_coefficient(mode: Mode, N: int) -> complex:
    """Coefficient c of the large-|lambda| asymptote F ~ c lambda."""
    if mode.omega == 0:
        return complex(-_zeta_small_b(mode.k, N)[0])
    return complex(-zeta_pair(mode.k, 0.0, mode.omega, N)[0])


@dataclass
class DispersionTrace:
    """Sampled F along the (possibly indented) imaginary axis, top to bottom.

    ``phase`` is the accumulated change of arg F measured from +i infinity,
    so its last entry is the full change down to -i infinity.
    """

    lam: np.ndarray
    F: np.ndarray
    phase: np.ndarray
    Z_raw: float
    Z: int
    tail_cut: float
    tail_top: float = 0.0
    tail_bottom: float = 0.0

    @property
    def lambda_I(self):
        return self.lam.imag

    @property
    def unwrapped_phase(self):
        return float(self.phase[-1])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda_I", "ReF", "ImF", "arg_unwrapped"])
            for lam, F, ph in zip(self.lam, self.F, self.phase):
                writer.writerow([format(v, ".17g") for v in (lam.imag, F.real, F.imag, ph)])


def _refine(path: Callable, f: Callable, t: np.ndarray):
    """Bisect parameter steps until every phase increment is small."""
    t = np.asarray(t, dtype=float)
    F = f(path(t))
    while True:
        if np.any(F == 0) or not np.all(np.isfinite(F)):
            raise ContourError("dispersion function vanishes or is not finite on the contour")
        dphi = np.angle(F[1:] / F[:-1])
        bad = np.abs(dphi) >= _REFINE_STEP
        if not bad.any():
            return t, F
        dt = np.abs(np.diff(t))
        tiny = dt < MIN_STEP * np.maximum(np.abs(t[:-1]), 1.0)
        if np.any(bad & tiny & (np.abs(dphi) >= MAX_PHASE_STEP)):
            raise ContourError("phase refinement hit the minimum step; zero on the contour?")
        bad &= ~tiny
        if not bad.any():
            return t, F
        mids = 0.5 * (t[:-1][bad] + t[1:][bad])
        Fm = f(path(mids))
        idx = np.nonzero(bad)[0] + 1
        t = np.insert(t, idx, mids)
        F = np.insert(F, idx, Fm)


def _choose_cut(f, c, lambda_max):
    lam_cut = max(float(lambda_max), 10.0)
    for _ in range(80):
        pts = np.array([1j * lam_cut, -1j * lam_cut, 2j * lam_cut, -2j * lam_cut])
        Fv = f(pts)
        dev = np.abs(Fv - c * pts) / np.abs(Fv)
        if np.all(dev < ASYMPTOTE_RTOL):
            return lam_cut
        lam_cut *= 4.0
    raise ContourError("dispersion function never reached its linear asymptote")


def count_unstable(
    f: Callable,
    tail_coefficient: complex,
    lambda_max: float = 100.0,
    indent: Optional[float] = None,
    samples: int = 400,
    half: bool = False,
) -> DispersionTrace:
    """Count zeros of ``f`` in the open right half-plane.

    ``f`` must be vectorised over complex lambda and pole-free for
    Re lambda >= 0; ``tail_coefficient`` is c in F ~ c lambda.  The cut-off
    Lambda starts at ``lambda_max`` and grows until F matches its asymptote
    to 1e-4 relative.  ``indent`` replaces the segment |lambda| < indent by a
    right half-plane semicircle, excluding a neutral zero at the origin.
    ``half`` uses conjugate symmetry F(conj lam) = conj F(lam) and samples
    only the upper half.
    """
    c = complex(tail_coefficient)
    if c == 0:
        raise ValueError("tail coefficient must be nonzero")
    lam_cut = _choose_cut(f, c, lambda_max)
    r0 = indent if indent else 0.0
    # sinh-spaced parameter along each half axis: dense near 0, log-like far out
    scale = 1e-3 if not indent else min(1e-3, indent)
    T = math.asinh((lam_cut - r0) / scale)
    t_half = np.linspace(T, 0.0, samples)

    def upper(t):
        return 1j * (r0 + scale * np.sinh(t))

    def lower(t):
        return -1j * (r0 + scale * np.sinh(t))

    tu, Fu = _refine(upper, f, t_half)
    pieces_lam = [upper(tu)]
    pieces_F = [Fu]
    if not half:
        if indent:
            phis = np.linspace(np.pi / 2, -np.pi / 2, 33)

            def arc(p):
                return indent * np.exp(1j * p)

            pa, Fa = _refine(arc, f, phis)
            pieces_lam.append(arc(pa)[1:])
            pieces_F.append(Fa[1:])
        tl, Fl = _refine(lower, f, t_half[::-1])
        pieces_lam.append(lower(tl)[1:])
        pieces_F.append(Fl[1:])
    lam = np.concatenate(pieces_lam)
    F = np.concatenate(pieces_F)
    tail_top = float(np.angle(F[0] / (c * 1j)))
    steps = np.angle(F[1:] / F[:-1])
    if np.any(np.abs(steps) >= MAX_PHASE_STEP):
        raise ContourError("phase increment contract violated")
    phase = tail_top + np.concatenate([[0.0], np.cumsum(steps)])
    if half:
        if indent:
            raise ValueError("half-trace counting does not support indentation")
        if abs(F[-1].imag) > 1e-9 * max(1.0, abs(F[-1])):
            raise ContourError("F(0) is not real; conjugate symmetry fails")
        total = 2 * phase[-1]
        tail_bottom = tail_top
    else:
        tail_bottom = float(np.angle((-1j * c) / F[-1]))
        total = phase[-1] + tail_bottom
        phase = np.append(phase, total)
        lam = np.append(lam, -1j * np.inf)
        F = np.append(F, -1j * c * np.inf)
    Z_raw = 0.5 + total / (2 * np.pi)
    Z = int(round(Z_raw))
    if abs(Z_raw - Z) > 1e-3:
        raise ContourError(f"winding count {Z_raw:.6f} is not close to an integer")
    if not half:
        lam = np.insert(lam, 0, 1j * np.inf)
        F = np.insert(F, 0, 1j * c * np.inf)
        phase = np.insert(phase, 0, 0.0)
    return DispersionTrace(lam, F, phase, Z_raw, Z, lam_cut, tail_top, tail_bottom)


def dispersion(mode: Mode, params: ModelParams, N: int, traveling: bool) -> Callable:
    """Return F(lambda) for the given train as a vectorised callable."""
    if traveling:
        c0 = 4 * N * solve_xi(params.theta) / params.tau
        return lambda lam: f_traveling(lam, mode, params, N, c0)
    if mode.omega == 0 and mode.k == 0:
        return lambda lam: zero_mode_stationary(lam, params.theta, params.tau, N)
    return lambda lam: f_stationary(lam, mode, params, N)


def stability_count(mode: Mode, params: ModelParams, N: int, traveling: bool = False, **kw):
    """Winding count for a wave-train mode, choosing asymptote and indentation.

    The travelling (omega, k) = (0, 0) mode carries the translational zero at
    lambda = 0 and is counted with a small right half-plane indentation.
    """
    f = dispersion(mode, params, N, traveling)
    if not traveling and mode.omega == 0:
        # F vanishes at lambda = 0 for every stationary omega = 0 mode
        c = 1.0 / (4 * N) if mode.k == 0 else tail_coefficient(mode, N)
        kw.setdefault("indent", 1e-6)
    else:
        c = tail_coefficient(mode, N)
        if traveling and mode.omega == 0 and mode.k == 0:
            kw.setdefault("indent", 1e-6)
    return count_unstable(f, c, **kw)


@dataclass
class ThresholdResult:
    theta_star: float
    lambda_star: float
    residual: float
    mode: Mode
    converged: bool = True
    iterations: int = 0


def _residual_fn(mode, tau, N, traveling):
    def F(theta, lam_i):
        params = ModelParams(epsilon=1.0, tau=tau, theta=theta)
        if traveling:
            return complex(f_traveling(1j * lam_i, mode, params, N))
        return complex(f_stationary(1j * lam_i, mode, params, N))

    return F


def _newton(F, theta, lam_i, tol=1e-12, maxiter=60, positive=True):
    """Damped Newton on (Re F, Im F) = 0 over (theta, lambda_I).

    Iterates stay in theta < -1 and, with ``positive``, lambda_I > 0.
    """
    x = np.array([theta, lam_i], dtype=float)

    def r(x):
        v = F(x[0], x[1])
        return np.array([v.real, v.imag])

    rx = r(x)
    for it in range(1, maxiter + 1):
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * (1 + abs(x[j]))
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (r(x + e) - r(x - e)) / (2 * h)
        try:
            dx = np.linalg.solve(J, -rx)
        except np.linalg.LinAlgError:
            return x, rx, it, False
        step = 1.0
        for _ in range(30):
            xn = x + step * dx
            if xn[0] < -1 and (xn[1] > 0 or not positive):
                rn = r(xn)
                if np.linalg.norm(rn) < np.linalg.norm(rx):
                    break
            step *= 0.5
        else:
            return x, rx, it, np.linalg.norm(rx) < tol
        x, rx = xn, rn
        if np.linalg.norm(rx) < tol:
            return x, rx, it, True
    return x, rx, maxiter, False


def self_conjugate(mode: Mode, N: int, traveling: bool = True) -> bool:
    """True when F(conj lam) = conj F(lam), so unstable eigenvalues come in
    conjugate pairs.

    Conjugation maps mode k to 2N - k.  The stationary train is also
    mirror symmetric, which identifies k with 2N - k, so all its modes
    qualify; for the travelling train only k = 0 and k = N do.
    """
    return not traveling or mode.k == 0 or mode.k == N


def _count(mode, theta, tau, N, traveling):
    params = ModelParams(epsilon=1.0, tau=tau, theta=theta)
    return stability_count(mode, params, N, traveling, half=self_conjugate(mode, N, traveling)).Z


def _lambda_seed(mode, theta, tau, N, traveling):
    """lambda_I where |F(i lambda_I)| is smallest along the trace (lambda_I > 0
    for self-conjugate modes)."""
    params = ModelParams(epsilon=1.0, tau=tau, theta=theta)
    sym = self_conjugate(mode, N, traveling)
    tr = stability_count(mode, params, N, traveling, half=sym)
    lam_i = tr.lam.imag
    Fv = tr.F
    keep = np.isfinite(lam_i) & np.isfinite(Fv) & ((lam_i > 0) if sym else (lam_i != 0))
    lam_i, Fv = lam_i[keep], Fv[keep]
    i = int(np.argmin(np.abs(Fv)))
    # golden-section polish of |F| on the neighbouring samples (same sign)
    lo = lam_i[min(i + 1, len(lam_i) - 1)]
    hi = lam_i[max(i - 1, 0)]
    if lo * lam_i[i] <= 0:
        lo = lam_i[i]
    if hi * lam_i[i] <= 0:
        hi = lam_i[i]
    f = _residual_fn(mode, tau, N, traveling)
    g = (math.sqrt(5) - 1) / 2
    a, b = min(lo, hi), max(lo, hi)
    for _ in range(60):
        c1 = b - g * (b - a)
        c2 = a + g * (b - a)
        if abs(f(theta, c1)) < abs(f(theta, c2)):
            b = c2
        else:
            a = c1
    return 0.5 * (a + b)


def _theta_sweep(theta_hi, theta_lo, n):
    # denser close to -1 where thresholds of small omega live
    u = np.linspace(0.0, 1.0, n)
    return theta_hi + (theta_lo - theta_hi) * u**2


def find_threshold(
    mode: Mode,
    tau: float,
    N: int,
    traveling: bool = False,
    theta_range=(-1.0, -60.0),
    sweep_points: int = 60,
    seed: Optional[tuple] = None,
) -> ThresholdResult:
    """Largest theta < -1 at which growth rates of this mode cross the
    imaginary axis away from the origin (a Hopf threshold).

    For self-conjugate modes (k = 0 or N) a complex pair crosses and the
    count rises by two; for other k a single eigenvalue crosses and
    ``lambda_star`` may be negative.

    With ``seed=(theta, lambda_I)`` Newton starts there directly (used for
    continuation); otherwise a theta sweep detects where the winding count
    rises by two, the bracket is narrowed by bisection on the count, and the
    crossing is polished by damped Newton.
    """
    if not mode.omega > 0:
        raise ValueError("thresholds are computed for omega > 0")
    mode.check(N)
    F = _residual_fn(mode, tau, N, traveling)
    sym = self_conjugate(mode, N, traveling)
    jump = 2 if sym else 1
    if seed is not None:
        x, rx, its, ok = _newton(F, seed[0], seed[1], positive=sym)
        if ok and (x[1] > 0 or not sym) and x[1] != 0:
            hi_ok = _count(mode, x[0] + 1e-3, tau, N, traveling)
            lo_ok = _count(mode, x[0] - 1e-3, tau, N, traveling)
            if lo_ok == hi_ok + jump and _no_earlier(mode, x[0], theta_range[0], tau, N, traveling, hi_ok):
                return ThresholdResult(float(x[0]), float(x[1]), float(np.linalg.norm(rx)), mode, True, its)
    theta_hi = theta_range[0] - 1e-6 if theta_range[0] >= -1 else theta_range[0]
    thetas = _theta_sweep(theta_hi, theta_range[1], sweep_points)
    z_prev = _count(mode, thetas[0], tau, N, traveling)
    bracket = None
    for th_prev, th in zip(thetas[:-1], thetas[1:]):
        z = _count(mode, th, tau, N, traveling)
        if z > z_prev:
            bracket = (th_prev, th, z_prev)
            break
        z_prev = z
    if bracket is None:
        raise ThresholdError(f"no crossing for omega={mode.omega}, k={mode.k} in theta range {theta_range}")
    hi, lo, z_hi = bracket
    for _ in range(40):
        mid = 0.5 * (hi + lo)
        if _count(mode, mid, tau, N, traveling) > z_hi:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * (1 + abs(hi)):
            break
    theta0 = 0.5 * (hi + lo)
    lam0 = _lambda_seed(mode, lo, tau, N, traveling)
    x, rx, its, ok = _newton(F, theta0, lam0, positive=sym)
    res = float(np.linalg.norm(rx))
    result = ThresholdResult(float(x[0]), float(x[1]), res, mode, bool(ok and res < 1e-10), its)
    if not result.converged:
        raise ThresholdError(f"Newton did not converge (last iterate {result})")
    return result


def _no_earlier(mode, theta_star, theta_top, tau, N, traveling, z_expected, n=12):
    # a continued threshold is only accepted if no crossing sits above it
    theta_hi = theta_top - 1e-6 if theta_top >= -1 else theta_top
    for th in np.linspace(theta_hi, theta_star + 1e-3, n):
        if _count(mode, th, tau, N, traveling) != z_expected:
            return False
    return True


@dataclass
class ThresholdRow:
    tau: float
    omega: float
    k: int
    N: int
    theta_star: float = math.nan
    lambda_star: float = math.nan
    residual: float = math.nan
    converged: bool = False
    note: str = ""


def _scan_branch(args):
    tau, omegas, k, N, traveling, theta_range = args
    rows = []
    seed = None
    for om in omegas:
        mode = Mode(omega=float(om), k=int(k))
        try:
            res = find_threshold(mode, tau, N, traveling, theta_range, seed=seed)
            rows.append(ThresholdRow(tau, float(om), int(k), N, res.theta_star, res.lambda_star, res.residual, True))
            seed = (res.theta_star, res.lambda_star)
        except (ThresholdError, ArithmeticError) as exc:
            rows.append(ThresholdRow(tau, float(om), int(k), N, note=str(exc).split("\n")[0][:80]))
            seed = None
    return rows


@dataclass
class ThresholdTable:
    rows: list
    traveling: bool
    theta_range: tuple
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "omega", "k", "N", "theta_star", "lambda_star", "residual", "converged"])
            for r in self.rows:
                writer.writerow(
                    [
                        format(r.tau, ".17g"),
                        format(r.omega, ".17g"),
                        r.k,
                        r.N,
                        format(r.theta_star, ".17g"),
                        format(r.lambda_star, ".17g"),
                        format(r.residual, ".17g"),
                        int(r.converged),
                    ]
                )

    def write_summary(self, path):
        taus = sorted({r.tau for r in self.rows})
        omegas = sorted({r.omega for r in self.rows})
        ks = sorted({r.k for r in self.rows})
        summary = dict(
            tau_grid=taus,
            omega_grid=omegas,
            k_set=ks,
            N=self.rows[0].N if self.rows else None,
            traveling=self.traveling,
            theta_range=list(self.theta_range),
            tolerances=dict(residual=1e-10, max_phase_step=MAX_PHASE_STEP, asymptote_rtol=ASYMPTOTE_RTOL),
            wall_time=self.wall_time,
            n_rows=len(self.rows),
            n_converged=int(sum(r.converged for r in self.rows)),
        )
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2)

    def monotonicity_breaks(self):
        """(tau, k, omega) where theta* stops being monotone along its branch."""
        breaks = []
        for tau in sorted({r.tau for r in self.rows}):
            for k in sorted({r.k for r in self.rows}):
                br = [r for r in self.rows if r.tau == tau and r.k == k and r.converged]
                d = np.sign(np.diff([r.theta_star for r in br]))
                for i in range(1, len(d)):
                    if d[i] != d[i - 1] and d[i] != 0:
                        breaks.append((tau, k, br[i].omega))
        return breaks


def threshold_scan(tau_grid, omega_grid, k_set, N, traveling=False, theta_range=(-1.0, -60.0), jobs=1):
    """Thresholds over a (tau, omega, k) grid with continuation along omega.

    Each (tau, k) branch is an independent job; rows come back sorted by
    (tau, omega, k) whatever the worker count.
    """
    if len(tau_grid) == 0 or len(omega_grid) == 0 or len(k_set) == 0:
        raise ValueError("grids must be nonempty")
    t0 = time.perf_counter()
    omegas = sorted(float(o) for o in omega_grid)
    tasks = [(float(tau), omegas, int(k), int(N), traveling, tuple(theta_range)) for tau in tau_grid for k in k_set]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_scan_branch, tasks))
    else:
        results = [_scan_branch(t) for t in tasks]
    rows = [r for branch in results for r in branch]
    rows.sort(key=lambda r: (r.tau, r.omega, r.k))
    return ThresholdTable(rows, traveling, tuple(theta_range), time.perf_counter() - t0)
