"""Pseudo-spectral IMEX solver for the nondimensional non-reciprocal CH model

    u_t = Lap w,     w = -eps Lap u + f(u)/eps + theta v,
    tau v_t = Lap(v + u/tau),

on the periodic rectangle [0, 1) x [0, rho) (or the unit interval when
``ny == 1``).  One step is first-order IMEX in Fourier space:

    (1 + dt k^2 (eps k^2 + S/eps)) u' = u - dt k^2 (f(u)/eps - S u/eps + theta v)
    (1 + dt k^2 / tau) v'            = v - dt k^2 u / tau^2

S is the stabilisation constant, measured in units of 1/eps so that S = 2
matches the slope f'(+-1) of the explicit term at the wells.  The zero
wavenumber is never modified, so mean(u) and mean(v) are conserved exactly.

With ``order=2`` the same splitting is used in stabilised SBDF2 form: the
left-hand factor 1 becomes 3/2, the right-hand side is 2 a^n - a^{n-1}/2 and
the explicit terms are extrapolated as 2 E^n - E^{n-1}.  The first step is
IMEX Euler.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft as sfft

from .stability import Mode
from .wavetrain import (
    GAMMA,
    ModelParams,
    build_profile,
    heteroclinic,
    potential,
    potential_derivative,
    signed_distance,
    tails_overlap,
)


class SimulationDiverged(RuntimeError):
    def __init__(self, t, max_u):
        super().__init__(f"simulation diverged at t={t:.6g} (max|u|={max_u:.3g})")
        self.t = t
        self.max_u = max_u


class TrackingError(RuntimeError):
    """Front or peak tracking lost lock."""


@dataclass(frozen=True)
class Perturbation:
    mode: Mode
    amplitude: float


def default_nx(epsilon):
    """Smallest power of two with at least five points per epsilon."""
    return 2 ** math.ceil(math.log2(5.0 / epsilon))


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    nx: int = 0
    ny: int = 1
    dt: float = 1e-6
    t_end: float = 0.1
    stabilization: float = 2.0
    dealias: bool = True
    output_every: int = 100
    n_fronts: int = 1
    perturbation: Optional[Perturbation] = None
    # relative shift of the interface part of v against u (breaks the
    # left/right symmetry of a stationary train)
    v_shift: float = 0.0
    # start from the stationary train (v0 = 0) even when theta < -1
    stationary_start: bool = False
    track_row: float = 0.4
    max_abs_u: float = 10.0
    # 1: IMEX Euler; 2: stabilised SBDF2 (first step by IMEX Euler)
    order: int = 1

    def __post_init__(self):
        if self.nx == 0:
            object.__setattr__(self, "nx", default_nx(self.params.epsilon))
        if self.nx < 2 or self.nx % 2:
            raise ValueError("nx must be a positive even integer")
        if self.ny != 1 and (self.ny < 2 or self.ny % 2):
            raise ValueError("ny must be 1 (1D) or a positive even integer")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.stabilization < 0:
            raise ValueError("stabilization must be nonnegative")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.dx > self.params.epsilon / 2:
            warnings.warn(f"grid spacing {self.dx:.3g} does not resolve epsilon={self.params.epsilon}", RuntimeWarning, stacklevel=3)

    @property
    def grid(self):
        return (self.nx, self.ny)

    @property
    def dx(self):
        return 1.0 / self.nx

    @property
    def dim(self):
        return 1 if self.ny == 1 else 2

    @property
    def area(self):
        return self.params.rho

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def coordinates(self):
        x = np.arange(self.nx) / self.nx
        if self.dim == 1:
            return x, None
        y = self.params.rho * np.arange(self.ny) / self.ny
        return x, y


@dataclass
class FieldState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self):
        return FieldState(self.u.copy(), self.v.copy(), self.t)


class _Operators:
    def __init__(self, cfg: SimConfig):
        p = cfg.params
        kx = 2 * np.pi * sfft.rfftfreq(cfg.nx, d=1.0 / cfg.nx)
        if cfg.dim == 1:
            self.axes = (-1,)
            self.shape = (cfg.nx,)
            kx2 = kx**2
            k2 = kx2
            self.kx = kx
            self.ky = None
            mask = np.abs(kx) <= (2.0 / 3.0) * np.abs(kx).max()
        else:
            self.axes = (-2, -1)
            self.shape = (cfg.ny, cfg.nx)
            ky = 2 * np.pi * sfft.fftfreq(cfg.ny, d=p.rho / cfg.ny)
            self.kx = kx[None, :]
            self.ky = ky[:, None]
            k2 = self.kx**2 + self.ky**2
            mask = (np.abs(self.kx) <= (2.0 / 3.0) * np.abs(kx).max()) & (
                np.abs(self.ky) <= (2.0 / 3.0) * np.abs(ky).max()
            )
        eps, tau, S = p.epsilon, p.tau, cfg.stabilization / p.epsilon
        dt = cfg.dt
        self.k2 = k2
        self.mask = mask.astype(float) if cfg.dealias else None
        self.du = 1.0 / (1.0 + dt * k2 * (eps * k2 + S))
        self.dv = 1.0 / (1.0 + dt * k2 / tau)
        self.du2 = 1.0 / (1.5 + dt * k2 * (eps * k2 + S))
        self.dv2 = 1.0 / (1.5 + dt * k2 / tau)
        self.zero = (0,) * len(self.axes)
        # explicit coefficients
        self.c_f = dt * k2 / eps
        self.c_S = dt * k2 * S
        self.c_th = dt * k2 * p.theta
        self.c_uv = dt * k2 / tau**2
        self.eps, self.tau, self.theta = eps, tau, p.theta

    def fft(self, a):
        return sfft.rfftn(a, axes=self.axes)

    def ifft(self, a):
        return sfft.irfftn(a, s=self.shape, axes=self.axes)

    def explicit(self, uh, vh, u):
        # dt k^2 (f/eps - S u/eps + theta v), and dt k^2 u/tau^2
        fh = self.fft(potential_derivative(u))
        if self.mask is not None:
            fh *= self.mask
        return self.c_f * fh - self.c_S * uh + self.c_th * vh, self.c_uv * uh

    def _keep_mean(self, new, old):
        new[self.zero] = old[self.zero]
        return new

    def advance(self, uh, vh, u):
        eu, ev = self.explicit(uh, vh, u)
        uh_new = self._keep_mean((uh - eu) * self.du, uh)
        vh_new = self._keep_mean((vh - ev) * self.dv, vh)
        return uh_new, vh_new, (eu, ev)

    def advance2(self, uh, vh, u, uh_old, vh_old, expl_old):
        eu, ev = self.explicit(uh, vh, u)
        uh_new = (2 * uh - 0.5 * uh_old - (2 * eu - expl_old[0])) * self.du2
        vh_new = (2 * vh - 0.5 * vh_old - (2 * ev - expl_old[1])) * self.dv2
        return self._keep_mean(uh_new, uh), self._keep_mean(vh_new, vh), (eu, ev)


@lru_cache(maxsize=16)
def _operators(cfg: SimConfig) -> _Operators:
    return _Operators(cfg)


def amplification_matrix(k2, cfg: SimConfig, ubar=0.0):
    """Exact one-step map of the scheme for a single Fourier mode about the
    uniform state (ubar, vbar), linearised in the perturbation."""
    p = cfg.params
    eps, tau, dt = p.epsilon, p.tau, cfg.dt
    S = cfg.stabilization / eps
    fp = 3 * ubar**2 - 1
    du = 1 + dt * k2 * (eps * k2 + S)
    dv = 1 + dt * k2 / tau
    return np.array(
        [
            [(1 - dt * k2 * (fp / eps - S)) / du, -dt * k2 * p.theta / du],
            [-dt * k2 / tau**2 / dv, 1 / dv],
        ]
    )


def linear_generator(k2, params: ModelParams, ubar=0.0):
    """Matrix M of the linearised PDE d/dt (u_k, v_k) = M (u_k, v_k)."""
    eps, tau = params.epsilon, params.tau
    fp = 3 * ubar**2 - 1
    return np.array(
        [
            [-k2 * (eps * k2 + fp / eps), -k2 * params.theta],
            [-k2 / tau**2, -k2 / tau],
        ]
    )


def _check_state(state, cfg):
    ops = _operators(cfg)
    if state.u.shape != ops.shape or state.v.shape != ops.shape:
        raise ValueError(f"state shape {state.u.shape} does not match grid {ops.shape}")
    return ops


def step(state: FieldState, cfg: SimConfig) -> FieldState:
    """Advance one IMEX Euler step of size ``cfg.dt`` (``cfg.order`` is
    ignored here; a single step has no history)."""
    ops = _check_state(state, cfg)
    uh, vh, _ = ops.advance(ops.fft(state.u), ops.fft(state.v), state.u)
    u = ops.ifft(uh)
    t = state.t + cfg.dt
    m = np.abs(u).max()
    if not m <= cfg.max_abs_u:
        raise SimulationDiverged(t, m)
    return FieldState(u, ops.ifft(vh), t)


def front_shifts(cfg: SimConfig, N: int, y):
    """x-displacement of each front (shape (ny, 2N)) for the configured perturbation.

    Front n moves along its normal by (-1)^n delta_n cos(omega y) with
    delta = amplitude * g_k, i.e. along x by amplitude cos(omega y + pi k (n-1)/N).
    """
    pert = cfg.perturbation
    n = np.arange(2 * N)
    if pert is None or pert.amplitude == 0:
        return None
    om, k = pert.mode.omega, pert.mode.k
    if y is None:
        y = np.zeros(1)
    q = om * cfg.params.rho / (2 * np.pi)
    if abs(q - round(q)) > 1e-9:
        warnings.warn("perturbation omega is not periodic in y", RuntimeWarning, stacklevel=2)
    return pert.amplitude * np.cos(om * np.asarray(y)[:, None] + np.pi * k * n[None, :] / N)


def init_wavetrain(cfg: SimConfig, N: Optional[int] = None) -> FieldState:
    """Composite sharp-interface wave-train sampled on the grid."""
    N = cfg.n_fronts if N is None else N
    p = cfg.params
    profile = build_profile(p, N)
    eps, tau = p.epsilon, p.tau
    if tails_overlap(eps, N):
        warnings.warn(f"interfaces overlap: epsilon={eps} too large for N={N}", RuntimeWarning, stacklevel=2)
    x, y = cfg.coordinates()
    shifts = front_shifts(cfg, N, y)
    if cfg.dim == 1:
        d = signed_distance(x, N) if shifts is None else signed_distance(x, N, shifts[0])
        dv = signed_distance(x - cfg.v_shift, N) if shifts is None else signed_distance(x - cfg.v_shift, N, shifts[0])
        v0 = profile.v0(x) if not cfg.stationary_start else np.zeros_like(x)
    else:
        X = np.broadcast_to(x[None, :], (cfg.ny, cfg.nx))
        if shifts is None:
            d = signed_distance(X, N)
            dv = signed_distance(X - cfg.v_shift, N)
        else:
            sh = shifts[:, None, :]
            d = signed_distance(X, N, sh)
            dv = signed_distance(X - cfg.v_shift, N, sh)
        v0 = np.broadcast_to(profile.v0(x)[None, :], X.shape) if not cfg.stationary_start else np.zeros(X.shape)
    u = heteroclinic(d / eps)
    v = v0 - heteroclinic(dv / eps) / tau
    return FieldState(np.ascontiguousarray(u, dtype=float), np.ascontiguousarray(v, dtype=float), 0.0)


def extrude(state: FieldState, cfg: SimConfig, n_fronts: Optional[int] = None) -> FieldState:
    """Lift a 1D state onto the 2D grid of ``cfg``, displacing its fronts by
    the configured perturbation.

    Front n (the zero crossings of u, in order) moves along x by
    amplitude cos(omega y + pi k (n-1)/N); between fronts the displacement is
    interpolated linearly, and the 1D fields are resampled with periodic
    cubic splines.
    """
    from scipy.interpolate import CubicSpline

    if cfg.dim != 2:
        raise ValueError("extrude needs a 2D configuration")
    u1, v1 = np.asarray(state.u), np.asarray(state.v)
    if u1.ndim != 1:
        raise ValueError("extrude needs a 1D state")
    N = cfg.n_fronts if n_fronts is None else n_fronts
    n1 = u1.size
    x1 = np.arange(n1 + 1) / n1
    us = CubicSpline(x1, np.append(u1, u1[0]), bc_type="periodic")
    vs = CubicSpline(x1, np.append(v1, v1[0]), bc_type="periodic")
    x, y = cfg.coordinates()
    X = np.broadcast_to(x[None, :], (cfg.ny, cfg.nx))
    shifts = front_shifts(cfg, N, y)
    if shifts is None:
        Xs = X
    else:
        fronts = zero_crossings(u1)
        if fronts.size != 2 * N:
            raise ValueError(f"expected {2 * N} fronts, found {fronts.size}")
        # front 1 is where u leaves the + phase; unwrap the rest after it
        down = u1[(np.floor(fronts * n1).astype(int) + 1) % n1] < 0
        f1 = fronts[int(np.argmax(down))]
        fronts = f1 + np.sort(np.mod(fronts - f1, 1.0))
        nodes = np.concatenate([fronts[-1:] - 1.0, fronts, fronts[:1] + 1.0])
        xr = f1 + np.mod(x - f1, 1.0)
        s = np.empty_like(X)
        for j in range(cfg.ny):
            vals = np.concatenate([shifts[j, -1:], shifts[j], shifts[j, :1]])
            s[j] = np.interp(xr, nodes, vals)
        Xs = X - s
    Xs = np.mod(Xs, 1.0)
    return FieldState(us(Xs), vs(Xs), state.t)


def chemical_potential(state: FieldState, cfg: SimConfig):
    ops = _operators(cfg)
    p = cfg.params
    lap_u = ops.ifft(-ops.k2 * ops.fft(state.u))
    return -p.epsilon * lap_u + potential_derivative(state.u) / p.epsilon + p.theta * state.v


def _grad_sq(a, ops):
    ah = ops.fft(a)
    g = ops.ifft(1j * ops.kx * ah) ** 2
    if ops.ky is not None:
        g = g + ops.ifft(1j * ops.ky * ah) ** 2
    return g


def energy(state: FieldState, cfg: SimConfig) -> float:
    """Energy with vt = tau sqrt(theta) v; NaN unless theta > 0.

    E = int eps/2 |grad u|^2 + F(u)/eps + (vt + sqrt(theta) u)^2 / 2 tau - theta u^2 / 2 tau
    """
    p = cfg.params
    if not p.theta > 0:
        return math.nan
    ops = _operators(cfg)
    u = state.u
    vt = p.tau * math.sqrt(p.theta) * state.v
    dens = (
        0.5 * p.epsilon * _grad_sq(u, ops)
        + potential(u) / p.epsilon
        + (vt + math.sqrt(p.theta) * u) ** 2 / (2 * p.tau)
        - p.theta * u**2 / (2 * p.tau)
    )
    return float(np.mean(dens) * cfg.area)


def interface_length(state: FieldState, cfg: SimConfig) -> float:
    """|Gamma| from the diffuse interfacial energy: each unit of front length
    carries 2 gamma of eps/2 |grad u|^2 + F(u)/eps."""
    ops = _operators(cfg)
    eps = cfg.params.epsilon
    dens = 0.5 * eps * _grad_sq(state.u, ops) + potential(state.u) / eps
    return float(np.mean(dens) * cfg.area / (2 * GAMMA))


def lyapunov_proxy(state: FieldState, cfg: SimConfig) -> float:
    """|Gamma| + tau theta / (4 gamma) int v_s^2, with v_s = v + u/tau the
    sharp-interface field (the composite v subtracts Q/tau from it)."""
    p = cfg.params
    vs = state.v + state.u / p.tau
    return interface_length(state, cfg) + p.tau * p.theta / (4 * GAMMA) * float(np.mean(vs**2) * cfg.area)


def zero_crossings(row):
    """Positions in [0, 1) where a periodic sampled row changes sign (linear
    interpolation)."""
    n = row.size
    nxt = np.roll(row, -1)
    idx = np.nonzero((row == 0) | (np.sign(row) != np.sign(nxt)) & (nxt != 0))[0]
    frac = np.where(row[idx] == 0, 0.0, row[idx] / (row[idx] - nxt[idx]))
    return np.sort(np.mod((idx + frac) / n, 1.0))


def peak_positions(row, rel_height=0.5):
    """Local maxima of a periodic row, refined by a parabola through the
    discrete peak and its neighbours.  Only peaks above ``rel_height`` of the
    row's range count."""
    n = row.size
    lo, hi = row.min(), row.max()
    if hi - lo < 1e-9 * max(1.0, abs(hi)):
        return np.array([])
    left, right = np.roll(row, 1), np.roll(row, -1)
    idx = np.nonzero((row > left) & (row >= right) & (row > lo + rel_height * (hi - lo)))[0]
    denom = left[idx] - 2 * row[idx] + right[idx]
    off = np.where(denom != 0, 0.5 * (left[idx] - right[idx]) / denom, 0.0)
    return np.mod((idx + off) / n, 1.0)


def _nearest_periodic(candidates, prev):
    # unwrapped position of the candidate closest to the previous one
    d = np.mod(candidates - prev + 0.5, 1.0) - 0.5
    i = int(np.argmin(np.abs(d)))
    return prev + d[i], abs(d[i])


@dataclass
class Diagnostics:
    t: list = field(default_factory=list)
    mass_u: list = field(default_factory=list)
    mass_v: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    lyapunov_proxy: list = field(default_factory=list)
    front_positions: list = field(default_factory=list)
    peak_track: list = field(default_factory=list)
    crossing_track: list = field(default_factory=list)
    lost_lock: list = field(default_factory=list)
    crossing_lost: list = field(default_factory=list)
    row_spread: list = field(default_factory=list)

    def as_arrays(self):
        return {k: np.asarray(v) for k, v in asdict(self).items()}

    def write_csv(self, path, n_fronts):
        fronts = [f"front_{i + 1}" for i in range(2 * n_fronts)]
        speeds = _running_speed(self)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "mass_u", "mass_v", "energy", "lyapunov_proxy", *fronts, "speed_estimate", "w_peak", "front_spread"])
            for i in range(len(self.t)):
                fp = list(self.front_positions[i])
                fp = (fp + [math.nan] * len(fronts))[: len(fronts)]
                vals = [self.t[i], self.mass_u[i], self.mass_v[i], self.energy[i], self.lyapunov_proxy[i], *fp, speeds[i], self.peak_track[i], self.row_spread[i]]
                writer.writerow([format(float(v), ".17g") for v in vals])


def _running_speed(diag):
    t = np.asarray(diag.t)
    track = np.asarray(diag.peak_track if np.all(np.isfinite(diag.peak_track)) else diag.crossing_track)
    out = np.full(t.size, math.nan)
    for i in range(2, t.size):
        out[i] = np.polyfit(t[: i + 1], track[: i + 1], 1)[0]
    return out


def _track_row_index(cfg):
    return 0 if cfg.dim == 1 else int(round(cfg.track_row * cfg.ny)) % cfg.ny


def diagnostics_update(state: FieldState, diag: Diagnostics, cfg: SimConfig) -> Diagnostics:
    """Append mass, energy, Lyapunov proxy and front/peak positions for ``state``."""
    diag.t.append(state.t)
    diag.mass_u.append(float(np.mean(state.u)))
    diag.mass_v.append(float(np.mean(state.v)))
    diag.energy.append(energy(state, cfg))
    diag.lyapunov_proxy.append(lyapunov_proxy(state, cfg))
    r = _track_row_index(cfg)
    urow = state.u if cfg.dim == 1 else state.u[r]
    crossings = zero_crossings(urow)
    diag.front_positions.append(crossings)
    w = chemical_potential(state, cfg)
    peaks = peak_positions(w if cfg.dim == 1 else w[r])
    lost = False
    if diag.peak_track and np.isfinite(diag.peak_track[-1]) and peaks.size:
        pos, jump = _nearest_periodic(peaks, diag.peak_track[-1])
        lost = jump > 0.25
    elif peaks.size and not diag.peak_track:
        pos = float(peaks[np.argmax(np.interp(peaks * urow.size, np.arange(urow.size), w if cfg.dim == 1 else w[r]))])
    else:
        pos = math.nan
    diag.peak_track.append(pos)
    diag.lost_lock.append(bool(lost))
    clost = False
    if crossings.size:
        if diag.crossing_track and np.isfinite(diag.crossing_track[-1]):
            cpos, jump = _nearest_periodic(crossings, diag.crossing_track[-1])
            clost = jump > 0.25
        else:
            cpos = float(crossings[0])
    else:
        cpos = math.nan
    diag.crossing_track.append(cpos)
    diag.crossing_lost.append(bool(clost))
    diag.row_spread.append(front_spread(state, cfg))
    return diag


def front_spread(state: FieldState, cfg: SimConfig) -> float:
    """Largest over fronts of (max - min over rows) of the front's x position.

    Zero in 1D.  Rows are matched front-by-front to the tracking row.
    """
    if cfg.dim == 1:
        return 0.0
    ref = zero_crossings(state.u[_track_row_index(cfg)])
    if ref.size == 0:
        return math.nan
    pos = np.empty((cfg.ny, ref.size))
    for j in range(cfg.ny):
        c = zero_crossings(state.u[j])
        if c.size == 0:
            return math.nan
        for i, r in enumerate(ref):
            pos[j, i] = _nearest_periodic(c, r)[0]
    return float(np.max(pos.max(axis=0) - pos.min(axis=0)))


def _window(diag, t_min, lost, what):
    t = np.asarray(diag.t)
    sel = t >= t_min
    if sel.sum() < 10:
        raise ValueError("need at least 10 recorded positions after the transient cut")
    if np.any(np.asarray(lost, dtype=bool)[sel]):
        raise TrackingError(f"{what} tracking lost lock (jump > 0.25 between snapshots)")
    return t[sel], sel


def measure_speed(diag: Diagnostics, t_min: float = 0.0) -> float:
    """Least-squares slope of the tracked maximum of w after ``t_min``.

    Falls back to the tracked zero crossing of u when w has no resolvable
    peak (a flat chemical potential, as in a relaxed stationary train).
    """
    t, sel = _window(diag, t_min, diag.lost_lock, "peak")
    track = np.asarray(diag.peak_track)[sel]
    if not np.all(np.isfinite(track)):
        return crossing_speed(diag, t_min)
    return float(np.polyfit(t, track, 1)[0])


def crossing_speed(diag: Diagnostics, t_min: float = 0.0) -> float:
    t, sel = _window(diag, t_min, diag.crossing_lost, "zero-crossing")
    track = np.asarray(diag.crossing_track)[sel]
    if not np.all(np.isfinite(track)):
        raise TrackingError("no zero crossing of u along the tracking row")
    return float(np.polyfit(t, track, 1)[0])


@dataclass
class RunResult:
    state: FieldState
    diagnostics: Diagnostics
    snapshots: list


def run(cfg: SimConfig, state: Optional[FieldState] = None, out_dir=None, snapshot_every: Optional[int] = None, keep_snapshots: bool = False, progress=None) -> RunResult:
    """Integrate from the wave-train initial data (or ``state``) to ``t_end``.

    Diagnostics are recorded every ``output_every`` steps.  Snapshots are
    taken every ``snapshot_every`` steps (default: ``output_every``) when
    ``keep_snapshots`` is set or ``out_dir`` is given; in the latter case
    each is written as raw little-endian float64 with a JSON index.
    """
    ops = _operators(cfg)
    if state is None:
        state = init_wavetrain(cfg)
    else:
        _check_state(state, cfg)
    diag = Diagnostics()
    snaps = []
    snap_every = snapshot_every or cfg.output_every
    store = keep_snapshots or out_dir is not None
    index = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    def save(st, i):
        if not store:
            return
        if out_dir is not None:
            entry = write_snapshot(out_dir, i, st, cfg)
            index.append(entry)
        if keep_snapshots:
            snaps.append(st.copy())

    u = np.array(state.u, dtype=float)
    uh, vh = ops.fft(u), ops.fft(state.v)
    t0 = state.t
    diagnostics_update(state, diag, cfg)
    save(state, 0)
    n_steps = cfg.n_steps
    hist = None
    for i in range(1, n_steps + 1):
        if cfg.order == 1 or hist is None:
            uh_new, vh_new, expl = ops.advance(uh, vh, u)
        else:
            uh_new, vh_new, expl = ops.advance2(uh, vh, u, *hist)
        if cfg.order == 2:
            hist = (uh, vh, expl)
        uh, vh = uh_new, vh_new
        u = ops.ifft(uh)
        m = np.abs(u).max()
        if not m <= cfg.max_abs_u:
            raise SimulationDiverged(t0 + i * cfg.dt, m)
        rec = i % cfg.output_every == 0 or i == n_steps
        snap = store and (i % snap_every == 0 or i == n_steps)
        if rec or snap:
            st = FieldState(u, ops.ifft(vh), t0 + i * cfg.dt)
            if rec:
                diagnostics_update(st, diag, cfg)
            if snap:
                save(st, i)
            if progress is not None and rec:
                progress(st, diag)
    final = FieldState(u, ops.ifft(vh), t0 + n_steps * cfg.dt)
    if out_dir is not None:
        with open(os.path.join(out_dir, "snapshots.json"), "w") as fh:
            json.dump(dict(grid=list(cfg.grid), params=asdict(cfg.params), snapshots=index), fh, indent=1)
    return RunResult(final, diag, snaps)


def write_snapshot(out_dir, i, state: FieldState, cfg: SimConfig):
    """Write u and v as raw little-endian float64 (row-major) plus a JSON sidecar."""
    entry = dict(step=i, t=state.t, shape=list(state.u.shape), dtype="<f8", order="C")
    for name in ("u", "v"):
        fname = f"{name}_{i:08d}.bin"
        np.ascontiguousarray(getattr(state, name), dtype="<f8").tofile(os.path.join(out_dir, fname))
        entry[name] = fname
    sidecar = dict(entry, grid=list(cfg.grid), params=asdict(cfg.params))
    with open(os.path.join(out_dir, f"snap_{i:08d}.json"), "w") as fh:
        json.dump(sidecar, fh, indent=1)
    return entry


def read_snapshot(out_dir, entry) -> FieldState:
    shape = tuple(entry["shape"])
    u = np.fromfile(os.path.join(out_dir, entry["u"]), dtype="<f8").reshape(shape)
    v = np.fromfile(os.path.join(out_dir, entry["v"]), dtype="<f8").reshape(shape)
    return FieldState(u, v, entry["t"])


def with_params(cfg: SimConfig, **changes) -> SimConfig:
    """Copy of ``cfg`` with model parameters replaced."""
    return replace(cfg, params=replace(cfg.params, **changes))
