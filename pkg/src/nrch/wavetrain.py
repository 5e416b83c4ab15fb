"""Periodic wave-trains of the sharp-interface (modified Mullins-Sekerka) system.

2N flat fronts sit at x_n = n/2N on the unit interval, alternating between
u = +1 (on [x_{2n}, x_{2n+1}]) and u = -1.  They are stationary for
theta >= -1 and travel with speed c0 = 4 N xi / tau otherwise, where xi is
the positive root of xi + theta tanh(xi) = 0.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)
#: surface tension of the tanh heteroclinic of f(u) = u^3 - u
GAMMA = SQRT2 / 3.0


def potential(u):
    """Double-well F(u) = (u^2 - 1)^2 / 4."""
    return 0.25 * (u * u - 1.0) ** 2


def potential_derivative(u):
    """f(u) = F'(u) = u^3 - u."""
    return u * u * u - u


def heteroclinic(eta):
    """Q(eta) = tanh(eta / sqrt 2), the front connecting -1 to +1."""
    return np.tanh(np.asarray(eta) / SQRT2)


@dataclass(frozen=True)
class Heteroclinic:
    Q: Callable = heteroclinic
    gamma: float = GAMMA


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional parameters (epsilon, tau, theta, rho)."""

    epsilon: float
    tau: float
    theta: float
    rho: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.theta == 0:
            raise ValueError("theta must be nonzero")


@dataclass(frozen=True)
class DimensionalParams:
    kappa: float
    beta: float
    L: float
    H: float
    D12: float
    D21: float
    D22: float

    def __post_init__(self):
        for name in ("kappa", "beta", "L", "H", "D22"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def theta(self):
        return self.D12 * self.D21 / self.D22**2

    def to_model(self) -> ModelParams:
        return ModelParams(
            epsilon=math.sqrt(self.kappa / self.beta) / self.L,
            tau=math.sqrt(self.kappa * self.beta) / (self.D22 * self.L),
            theta=self.theta,
            rho=self.H / self.L,
        )


def solve_xi(theta: float) -> float:
    """Nonnegative root of xi + theta * tanh(xi) = 0.

    Zero for theta >= -1.  Otherwise the root is bracketed in (0, -theta]
    (tanh < 1), located by bisection and polished with Newton steps.
    """
    theta = float(theta)
    if theta == 0:
        raise ValueError("theta must be nonzero")
    if theta >= -1.0:
        return 0.0

    def g(x):
        return x + theta * math.tanh(x)

    lo, hi = 0.0, -theta
    # g < 0 just right of 0 and g(-theta) > 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * hi:
            break
    x = 0.5 * (lo + hi)
    for _ in range(8):
        dg = 1.0 + theta / math.cosh(x) ** 2
        if dg == 0:
            break
        step = g(x) / dg
        x_new = x - step
        if not lo <= x_new <= hi:
            break
        x = x_new
        if abs(step) <= 1e-16 * x:
            break
    return x


def speed(theta: float, tau: float, N: int) -> float:
    """Wave-train speed c0 = 4 N xi(theta) / tau (the positive branch).

    The mirror-image train travelling with -c0 is obtained by x -> -x.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return 4 * N * solve_xi(theta) / tau


@dataclass(frozen=True)
class WaveTrainProfile:
    """Travelling (or stationary) wave-train in its co-moving frame.

    ``v0`` and ``w0`` are 1-periodic; ``v0`` is normalised to zero mean and
    ``w0`` is pinned by w0 = theta v0 at the fronts.
    """

    N: int
    tau: float
    theta: float
    c0: float
    xi: float
    fronts: np.ndarray = field(repr=False)

    @property
    def _E(self):
        return math.exp(self.tau * self.c0 / (2 * self.N))

    def _interval(self, x):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        j = np.minimum(np.floor(x * 2 * self.N).astype(int) + 1, 2 * self.N)
        return x, j

    def v0(self, x):
        x, j = self._interval(x)
        if self.c0 == 0:
            return np.zeros_like(x)
        xj = j / (2 * self.N)
        sign = np.where(j % 2 == 1, 1.0, -1.0)
        return (2 / self.tau) * sign * (0.5 - np.exp(-self.tau * self.c0 * (x - xj)) / (1 + self._E))

    def dv0(self, x):
        x, j = self._interval(x)
        if self.c0 == 0:
            return np.zeros_like(x)
        xj = j / (2 * self.N)
        sign = np.where(j % 2 == 1, 1.0, -1.0)
        return 2 * self.c0 * sign * np.exp(-self.tau * self.c0 * (x - xj)) / (1 + self._E)

    def front_value(self, n):
        """v0(x_n) = (-1)^n (1 - E)/(tau (1 + E)), E = exp(tau c0 / 2N)."""
        E = self._E
        return (-1.0) ** n * (1 - E) / (self.tau * (1 + E))

    def w0_slope(self, n):
        """Slope of w0 on (x_{n-1}, x_n)."""
        E = self._E
        return (-1.0) ** n * 4 * self.N * self.theta / self.tau * (1 - E) / (1 + E)

    def w0(self, x):
        x, j = self._interval(x)
        if self.c0 == 0:
            return np.zeros_like(x)
        xj = j / (2 * self.N)
        return self.theta * self.front_value(j) + self.w0_slope(j) * (x - xj)

    def dw0(self, x):
        _, j = self._interval(x)
        if self.c0 == 0:
            return np.zeros(np.shape(j))
        return self.w0_slope(j)


def build_profile(params: ModelParams, N: int) -> WaveTrainProfile:
    c0 = speed(params.theta, params.tau, N)
    return WaveTrainProfile(
        N=int(N),
        tau=params.tau,
        theta=params.theta,
        c0=c0,
        xi=params.tau * c0 / (4 * N),
        fronts=np.arange(1, 2 * N + 1) / (2 * N),
    )


class DimensionalSpeeds(NamedTuple):
    c_sharp: float
    c_bm: float
    bm_valid: bool


def dimensional_speeds(dp: DimensionalParams, normalized: bool = False) -> DimensionalSpeeds:
    """Sharp-interface speed and the small-amplitude (diffuse) speed for N = 1.

    With ``normalized=True`` both are divided by sqrt|D12 D21| / L, the axis
    scaling under which sqrt|D12 D21| = 0.15, D22 = 0.1 gives c_sharp ~ 5.853.
    ``c_bm`` is NaN (and ``bm_valid`` False) when its radicand is negative.
    """
    prod = abs(dp.D12 * dp.D21)
    c_sharp = 4 * dp.D22 / dp.L * solve_xi(dp.theta)
    radicand = 1 - dp.D22**2 / prod if prod > 0 else -1.0
    valid = radicand >= 0
    c_bm = 2 * math.pi * math.sqrt(prod) / dp.L * math.sqrt(radicand) if valid else math.nan
    if normalized:
        if prod == 0:
            raise ValueError("normalisation needs D12 * D21 != 0")
        scale = math.sqrt(prod) / dp.L
        c_sharp, c_bm = c_sharp / scale, c_bm / scale
    return DimensionalSpeeds(c_sharp, c_bm, valid)


def signed_distance(x, N, shifts=None):
    """Periodic signed distance to the fronts, positive inside the u = +1 phase.

    ``shifts`` optionally displaces front n (n = 1..2N) along x by
    ``shifts[..., n-1]`` (broadcast against ``x``); the distance is then the
    distance along x to the displaced fronts.
    """
    x = np.asarray(x, dtype=float)
    base = np.arange(0, 2 * N + 1) / (2 * N)
    if shifts is None:
        x = np.mod(x, 1.0)
        j = np.minimum(np.floor(x * 2 * N).astype(int), 2 * N - 1)
        d = np.minimum(x - base[j], base[j + 1] - x)
        return np.where(j % 2 == 0, d, -d)
    shifts = np.asarray(shifts, dtype=float)
    # front n sits at n/2N + shift_n; front 0 is front 2N one period earlier
    pos = base[1:] + shifts
    fronts = np.concatenate([pos[..., -1:] - 1.0, pos, pos[..., :1] + 1.0], axis=-1)
    xm = np.mod(x, 1.0)[..., None]
    # fronts alternate: crossing front n (odd) leaves the + phase
    d = xm - fronts
    idx = np.argmin(np.abs(d), axis=-1)
    dist = np.take_along_axis(np.abs(d), idx[..., None], axis=-1)[..., 0]
    nearest = np.take_along_axis(d, idx[..., None], axis=-1)[..., 0]
    # label of nearest front is (idx) in 0..2N+1 -> front number idx (0 == 2N)
    n = idx % (2 * N)
    left_of_front = nearest < 0
    # left of an odd front / right of an even front is the + phase
    inside = np.where(n % 2 == 1, left_of_front, ~left_of_front)
    return np.where(inside, dist, -dist)


def tails_overlap(epsilon, N, tol=1e-6):
    """True when Q(d/eps) is still more than ``tol`` from +-1 halfway between
    neighbouring fronts (1 - |Q(eta)| ~ 2 exp(-sqrt(2) |eta|))."""
    return epsilon * math.log(2.0 / tol) / math.sqrt(2.0) > 1.0 / (4 * N)


def composite_fields(profile: WaveTrainProfile, params: ModelParams, tol: float = 1e-6):
    """Composite diffuse fields (u_eps, v_eps) built from the sharp profile.

    u_eps = Q(dist / eps) and v_eps = v0 - Q(dist / eps) / tau.  Returns two
    callables of x (1-periodic).  Warns when the tanh tails of neighbouring
    fronts overlap at level ``tol``.
    """
    eps = params.epsilon
    if tails_overlap(eps, profile.N, tol):
        warnings.warn(
            f"interfaces overlap: epsilon={eps} too large for N={profile.N}",
            RuntimeWarning,
            stacklevel=2,
        )
    N, tau = profile.N, params.tau

    def u_eps(x):
        return heteroclinic(signed_distance(x, N) / eps)

    def v_eps(x):
        return profile.v0(x) - heteroclinic(signed_distance(x, N) / eps) / tau

    return u_eps, v_eps


def write_profile_csv(path, profile: WaveTrainProfile, params: ModelParams, samples: int):
    """Sample the profile on a uniform grid of [0, 1) and write it as CSV.

    Comment lines at the top carry the parameters as key=value pairs.
    """
    x = np.arange(samples) / samples
    u_eps, v_eps = composite_fields(profile, params)
    cols = np.column_stack([x, profile.v0(x), profile.w0(x), u_eps(x), v_eps(x)])
    header = dict(
        theta=params.theta,
        tau=params.tau,
        N=profile.N,
        epsilon=params.epsilon,
        c0=profile.c0,
        xi=profile.xi,
    )
    with open(path, "w", newline="") as fh:
        for key, val in header.items():
            fh.write(f"# {key}={_fmt(val)}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "v0", "w0", "u_eps", "v_eps"])
        for row in cols:
            writer.writerow([_fmt(v) for v in row])


def read_profile_csv(path):
    """Return (header dict, structured columns dict) from ``write_profile_csv`` output."""
    header = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, val = line[1:].strip().split("=", 1)
            header[key] = float(val)
        else:
            body.append(line)
    names = body[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    return header, {name: data[:, i] for i, name in enumerate(names)}


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")
