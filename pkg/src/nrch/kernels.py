"""Periodic Green's-type kernels and the spectra of their circulant matrices.

``G_I`` and ``G_II`` are the 1-periodic solutions of

    G'' + a G' - b^2 G = 0,    0 < x < 1,

with, respectively, a unit jump in the derivative (continuous value) and a
unit jump in the value (continuous derivative) across x = 0.  Sampling them
at the uniformly spaced fronts x_n = n / 2N with alternating signs gives
circulant 2N x 2N matrices whose eigenvalues have closed forms; those
eigenvalues are what the wave-train dispersion functions are built from.

All evaluations are written in overflow-safe form so they can be used with
|b| in the thousands (large transverse wavenumbers or far along the
imaginary axis).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Scaled-denominator floor below which the eigenvalue formulas are treated as
# sitting on a pole.
POLE_TOL = 1e-8


class PoleError(ArithmeticError):
    """Raised when a kernel spectrum is evaluated at (or next to) a pole."""


class ExpRates(NamedTuple):
    beta_plus: complex
    beta_minus: complex


def _check_b(b):
    b = np.asarray(b, dtype=complex)
    if np.any(b == 0):
        raise ValueError("b must be nonzero")
    # The spectra depend on b only through b**2, so b and -b are equivalent.
    arg = np.abs(np.angle(np.where(b.real < 0, -b, b)))
    if np.any(arg > np.pi / 4 + 1e-12):
        raise ValueError("|arg b| must not exceed pi/4")
    return b


def _root(a, b):
    return np.sqrt(a * a + 4 * np.asarray(b, dtype=complex) ** 2)


def exp_rates(a, b) -> ExpRates:
    """Roots of r^2 + a r - b^2 = 0, ``beta_plus`` taking the + branch of
    the principal square root."""
    if np.any(np.asarray(b) == 0):
        raise ValueError("b must be nonzero")
    s = _root(a, b)
    return ExpRates((-a + s) / 2, (-a - s) / 2)


def _periodic_exp(beta, x):
    # e^{beta x} / (1 - e^{beta}) without overflow for large |Re beta|.
    beta = np.asarray(beta, dtype=complex)
    pos = beta.real > 0
    with np.errstate(over="ignore", invalid="ignore"):
        out_pos = np.exp(beta * (x - 1)) / np.expm1(-beta)
        out_neg = np.exp(beta * x) / -np.expm1(beta)
    return np.where(pos, out_pos, out_neg)


def g1(x, a, b):
    """G_I(x; a, b) for 0 <= x < 1 (vectorised over x)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= 1)):
        raise ValueError("x must lie in [0, 1)")
    bp, bm = exp_rates(a, b)
    return (_periodic_exp(bp, x) - _periodic_exp(bm, x)) / (bp - bm)


def g2(x, a, b):
    """G_II(x; a, b) for 0 < x < 1.

    The value jumps by one across x = 0, so the endpoint is excluded; the
    one-sided limits are ``g2_limit(..., side='+')`` (x -> 0+) and
    ``side='-'`` (x -> 1-).
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise ValueError("x must lie strictly inside (0, 1); use g2_limit at the jump")
    return _g2(x, a, b)


def g2_limit(a, b, side="+"):
    """One-sided limit of G_II at the jump: x -> 0+ (``'+'``) or x -> 1- (``'-'``)."""
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    return _g2(0.0 if side == "+" else 1.0, a, b)


def _g2(x, a, b):
    bp, bm = exp_rates(a, b)
    return -(bm * _periodic_exp(bp, x) - bp * _periodic_exp(bm, x)) / (bp - bm)


def _scaled_parts(k, a, b, N):
    """Return (s, numerator-of-sinh, e^{w-z}, scaled denominator).

    With z = s/4N and w = i pi k/N + a/4N every hyperbolic function is
    divided by e^z / 2; in the pole-free regime Re z > |Re w| so nothing
    overflows.
    """
    k = np.asarray(k)
    s = _root(a, b)
    z = s / (4 * N)
    w = 1j * np.pi * k / N + a / (4 * N)
    e2z = np.exp(-2 * z)
    ewz = np.exp(w - z)
    denom = 1 + e2z + ewz + np.exp(-w - z)
    if np.any(np.abs(denom) < POLE_TOL):
        raise PoleError("kernel eigenvalue denominator vanishes")
    return s, -np.expm1(-2 * z), e2z, ewz, denom


def _check_k(k, N):
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    k = np.asarray(k)
    if np.any((k < 0) | (k > 2 * N - 1)):
        raise ValueError("mode index k must lie in 0..2N-1")


def zeta1(k, a, b, N):
    """Eigenvalue of the circulant matrix built from G_I for eigenvector g_k."""
    _check_k(k, N)
    b = _check_b(b)
    return _zeta1(k, a, b, N)


def zeta2(k, a, b, N):
    """Eigenvalue of the circulant matrix built from G_II for eigenvector g_k.

    The diagonal of that matrix carries the x -> 0+ limit of G_II.
    """
    _check_k(k, N)
    b = _check_b(b)
    return _zeta2(k, a, b, N)


def _zeta1(k, a, b, N):
    s, num, _, _, denom = _scaled_parts(k, a, b, N)
    # num / s -> 1/(2N) as s -> 0; expm1 keeps that limit accurate
    return -(num / s) / denom


def _zeta2(k, a, b, N):
    s, num, e2z, ewz, denom = _scaled_parts(k, a, b, N)
    return -(a / 2) * (num / s) / denom + 0.5 * (1 + e2z + 2 * ewz) / denom


def zeta_pair(k, a, b, N):
    """Both eigenvalues at once, sharing the common work (no argument checks)."""
    s, num, e2z, ewz, denom = _scaled_parts(k, a, b, N)
    z1 = -(num / s) / denom
    return z1, (a / 2) * z1 + 0.5 * (1 + e2z + 2 * ewz) / denom


def front_positions(N):
    """Uniform front positions x_n = n/2N, n = 1..2N."""
    return np.arange(1, 2 * N + 1) / (2 * N)


def circulant_eigenvector(k, N):
    return np.exp(1j * np.pi * k * np.arange(2 * N) / N)


def dense_matrices(a, b, N):
    """Dense 2N x 2N matrices with entries (-1)^{m+n} G(x_m - x_n).

    Differences are reduced to [0, 1); on the diagonal G_II takes its
    x -> 0+ value (the side from which the fronts are approached).
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    N = int(N)
    x = front_positions(N)
    diff = np.mod(x[:, None] - x[None, :], 1.0)
    sign = (-1.0) ** np.add.outer(np.arange(2 * N), np.arange(2 * N))
    GI = sign * g1(diff, a, b)
    GII = sign * _g2(diff, a, b)
    return GI, GII
