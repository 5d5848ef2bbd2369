"""Separation-of-variables solution for plane-wave scattering by a dielectric disk.

The polar angle ``phi`` is measured from the +x2 axis (the propagation
direction of the incident wave), so ``x = r (sin phi, cos phi)`` and
``exp(i k1 x2) = sum_n i^|n| J_|n|(k1 r) e^{i n phi}``.

Mode coefficients are stored against the basis ``H_|n|(k r) e^{i n phi}`` and
``J_|n|(k r) e^{i n phi}`` for n = -M..M. In that basis the x2-symmetric
problem gives ``b[-n] == b[n]``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .special_functions import MAX_ORDER, bessel_jy


class SingularModeError(ArithmeticError):
    """A 2x2 mode system is numerically singular (a resonance of the disk)."""


@dataclass(frozen=True)
class MediumParams:
    omega: float
    eps1: float = 1.0
    eps2: float = 2.0
    mu1: float = 1.0
    mu2: float = 1.0

    def __post_init__(self):
        for name in ("omega", "eps1", "eps2", "mu1", "mu2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def k1(self):
        return self.omega * math.sqrt(self.eps1 * self.mu1)

    @property
    def k2(self):
        return self.omega * math.sqrt(self.eps2 * self.mu2)


@dataclass(frozen=True)
class SeriesCoefficients:
    b: np.ndarray  # scattered modes, index n + M
    c: np.ndarray  # interior modes, index n + M
    M: int
    radius: float
    center: tuple = (0.0, 0.0)

    @property
    def orders(self):
        return np.arange(-self.M, self.M + 1)

    def mode(self, n):
        return self.b[n + self.M], self.c[n + self.M]


@dataclass(frozen=True)
class BoundaryData:
    u: np.ndarray  # trace at element midpoints
    q: np.ndarray  # (1/eps) du/dn at element midpoints, common to both sides


def incident_wave(x, k1):
    """Unit plane wave travelling in +x2: exp(i k1 x2)."""
    x = np.asarray(x, dtype=float)
    return np.exp(1j * k1 * x[..., 1])


def _jy_derivatives(J, Y, z):
    """Z_n'(z) = Z_{n-1}(z) - (n/z) Z_n(z), with Z_0' = -Z_1."""
    n = np.arange(J.shape[0]).reshape((-1,) + (1,) * (J.ndim - 1))
    dJ = np.empty_like(J)
    dY = np.empty_like(Y)
    dJ[0], dY[0] = -J[1], -Y[1]
    dJ[1:] = J[:-1] - n[1:] / z * J[1:]
    dY[1:] = Y[:-1] - n[1:] / z * Y[1:]
    return dJ, dY


def _signed(values, n):
    """Signed-order value from order |n|: Z_{-n} = (-1)^n Z_n."""
    return values if n >= 0 or n % 2 == 0 else -values


def _solve_modes(params, radius, M):
    """Solve the continuity conditions for each signed mode -M..M."""
    k1, k2 = params.k1, params.k2
    z1, z2 = k1 * radius, k2 * radius
    J1, Y1 = bessel_jy(M + 1, z1)
    J2, _ = bessel_jy(M + 1, z2)
    dJ1, dY1 = _jy_derivatives(J1, Y1, z1)
    dJ2, _ = _jy_derivatives(J2, np.zeros_like(J2), z2)
    H1, dH1 = J1 + 1j * Y1, dJ1 + 1j * dY1

    b = np.empty(2 * M + 1, dtype=complex)
    c = np.empty(2 * M + 1, dtype=complex)
    for n in range(-M, M + 1):
        a = abs(n)
        jn1, djn1 = _signed(J1[a], n), _signed(dJ1[a], n)
        hn1, dhn1 = _signed(H1[a], n), _signed(dH1[a], n)
        jn2, djn2 = _signed(J2[a], n), _signed(dJ2[a], n)
        inc = 1j ** (n % 4)
        # u continuity and (1/eps) du/dr continuity at r = radius
        A = np.array([[hn1, -jn2],
                      [k1 / params.eps1 * dhn1, -k2 / params.eps2 * djn2]])
        rhs = -inc * np.array([jn1, k1 / params.eps1 * djn1])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        scale = abs(A[0, 0] * A[1, 1]) + abs(A[0, 1] * A[1, 0])
        if abs(det) < 1e-14 * scale:
            raise SingularModeError(f"mode {n} system is singular (|det|/scale = {abs(det) / scale:.3e})")
        bn = (rhs[0] * A[1, 1] - A[0, 1] * rhs[1]) / det
        cn = (A[0, 0] * rhs[1] - rhs[0] * A[1, 0]) / det
        # back to the |n|-order basis
        sign = -1.0 if (n < 0 and a % 2 == 1) else 1.0
        b[n + M] = sign * bn
        c[n + M] = sign * cn
    # size of each mode's contribution on the interface, used for truncation
    weight_b = np.abs(H1[: M + 1])
    weight_c = np.abs(J2[: M + 1])
    return b, c, weight_b, weight_c


def solve_series(params, radius, M=None, center=(0.0, 0.0)):
    """Mode coefficients, extending the truncation order until the tail is negligible.

    The tail test is applied to mode contributions on the interface,
    ``|b_M H_M(k1 a)| + |c_M J_M(k2 a)|``, relative to the largest contribution.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if M is None:
        M = math.ceil(params.k1 * radius) + 20
    while True:
        if M + 1 > MAX_ORDER:
            raise ValueError(f"series truncation order {M} exceeds the Bessel order limit")
        b, c, wb, wc = _solve_modes(params, radius, M)
        n = np.abs(np.arange(-M, M + 1))
        contrib = np.abs(b) * wb[n] + np.abs(c) * wc[n]
        if contrib[-1] < 1e-14 * contrib.max():
            # the modes are solved for a wave with zero phase at the disk center
            phase = np.exp(1j * params.k1 * center[1])
            return SeriesCoefficients(b * phase, c * phase, M, float(radius), tuple(center))
        M += 10


def _polar(x, center):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dx = x[:, 0] - center[0]
    dy = x[:, 1] - center[1]
    return np.hypot(dx, dy), np.arctan2(dx, dy)


def _mode_sum(coef, values, phi, M):
    """sum_n coef[n] Z_|n| e^{i n phi}; ``values`` rows are orders 0..M."""
    n = np.arange(-M, M + 1)
    rows = values[np.abs(n)]  # (2M+1, P)
    return np.sum(coef[:, None] * rows * np.exp(1j * np.outer(n, phi)), axis=0)


def _exterior_scattered(coeffs, k1, r, phi):
    J, Y = bessel_jy(coeffs.M, k1 * r)
    return _mode_sum(coeffs.b, J + 1j * Y, phi, coeffs.M)


def _interior(coeffs, k2, r, phi):
    J, _ = bessel_jy(coeffs.M, k2 * r)
    return _mode_sum(coeffs.c, J, phi, coeffs.M)


def oracle_field(x, coeffs, params, radius=None, branch=None):
    """Total field at points ``x`` (shape (P, 2) or (2,)).

    ``branch`` forces 'exterior' or 'interior' evaluation regardless of
    position, which is how interface continuity is checked.
    """
    radius = coeffs.radius if radius is None else radius
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    r, phi = _polar(pts, coeffs.center)
    out = np.empty(len(pts), dtype=complex)
    if branch is None:
        outside = r >= radius
    else:
        outside = np.full(len(pts), branch == "exterior")
    if outside.any():
        out[outside] = incident_wave(pts[outside], params.k1) + _exterior_scattered(
            coeffs, params.k1, r[outside], phi[outside])
    if (~outside).any():
        out[~outside] = _interior(coeffs, params.k2, r[~outside], phi[~outside])
    return complex(out[0]) if scalar else out


def oracle_flux(x, coeffs, params, branch="exterior"):
    """(1/eps) du/dr on the chosen branch, by term-wise radial differentiation."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r, phi = _polar(pts, coeffs.center)
    if branch == "exterior":
        k, eps = params.k1, params.eps1
        J, Y = bessel_jy(coeffs.M + 1, k * r)
        dJ, dY = _jy_derivatives(J, Y, k * r)
        scat = _mode_sum(coeffs.b, (dJ + 1j * dY)[: coeffs.M + 1], phi, coeffs.M)
        # d/dr exp(i k1 r cos phi) = i k1 cos(phi) exp(...)
        inc = 1j * k * np.cos(phi) * incident_wave(pts, k)
        return (inc + k * scat) / eps
    k, eps = params.k2, params.eps2
    J, Y = bessel_jy(coeffs.M + 1, k * r)
    dJ, _ = _jy_derivatives(J, Y, k * r)
    return k * _mode_sum(coeffs.c, dJ[: coeffs.M + 1], phi, coeffs.M) / eps


def boundary_data(mesh, coeffs, params):
    """Trace u and scaled flux q at the mesh midpoints, from the exterior series."""
    r, _ = _polar(mesh.midpoints, coeffs.center)
    if np.max(np.abs(r - coeffs.radius)) > 1e-12:
        raise ValueError("mesh midpoints do not lie on the circle the series was solved for")
    u = oracle_field(mesh.midpoints, coeffs, params, branch="exterior")
    q = oracle_flux(mesh.midpoints, coeffs, params, branch="exterior")
    return BoundaryData(u, q)
