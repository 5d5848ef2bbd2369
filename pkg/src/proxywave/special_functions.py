"""Cylindrical Bessel and Hankel functions of integer order and real argument.

Three regimes are used, each vectorized over the argument:

* ``z < SERIES_MAX``: ascending power series for J_n and Y_0, with Y_1 taken
  from the Wronskian (J_0 has no zero below 2.4, so this is well conditioned).
* ``SERIES_MAX <= z``: Miller's backward recurrence for J_n, normalized by
  ``J_0 + 2 sum J_2k = 1``; Y_0 and Y_1 follow from the Neumann series over the
  same recurrence values.
* ``z >= ASYMP_MIN``: Hankel asymptotic expansion for orders 0 and 1.

Y_n for n >= 2 always comes from forward recurrence, which is stable for Y.
"""

import math

import numpy as np

MAX_ORDER = 200
SERIES_MAX = 1.0
ASYMP_MIN = 20.0

EULER_GAMMA = 0.57721566490153286061
_RESCALE_AT = 1e250
_RESCALE_BY = 1e-250


def _as_array(z):
    z = np.asarray(z, dtype=float)
    return z, z.ndim == 0


def _check_order(n):
    if int(n) != n or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n!r}")
    if n > MAX_ORDER:
        raise ValueError(f"order {n} exceeds the supported maximum {MAX_ORDER}")
    return int(n)


def _series_jy(nmax, z):
    """Ascending series; rows of J are orders 0..nmax. ``z`` 1-D, 0 < z < 2."""
    q = -0.25 * z * z
    J = np.empty((nmax + 1, z.size))
    pref = np.ones_like(z)  # (z/2)^n / n!
    for n in range(nmax + 1):
        if n > 0:
            pref = pref * (0.5 * z) / n
        term = np.ones_like(z)
        acc = np.ones_like(z)
        for k in range(1, 16):
            term = term * q / (k * (n + k))
            acc = acc + term
        J[n] = pref * acc

    # Y_0 = (2/pi) [ (ln(z/2) + gamma) J_0 + sum_{k>=1} (-1)^(k+1) H_k (z^2/4)^k / (k!)^2 ]
    term = np.ones_like(z)
    harmonic = 0.0
    acc = np.zeros_like(z)
    for k in range(1, 16):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        acc = acc - harmonic * term
    y0 = (2.0 / np.pi) * ((np.log(0.5 * z) + EULER_GAMMA) * J[0] + acc)
    if nmax >= 1:
        j1 = J[1]
    else:
        j1 = _series_jy(1, z)[0][1]
    y1 = (j1 * y0 - 2.0 / (np.pi * z)) / J[0]
    return J, y0, y1


def _miller_start(nmax, zmax):
    if nmax <= 1:
        m = int(zmax + 16.0 + 4.5 * math.sqrt(zmax))
    else:
        top = max(float(nmax), zmax)
        m = int(top + 20.0 + 10.0 * top ** (1.0 / 3.0))
    return m + (m % 2)


def _miller_jy(nmax, z):
    """Backward recurrence for J_0..J_nmax plus Neumann-series Y_0, Y_1."""
    m = _miller_start(nmax, float(z.max()))
    keep = max(nmax, 1)
    out = np.zeros((keep + 1, z.size))
    two_over_z = 2.0 / z
    b_next = np.zeros_like(z)
    b = np.full_like(z, 1e-30)
    norm = np.zeros_like(z)
    y0_sum = np.zeros_like(z)
    y1_sum = np.zeros_like(z)
    for k in range(m, 0, -1):
        # b holds the unnormalized J_k here
        if k <= keep:
            out[k] = b
        if k % 2 == 0:
            j = k // 2
            norm += 2.0 * b
            y0_sum += (b / j) if j % 2 == 0 else (-b / j)
        elif k >= 3:
            j = (k - 1) // 2
            c = (2 * j + 1) / (j * (j + 1))
            y1_sum += (-c * b) if j % 2 == 0 else (c * b)
        b, b_next = k * two_over_z * b - b_next, b
        if k % 4 == 0:
            big = np.abs(b) > _RESCALE_AT
            if big.any():
                for arr in (b, b_next, norm, y0_sum, y1_sum):
                    arr[big] *= _RESCALE_BY
                out[:, big] *= _RESCALE_BY
    out[0] = b
    norm += b
    J = out / norm
    log_term = np.log(0.5 * z) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (log_term * J[0] - 2.0 * y0_sum / norm)
    y1 = (2.0 / np.pi) * ((log_term - 1.0) * J[1] - J[0] / z + y1_sum / norm)
    return J[: nmax + 1], y0, y1


def _hankel_expansion_coefficients(nu, n_terms):
    """Coefficients of P and Q in powers of 1/z^2, so H = amp * e^{i phase} (P + iQ)."""
    a = [1.0]
    mu = 4.0 * nu * nu
    for k in range(1, n_terms + 1):
        a.append(a[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    # i^k a_k / z^k: even k feed P with sign (-1)^(k/2), odd k feed Q/z with (-1)^((k-1)/2)
    p = [a[k] * (-1) ** (k // 2) for k in range(0, n_terms + 1, 2)]
    q = [a[k] * (-1) ** (k // 2) for k in range(1, n_terms + 1, 2)]
    return np.array(p[::-1]), np.array(q[::-1])


_ASYMP_COEFFS = {nu: _hankel_expansion_coefficients(nu, 28) for nu in (0, 1)}


def _asymptotic_h01(z):
    """H_0^(1), H_1^(1) from the Hankel expansion; accurate to ~1e-16 for z >= 20."""
    w = 1.0 / (z * z)
    phase = z - 0.25 * np.pi
    c = np.cos(phase)
    s = np.sin(phase)
    amp = np.sqrt(2.0 / (np.pi * z))
    out = []
    for nu in (0, 1):
        pc, qc = _ASYMP_COEFFS[nu]
        P = np.full_like(z, pc[0])
        for coef in pc[1:]:
            P *= w
            P += coef
        Q = np.full_like(z, qc[0])
        for coef in qc[1:]:
            Q *= w
            Q += coef
        Q /= z
        if nu == 1:
            # phase shifts by -pi/2 for order one
            c, s = s, -c
        h = np.empty(z.shape, dtype=complex)
        h.real = amp * (c * P - s * Q)
        h.imag = amp * (s * P + c * Q)
        out.append(h)
    return out[0], out[1]


def _forward_y(nmax, z, y0, y1):
    Y = np.empty((nmax + 1, z.size))
    Y[0] = y0
    if nmax >= 1:
        Y[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, nmax):
            Y[k + 1] = (2.0 * k / z) * Y[k] - Y[k - 1]
    return Y


def bessel_jy(nmax, z):
    """J_n(z) and Y_n(z) for every order 0..nmax.

    Returns two arrays of shape ``(nmax + 1,) + z.shape``. ``z = 0`` is allowed
    (J is exact there, Y is ``-inf``); negative ``z`` raises ``ValueError``.
    """
    nmax = _check_order(nmax)
    z, _ = _as_array(z)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("Bessel functions are only supported for real z >= 0")
    flat = z.ravel()
    J = np.zeros((nmax + 1, flat.size))
    Y = np.full((nmax + 1, flat.size), -np.inf)

    zero = flat == 0.0
    J[0, zero] = 1.0

    small = (flat > 0.0) & (flat < SERIES_MAX)
    if small.any():
        zs = flat[small]
        Js, y0, y1 = _series_jy(nmax, zs)
        J[:, small] = Js
        Y[:, small] = _forward_y(nmax, zs, y0, y1)

    mid = flat >= SERIES_MAX
    if nmax <= 1:
        mid &= flat < ASYMP_MIN
        large = flat >= ASYMP_MIN
        if large.any():
            zl = flat[large]
            h0, h1 = _asymptotic_h01(zl)
            J[0, large], Y[0, large] = h0.real, h0.imag
            if nmax == 1:
                J[1, large], Y[1, large] = h1.real, h1.imag
    if mid.any():
        zm = flat[mid]
        Jm, y0, y1 = _miller_jy(nmax, zm)
        if nmax > 1:
            large = zm >= ASYMP_MIN
            if large.any():
                h0, h1 = _asymptotic_h01(zm[large])
                y0[large], y1[large] = h0.imag, h1.imag
        J[:, mid] = Jm
        Y[:, mid] = _forward_y(nmax, zm, y0, y1)

    shape = (nmax + 1,) + z.shape
    return J.reshape(shape), Y.reshape(shape)


def bessel_j(n, z):
    """Bessel function of the first kind J_n(z), z >= 0."""
    z, scalar = _as_array(z)
    J, _ = bessel_jy(n, z)
    out = J[int(n)]
    return float(out) if scalar else out


def bessel_y(n, z):
    """Bessel function of the second kind Y_n(z), z > 0."""
    z, scalar = _as_array(z)
    if np.any(z <= 0):
        raise ValueError("Y_n(z) requires z > 0")
    _, Y = bessel_jy(n, z)
    out = Y[int(n)]
    return float(out) if scalar else out


def hankel1(n, z):
    """Hankel function of the first kind H_n^(1)(z) = J_n(z) + i Y_n(z), z > 0."""
    z, scalar = _as_array(z)
    if np.any(z <= 0):
        raise ValueError("H_n^(1)(z) requires z > 0")
    J, Y = bessel_jy(n, z)
    n = int(n)
    out = J[n] + 1j * Y[n]
    return complex(out) if scalar else out


def hankel1_01(z):
    """(H_0^(1)(z), H_1^(1)(z)) for an array of positive arguments.

    This is the kernel hot path, so the recurrence regime is split into bands
    to keep the Miller start order close to each band's maximum argument.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("H^(1)(z) requires z > 0")
    flat = z.ravel()
    h0 = np.empty(flat.size, dtype=complex)
    h1 = np.empty(flat.size, dtype=complex)
    edges = (0.0, SERIES_MAX, 4.0, 8.0, 13.0, ASYMP_MIN, math.inf)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (flat >= lo) & (flat < hi)
        if not sel.any():
            continue
        zs = flat[sel]
        if lo >= ASYMP_MIN:
            a, b = _asymptotic_h01(zs)
        else:
            if hi <= SERIES_MAX:
                Js, y0, y1 = _series_jy(1, zs)
            else:
                Js, y0, y1 = _miller_jy(1, zs)
            a = Js[0] + 1j * y0
            b = Js[1] + 1j * y1
        h0[sel] = a
        h1[sel] = b
    return h0.reshape(z.shape), h1.reshape(z.shape)
