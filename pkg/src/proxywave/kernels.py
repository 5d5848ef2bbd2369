"""Helmholtz fundamental solution G(x - y) = (i/4) H_0^(1)(k|x - y|) and its normal derivative in y."""

import numpy as np

from .special_functions import hankel1_01

# target rows per chunk are chosen so a chunk holds about this many entries
CHUNK_ENTRIES = 1 << 20


def _distances(targets, sources):
    d = sources[None, :, :] - targets[:, None, :]  # y - x
    r = np.hypot(d[..., 0], d[..., 1])
    return d, r


def single_layer(targets, sources, k):
    """Matrix of G(x_i - y_j)."""
    targets = np.atleast_2d(targets)
    sources = np.atleast_2d(sources)
    _, r = _distances(targets, sources)
    h0, _ = hankel1_01(k * r)
    return 0.25j * h0


def double_layer(targets, sources, normals, k):
    """Matrix of dG(x_i - y)/dn(y) at y = y_j: -(i k/4) H_1(k r) n.(y - x)/r."""
    G, D = layer_kernels(targets, sources, normals, k)
    return D


def layer_kernels(targets, sources, normals, k):
    """Both kernel matrices from a single Hankel evaluation."""
    targets = np.atleast_2d(targets)
    sources = np.atleast_2d(sources)
    d, r = _distances(targets, sources)
    h0, h1 = hankel1_01(k * r)
    cos_n = (d[..., 0] * normals[None, :, 0] + d[..., 1] * normals[None, :, 1]) / r
    return 0.25j * h0, -0.25j * k * h1 * cos_n


def potential(targets, sources, normals, k, dl_density, sl_density, min_distance=0.0):
    """sum_j D(x, y_j) dl_density_j - G(x - y_j) sl_density_j, chunked over targets.

    Densities already include the quadrature weights. Raises ``ValueError``
    if any target is closer than ``min_distance`` to a source.
    """
    targets = np.atleast_2d(targets)
    out = np.empty(len(targets), dtype=complex)
    if len(sources) == 0:
        out[:] = 0.0
        return out
    step = max(1, CHUNK_ENTRIES // len(sources))
    for start in range(0, len(targets), step):
        blk = targets[start:start + step]
        d, r = _distances(blk, sources)
        if r.min() < min_distance:
            raise ValueError(
                f"evaluation point within {r.min():.3e} of the boundary (limit {min_distance:.3e})")
        h0, h1 = hankel1_01(k * r)
        cos_n = (d[..., 0] * normals[None, :, 0] + d[..., 1] * normals[None, :, 1]) / r
        dl = (-0.25j * k) * (h1 * cos_n) @ dl_density
        sl = 0.25j * (h0 @ sl_density)
        out[start:start + step] = dl - sl
    return out
