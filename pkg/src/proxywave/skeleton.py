"""Proxy-surface skeletons for evaluation cells (x-side) and boundary clusters (y-side).

x-side: the m points of a unit cell are compressed against single-layer
sources on a proxy circle, giving ``u(x_i) ~= sum_k U[i, k] u(x_k)`` over the
skeleton points. One ``XSkeleton`` serves every translate of the layout.

y-side: the elements of a boundary cluster are compressed against test points
on a proxy circle, giving a skeleton subset S of the cluster and matrices V, W
that fold the cluster's single- and double-layer densities onto S. The
``original`` variant also tests against the midpoints of adjacent-cluster
elements that fall inside the proxy; ``tailored`` drops them.
"""

from dataclasses import dataclass, field
import hashlib
import json
import logging

import numpy as np
import scipy.linalg

from .geometry import proxy_for_cell, proxy_for_elements
from .idecomp import id_columns, id_rows
from .kernels import layer_kernels, single_layer

logger = logging.getLogger(__name__)

VARIANTS = ("original", "tailored")
SCHEMES = ("single_level", "multi_level")


def layout_id(offsets, cell_size):
    h = hashlib.sha256(np.ascontiguousarray(offsets, dtype=np.float64).tobytes())
    h.update(repr(float(cell_size)).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class XSkeleton:
    indices: np.ndarray  # local indices S_x into the cell layout
    U: np.ndarray  # (m, s_x)
    layout_id: str
    offsets: np.ndarray  # (m, 2) point offsets from the cell center
    tol: float = 1e-6

    @property
    def s_x(self):
        return len(self.indices)

    @property
    def m(self):
        return self.U.shape[0]


@dataclass
class YSkeleton:
    cluster_id: int
    elements: np.ndarray  # global element indices of the cluster C_t
    indices: np.ndarray  # global element indices S_t, a subset of ``elements``
    V: np.ndarray  # (s_t, n) single-layer folding
    W: np.ndarray  # (s_t, n) double-layer folding
    scheme: str = "single_level"
    variant: str = "tailored"
    tol: float = 1e-10
    level: int = 0
    n_test_rows: int = 0

    @property
    def s_y(self):
        return len(self.indices)


def build_x_skeleton(cell, proxy, k1, tol=1e-6):
    """Row ID of the cell-points x proxy-points single-layer interaction matrix."""
    if not 0 < tol < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    if np.any(~proxy.contains(cell.points)):
        raise ValueError("proxy circle does not enclose every cell point")
    A = single_layer(cell.points, proxy.points, k1)
    res = id_rows(A, tol)
    return XSkeleton(res.skeleton, res.interp, layout_id(cell.offsets, cell.size),
                     cell.offsets.copy(), float(tol))


def build_grid_x_skeleton(grid, k1, tol=1e-6, radius_factor=1.5, n_p=64):
    """The shared XSkeleton for a grid, built once from its first cell."""
    cell = grid.cells[0]
    return build_x_skeleton(cell, proxy_for_cell(cell, radius_factor, n_p), k1, tol)


def _interaction_blocks(mesh, columns, test_points, k1):
    """Single- and double-layer (weighted) interactions of elements ``columns`` with test points."""
    G, D = layer_kernels(test_points, mesh.midpoints[columns], mesh.normals[columns], k1)
    w = mesh.weights[columns]
    return G * w, D * w


def _compress(mesh, columns, proxy, k1, tol, near):
    """Shared skeleton of ``columns`` for both kernels; returns (positions in columns, T, rows)."""
    tests = proxy.points
    if near is not None and len(near):
        tests = np.vstack([tests, mesh.midpoints[near]])
    A_S, A_D = _interaction_blocks(mesh, columns, tests, k1)
    # equalize the two blocks so one tolerance governs both kernels
    A = np.vstack([A_S / np.linalg.norm(A_S), A_D / np.linalg.norm(A_D)])
    res = id_columns(A, tol)
    return res.skeleton, res.interp, len(tests)


def _near_elements(mesh, proxy, neighbors):
    if neighbors is None or len(neighbors) == 0:
        return np.empty(0, dtype=int)
    neighbors = np.asarray(neighbors)
    return neighbors[proxy.contains(mesh.midpoints[neighbors])]


def build_y_skeleton(mesh, cluster, proxy, k1, tol=1e-10, variant="tailored", neighbors=None,
                     cluster_id=0):
    """Skeletonize one cluster of boundary elements against ``proxy``.

    ``neighbors`` lists the elements of adjacent clusters; the ``original``
    variant adds those lying inside the proxy as test points.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if not 0 < tol < 1:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    cluster = np.asarray(cluster, dtype=int)
    if cluster.size == 0:
        raise ValueError("cannot skeletonize an empty cluster")
    if np.any(~proxy.contains(mesh.midpoints[cluster])):
        raise ValueError("proxy circle does not enclose every cluster element")
    near = _near_elements(mesh, proxy, neighbors) if variant == "original" else None
    pos, T, rows = _compress(mesh, cluster, proxy, k1, tol, near)
    return YSkeleton(cluster_id, cluster, cluster[pos], T, T.copy(), "single_level", variant,
                     float(tol), 0, rows)


def _adjacent(nodes, i):
    """Element indices of the cyclic left/right neighbours of ``nodes[i]``."""
    if len(nodes) < 2:
        return np.empty(0, dtype=int)
    picks = {(i - 1) % len(nodes), (i + 1) % len(nodes)} - {i}
    return np.concatenate([nodes[j].indices for j in sorted(picks)])


def build_all_y_skeletons(mesh, tree, k1, tol=1e-10, variant="tailored", scheme="single_level",
                          radius_factor=1.5, n_p=64):
    """Skeletons covering every boundary element.

    ``single_level`` returns one skeleton per leaf. ``multi_level`` recompresses
    children's skeletons at each parent, up to the root's children, and
    returns those top-level skeletons with composite V, W acting directly on
    the densities of all their elements.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    levels = {}

    def nodes_at(level):
        if level not in levels:
            levels[level] = tree.level_nodes(level)
        return levels[level]

    leaves = tree.leaves
    leaf_pos = {id(n): i for i, n in enumerate(leaves)}

    def leaf_skeleton(node):
        # neighbours along the curve; leaves can sit at different depths
        t = leaf_pos[id(node)]
        proxy = proxy_for_elements(mesh, node.indices, radius_factor, n_p)
        return build_y_skeleton(mesh, node.indices, proxy, k1, tol, variant,
                                _adjacent(leaves, t), cluster_id=t)

    if scheme == "single_level" or tree.root.is_leaf:
        return [leaf_skeleton(n) for n in leaves]

    def recurse(node):
        if node.is_leaf:
            return leaf_skeleton(node)
        kids = [recurse(c) for c in node.children]
        candidates = np.concatenate([k.indices for k in kids])
        same_level = nodes_at(node.level)
        pos_in_level = next(i for i, n in enumerate(same_level) if n is node)
        proxy = proxy_for_elements(mesh, node.indices, radius_factor, n_p)
        near = _near_elements(mesh, proxy, _adjacent(same_level, pos_in_level)) \
            if variant == "original" else None
        pos, T, rows = _compress(mesh, candidates, proxy, k1, tol, near)
        V_kids = scipy.linalg.block_diag(*[k.V for k in kids])
        W_kids = scipy.linalg.block_diag(*[k.W for k in kids])
        return YSkeleton(pos_in_level, node.indices, candidates[pos], T @ V_kids, T @ W_kids,
                         "multi_level", variant, float(tol), node.level, rows)

    top = [recurse(c) for c in tree.root.children]
    for i, sk in enumerate(top):
        sk.cluster_id = i
    logger.debug("multi-level skeleton sizes: %s", [sk.s_y for sk in top])
    return top


def check_coverage(yskels, N):
    """Raise unless the skeleton clusters partition 0..N-1."""
    seen = np.zeros(N, dtype=int)
    for sk in yskels:
        seen[sk.elements] += 1
    if np.any(seen != 1):
        missing = np.nonzero(seen == 0)[0]
        raise ValueError(f"y-skeletons do not partition the boundary ({missing.size} elements uncovered, "
                         f"{np.count_nonzero(seen > 1)} covered twice)")


# -- cache files ---------------------------------------------------------------

CACHE_FORMAT = "proxywave-skeletons/1"


def cache_key(mesh_digest, tol, variant=None, scheme=None, **extra):
    parts = {"mesh": mesh_digest, "tol": repr(float(tol)), "variant": variant, "scheme": scheme}
    parts.update({k: repr(v) for k, v in sorted(extra.items())})
    return hashlib.sha256(json.dumps(parts, sort_keys=True).encode()).hexdigest()[:20]


def save_y_skeletons(path, yskels, key):
    arrays = {}
    meta = {"format": CACHE_FORMAT, "key": key, "kind": "y", "skeletons": []}
    for i, sk in enumerate(yskels):
        for name in ("elements", "indices", "V", "W"):
            arrays[f"{i}_{name}"] = getattr(sk, name)
        meta["skeletons"].append({"cluster_id": sk.cluster_id, "scheme": sk.scheme,
                                  "variant": sk.variant, "tol": sk.tol, "level": sk.level,
                                  "n_test_rows": sk.n_test_rows})
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_y_skeletons(path, key=None):
    with np.load(path, allow_pickle=False) as f:
        meta = json.loads(str(f["meta"]))
        _check_meta(meta, key, "y")
        return [YSkeleton(m["cluster_id"], f[f"{i}_elements"], f[f"{i}_indices"], f[f"{i}_V"],
                          f[f"{i}_W"], m["scheme"], m["variant"], m["tol"], m["level"],
                          m["n_test_rows"])
                for i, m in enumerate(meta["skeletons"])]


def save_x_skeleton(path, xskel, key):
    meta = {"format": CACHE_FORMAT, "key": key, "kind": "x", "layout_id": xskel.layout_id,
            "tol": xskel.tol}
    np.savez(path, meta=np.array(json.dumps(meta)), indices=xskel.indices, U=xskel.U,
             offsets=xskel.offsets)


def load_x_skeleton(path, key=None):
    with np.load(path, allow_pickle=False) as f:
        meta = json.loads(str(f["meta"]))
        _check_meta(meta, key, "x")
        return XSkeleton(f["indices"], f["U"], meta["layout_id"], f["offsets"], meta["tol"])


def _check_meta(meta, key, kind):
    if meta.get("format") != CACHE_FORMAT or meta.get("kind") != kind:
        raise ValueError(f"not a {kind}-skeleton cache file")
    if key is not None and meta.get("key") != key:
        raise KeyError(f"cache key mismatch: file has {meta.get('key')}, wanted {key}")
