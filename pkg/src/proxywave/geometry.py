"""Boundary meshes, evaluation-point grids, proxy circles and the cluster tree."""

from dataclasses import dataclass, field
import hashlib

import numpy as np


@dataclass(frozen=True)
class BoundaryMesh:
    """Piecewise-constant discretization of a closed curve.

    ``normals`` point out of the scatterer, into the exterior medium.
    Elements are ordered counterclockwise.
    """

    midpoints: np.ndarray  # (N, 2)
    normals: np.ndarray  # (N, 2)
    weights: np.ndarray  # (N,) arc lengths
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    @property
    def N(self):
        return len(self.weights)

    def digest(self):
        """Stable content hash, used as a cache key."""
        h = hashlib.sha256()
        for arr in (self.midpoints, self.normals, self.weights):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()[:16]


def discretize_circle(center, radius, N):
    """Split a circle into ``N`` equal arcs; element j has its midpoint at angle 2pi(j+1/2)/N."""
    if int(N) != N or N < 4:
        raise ValueError(f"need at least 4 boundary elements, got N={N}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    N = int(N)
    cx, cy = float(center[0]), float(center[1])
    theta = 2.0 * np.pi * (np.arange(N) + 0.5) / N
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    midpoints = np.column_stack([cx + radius * normals[:, 0], cy + radius * normals[:, 1]])
    weights = np.full(N, 2.0 * np.pi * radius / N)
    return BoundaryMesh(midpoints, normals, weights, (cx, cy), float(radius))


@dataclass(frozen=True)
class UnitCell:
    center: np.ndarray  # (2,)
    points: np.ndarray  # (m, 2)
    size: float = 1.0

    @property
    def offsets(self):
        return self.points - self.center

    def bounding_box(self):
        half = 0.5 * self.size
        return self.center - half, self.center + half


@dataclass(frozen=True)
class EvalGrid:
    cells: tuple
    m: int
    cell_size: float
    layout: str = "uniform_grid"

    @property
    def p_x(self):
        return len(self.cells)

    @property
    def points(self):
        """All evaluation points in global order: cell-major, then local index."""
        return np.concatenate([c.points for c in self.cells], axis=0)

    @property
    def centers(self):
        return np.array([c.center for c in self.cells])

    def global_index(self, cell_number, local_index):
        return cell_number * self.m + local_index

    def local_index(self, global_index):
        return divmod(global_index, self.m)


def cell_layout(points_per_cell, cell_size=1.0, layout="uniform_grid"):
    """Point offsets from the cell center for one unit cell."""
    side = int(round(np.sqrt(points_per_cell)))
    if side * side != points_per_cell:
        raise ValueError(f"points_per_cell must be a perfect square, got {points_per_cell}")
    if layout == "uniform_grid":
        t = (np.arange(side) + 0.5) / side - 0.5
    elif layout == "tensor_chebyshev":
        # first-kind Chebyshev nodes on [-1/2, 1/2], strictly inside the cell
        t = -0.5 * np.cos(np.pi * (np.arange(side) + 0.5) / side)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    t = t * cell_size
    gx, gy = np.meshgrid(t, t, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def build_eval_grid(inner=1.0, outer=3.0, cell_size=1.0, points_per_cell=100,
                    layout="uniform_grid", scatterer=None):
    """Tile the square frame ``inner < |x|_inf < outer`` with square unit cells.

    ``scatterer`` is an optional ``(center, radius)``; every point must lie
    strictly outside it.
    """
    if not 0 <= inner < outer:
        raise ValueError(f"frame bounds must satisfy 0 <= inner < outer, got {inner}, {outer}")
    if not cell_size > 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    n_outer = (2.0 * outer) / cell_size
    n_inner = (2.0 * inner) / cell_size
    if abs(n_outer - round(n_outer)) > 1e-9 or abs(n_inner - round(n_inner)) > 1e-9:
        raise ValueError(
            f"cell_size {cell_size} does not tile the frame {inner} < |x|_inf < {outer} exactly")
    n_outer = int(round(n_outer))
    offsets = cell_layout(points_per_cell, cell_size, layout)

    cells = []
    # row-major from the bottom-left corner so neighbouring cells get nearby numbers
    for row in range(n_outer):
        for col in range(n_outer):
            center = np.array([-outer + (col + 0.5) * cell_size, -outer + (row + 0.5) * cell_size])
            if np.max(np.abs(center)) - 0.5 * cell_size < inner - 1e-12:
                continue
            cells.append(UnitCell(center, center + offsets, float(cell_size)))

    if scatterer is not None:
        (cx, cy), r = scatterer
        for cell in cells:
            if np.min(np.hypot(cell.points[:, 0] - cx, cell.points[:, 1] - cy)) <= r:
                raise ValueError(f"cell at {cell.center.tolist()} has points inside the scatterer")
    return EvalGrid(tuple(cells), int(points_per_cell), float(cell_size), layout)


@dataclass(frozen=True)
class ProxySurface:
    center: np.ndarray
    radius: float
    points: np.ndarray  # (n_p, 2)

    @property
    def n_p(self):
        return len(self.points)

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        return np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1]) < self.radius


def circle_points(center, radius, n):
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])


def build_proxy(lo, hi, radius_factor=1.5, n_p=64, enclosed=None):
    """Proxy circle around the box ``[lo, hi]``.

    The radius is ``radius_factor`` times the mean side length of the box. The
    box's half-diagonal (or the farthest of ``enclosed`` points, if given) must
    be strictly inside.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    center = 0.5 * (lo + hi)
    size = float(np.mean(hi - lo))
    radius = radius_factor * size
    if enclosed is None:
        reach = 0.5 * float(np.hypot(*(hi - lo)))
    else:
        enclosed = np.atleast_2d(enclosed)
        reach = float(np.max(np.hypot(enclosed[:, 0] - center[0], enclosed[:, 1] - center[1])))
    if not radius > reach:
        raise ValueError(
            f"proxy radius {radius:.6g} does not strictly enclose the object (reach {reach:.6g})")
    return ProxySurface(center, radius, circle_points(center, radius, int(n_p)))


def proxy_for_cell(cell, radius_factor=1.5, n_p=64):
    lo, hi = cell.bounding_box()
    return build_proxy(lo, hi, radius_factor, n_p, enclosed=cell.points)


def proxy_for_elements(mesh, indices, radius_factor=1.5, n_p=64):
    pts = mesh.midpoints[indices]
    return build_proxy(pts.min(axis=0), pts.max(axis=0), radius_factor, n_p, enclosed=pts)


@dataclass
class ClusterNode:
    start: int
    stop: int
    level: int
    children: list = field(default_factory=list)

    @property
    def indices(self):
        return np.arange(self.start, self.stop)

    @property
    def is_leaf(self):
        return not self.children


@dataclass
class ClusterTree:
    """Binary tree over contiguous ranges of boundary elements (0-based)."""

    root: ClusterNode
    N: int

    @property
    def leaves(self):
        return self.level_nodes(None)

    @property
    def p_y(self):
        return len(self.leaves)

    @property
    def depth(self):
        return max(n.level for n in self.leaves)

    def level_nodes(self, level):
        """Nodes at ``level`` in left-to-right order; ``None`` gives the leaves."""
        out = []

        def walk(node):
            if (level is None and node.is_leaf) or node.level == level:
                out.append(node)
                return
            for child in node.children:
                walk(child)

        walk(self.root)
        return out


def build_cluster_tree(mesh, leaf_size=200):
    if leaf_size < 8:
        raise ValueError(f"leaf_size must be at least 8, got {leaf_size}")

    def split(start, stop, level):
        node = ClusterNode(start, stop, level)
        if stop - start > leaf_size:
            mid = (start + stop) // 2
            node.children = [split(start, mid, level + 1), split(mid, stop, level + 1)]
        return node

    n = mesh.N if isinstance(mesh, BoundaryMesh) else int(mesh)
    return ClusterTree(split(0, n, 0), n)
