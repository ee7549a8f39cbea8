"""Admissible meshes: graded 1D partitions and uniform rectangular grids.

Every inner interface sigma = K|L carries its measure m(sigma), the distance
d_KL between the two centers, the transmissivity tau = m(sigma)/d_KL and the
unit normal pointing from K to L.  Boundary faces only carry geometry: the
zero-flux condition means they never enter the flux balance.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidMeshError, MeshSizeError
from .expr import Expression


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    centers: np.ndarray          # (n, dim)
    volumes: np.ndarray          # (n,)
    diameters: np.ndarray        # (n,)
    iface_cells: np.ndarray      # (ni, 2) int, [K, L]
    iface_measure: np.ndarray    # (ni,)
    iface_dist: np.ndarray       # (ni,)
    iface_half_dist: np.ndarray  # (ni, 2): d(x_K, sigma), d(x_L, sigma)
    iface_normal: np.ndarray     # (ni, dim), unit, K -> L
    iface_center: np.ndarray     # (ni, dim)
    iface_vertices: np.ndarray   # (ni, 2, dim) face endpoints (coincide in 1D)
    bface_cell: np.ndarray       # (nb,) int
    bface_measure: np.ndarray    # (nb,)
    bface_normal: np.ndarray     # (nb, dim) outward
    bface_center: np.ndarray     # (nb, dim)
    layout: dict = field(default_factory=dict)
    # structured position -> cell id; identity unless the mesh was relabeled
    cell_ids: np.ndarray = None

    def __post_init__(self):
        for name in ("centers", "volumes", "diameters", "iface_cells", "iface_measure",
                     "iface_dist", "iface_half_dist", "iface_normal", "iface_center",
                     "iface_vertices", "bface_cell", "bface_measure", "bface_normal",
                     "bface_center", "cell_ids"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_cells(self):
        return self.volumes.shape[0]

    @property
    def n_interfaces(self):
        return self.iface_cells.shape[0]

    @property
    def n_boundary_faces(self):
        return self.bface_cell.shape[0]

    @property
    def transmissivity(self):
        return self.iface_measure / self.iface_dist

    @property
    def h(self):
        return float(self.diameters.max())

    @property
    def measure(self):
        return float(self.volumes.sum())

    @property
    def bounds(self):
        """Axis-aligned bounding box as a list of (lo, hi) per dimension."""
        if self.layout["kind"] == "interval":
            nodes = self.layout["nodes"]
            return [(float(nodes[0]), float(nodes[-1]))]
        return [(0.0, self.layout["lx"]), (0.0, self.layout["ly"])]

    def cell_interfaces(self, cell):
        """Indices of the inner interfaces in eps_K, the face set of ``cell``."""
        return np.flatnonzero((self.iface_cells[:, 0] == cell) | (self.iface_cells[:, 1] == cell))

    def cell_boxes(self):
        """Per-cell ``(lo, hi)`` extents along each axis, shape ``(n, dim, 2)``."""
        if self.dim == 1:
            half = 0.5 * self.volumes[:, None]
        else:
            half = 0.5 * np.array([self.layout["lx"] / self.layout["nx"],
                                   self.layout["ly"] / self.layout["ny"]])[None, :]
            half = np.broadcast_to(half, self.centers.shape)
        return np.stack([self.centers - half, self.centers + half], axis=-1)

    def diamond_halves(self):
        """Measures and centroids of the two halves D∩K, D∩L of each diamond.

        Returns ``(measure, centroid)`` with shapes ``(ni, 2)`` and
        ``(ni, 2, dim)``.  In 1D a half is the segment from the cell center to
        the interface; on rectangles it is the triangle spanned by the cell
        center and the two face endpoints.
        """
        meas = self.iface_measure[:, None] * self.iface_half_dist / self.dim
        xk = self.centers[self.iface_cells]
        if self.dim == 1:
            cent = 0.5 * (xk + self.iface_center[:, None, :])
        else:
            v = self.iface_vertices
            cent = (xk + v[:, None, 0, :] + v[:, None, 1, :]) / 3.0
        return meas, cent

    def locate(self, points):
        """Cell index containing each point (cells are closed on the left)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
            pts = pts.T
        if self.layout["kind"] == "interval":
            nodes = self.layout["nodes"]
            x = pts[:, 0]
            tol = 1e-12 * (nodes[-1] - nodes[0])
            if np.any(x < nodes[0] - tol) | np.any(x > nodes[-1] + tol):
                raise DomainError("point outside the interval")
            idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
        else:
            lx, ly, nx, ny = (self.layout[k] for k in ("lx", "ly", "nx", "ny"))
            x, y = pts[:, 0], pts[:, 1]
            tol = 1e-12 * max(lx, ly)
            if np.any((x < -tol) | (x > lx + tol) | (y < -tol) | (y > ly + tol)):
                raise DomainError("point outside the rectangle")
            i = np.clip(np.floor(x / (lx / nx)).astype(int), 0, nx - 1)
            j = np.clip(np.floor(y / (ly / ny)).astype(int), 0, ny - 1)
            idx = j * nx + i
        return self.cell_ids[idx]

    def refine(self):
        """Split every cell in two (1D) or four (2D); the result is nested."""
        if self.layout["kind"] == "interval":
            nodes = self.layout["nodes"]
            mids = 0.5 * (nodes[:-1] + nodes[1:])
            fine = np.empty(2 * len(nodes) - 1)
            fine[0::2] = nodes
            fine[1::2] = mids
            return interval_mesh_from_nodes(fine)
        return build_rectangle_mesh(self.layout["lx"], self.layout["ly"],
                                    2 * self.layout["nx"], 2 * self.layout["ny"])

    def permuted(self, perm):
        """Same geometry with cells relabeled: new cell ``i`` is old cell ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return Mesh(
            dim=self.dim,
            centers=self.centers[perm].copy(),
            volumes=self.volumes[perm].copy(),
            diameters=self.diameters[perm].copy(),
            iface_cells=inv[self.iface_cells],
            iface_measure=self.iface_measure.copy(),
            iface_dist=self.iface_dist.copy(),
            iface_half_dist=self.iface_half_dist.copy(),
            iface_normal=self.iface_normal.copy(),
            iface_center=self.iface_center.copy(),
            iface_vertices=self.iface_vertices.copy(),
            bface_cell=inv[self.bface_cell],
            bface_measure=self.bface_measure.copy(),
            bface_normal=self.bface_normal.copy(),
            bface_center=self.bface_center.copy(),
            layout=self.layout,
            cell_ids=inv[self.cell_ids],
        )

    def to_dict(self):
        if self.layout["kind"] == "interval":
            return {"kind": "interval", "dim": 1, "nodes": [float(v) for v in self.layout["nodes"]]}
        return {"kind": "rectangle", "dim": 2,
                **{k: self.layout[k] for k in ("lx", "ly", "nx", "ny")}}


def mesh_from_dict(data):
    kind = data.get("kind")
    if kind == "interval":
        if "nodes" in data:
            return interval_mesh_from_nodes(np.asarray(data["nodes"], dtype=float))
        return build_interval_mesh(data["a"], data["b"], data["n"], data.get("grading"))
    if kind == "rectangle":
        return build_rectangle_mesh(data["lx"], data["ly"], data["nx"], data["ny"])
    raise InvalidMeshError(f"unknown mesh kind {kind!r}")


def _as_grading(grading):
    if grading is None or callable(grading):
        return grading
    expr = Expression(grading, ("s",))
    return lambda s: expr(s=s)


def build_interval_mesh(a, b, n, grading=None):
    """Partition of (a, b) into ``n`` cells.

    ``grading`` maps [0, 1] onto itself, strictly increasing; node ``i`` is
    placed at ``a + (b - a) * grading(i / n)``.  It may be a callable or an
    expression string in the variable ``s``.
    """
    if int(n) != n or n < 2:
        raise MeshSizeError(f"need at least 2 cells, got {n}")
    n = int(n)
    if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
        raise InvalidMeshError(f"need a < b, got ({a}, {b})")
    s = np.linspace(0.0, 1.0, n + 1)
    fn = _as_grading(grading)
    if fn is not None:
        g = np.asarray(fn(s), dtype=float) * np.ones_like(s)
        if not np.all(np.isfinite(g)):
            raise InvalidMeshError("grading produced non-finite values")
        if abs(g[0]) > 1e-12 or abs(g[-1] - 1.0) > 1e-12:
            raise InvalidMeshError("grading must map 0 -> 0 and 1 -> 1")
        if np.any(np.diff(g) <= 0.0):
            raise InvalidMeshError("grading is not strictly increasing")
        g[0], g[-1] = 0.0, 1.0
        s = g
    nodes = a + (b - a) * s
    nodes[-1] = b
    return interval_mesh_from_nodes(nodes)


def interval_mesh_from_nodes(nodes):
    nodes = np.asarray(nodes, dtype=float).copy()
    if nodes.ndim != 1 or nodes.size < 3:
        raise MeshSizeError("need at least 2 cells")
    if np.any(np.diff(nodes) <= 0.0):
        raise InvalidMeshError("nodes must be strictly increasing")
    n = nodes.size - 1
    nodes.setflags(write=False)
    width = np.diff(nodes)
    xc = 0.5 * (nodes[:-1] + nodes[1:])
    left = np.arange(n - 1)
    right = left + 1
    dist = xc[right] - xc[left]
    half = np.stack([nodes[1:-1] - xc[left], xc[right] - nodes[1:-1]], axis=1)
    iface_center = nodes[1:-1, None]
    return Mesh(
        dim=1,
        centers=xc[:, None],
        volumes=width,
        diameters=width.copy(),
        iface_cells=np.stack([left, right], axis=1),
        iface_measure=np.ones(n - 1),
        iface_dist=dist,
        iface_half_dist=half,
        iface_normal=np.ones((n - 1, 1)),
        iface_center=iface_center,
        iface_vertices=np.repeat(iface_center[:, None, :], 2, axis=1),
        bface_cell=np.array([0, n - 1]),
        bface_measure=np.ones(2),
        bface_normal=np.array([[-1.0], [1.0]]),
        bface_center=np.array([[nodes[0]], [nodes[-1]]]),
        layout={"kind": "interval", "nodes": nodes},
        cell_ids=np.arange(n),
    )


def build_rectangle_mesh(lx, ly, nx, ny):
    """Uniform ``nx`` x ``ny`` grid of (0, lx) x (0, ly); cell id = j*nx + i."""
    if not (lx > 0 and ly > 0):
        raise InvalidMeshError(f"extents must be positive, got ({lx}, {ly})")
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise MeshSizeError(f"need nx, ny >= 2, got ({nx}, {ny})")
    lx, ly, nx, ny = float(lx), float(ly), int(nx), int(ny)
    dx, dy = lx / nx, ly / ny
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    cid = j * nx + i
    centers = np.stack([(i + 0.5) * dx, (j + 0.5) * dy], axis=1)
    n = nx * ny

    # vertical interfaces (normal +x), then horizontal ones (normal +y)
    vi, vj = np.meshgrid(np.arange(nx - 1), np.arange(ny))
    vi, vj = vi.ravel(), vj.ravel()
    hi, hj = np.meshgrid(np.arange(nx), np.arange(ny - 1))
    hi, hj = hi.ravel(), hj.ravel()
    nv, nh = vi.size, hi.size
    cells = np.concatenate([
        np.stack([vj * nx + vi, vj * nx + vi + 1], axis=1),
        np.stack([hj * nx + hi, (hj + 1) * nx + hi], axis=1),
    ])
    measure = np.concatenate([np.full(nv, dy), np.full(nh, dx)])
    dist = np.concatenate([np.full(nv, dx), np.full(nh, dy)])
    normal = np.concatenate([np.tile([1.0, 0.0], (nv, 1)), np.tile([0.0, 1.0], (nh, 1))])
    vx = (vi + 1) * dx
    hy = (hj + 1) * dy
    fc = np.concatenate([np.stack([vx, (vj + 0.5) * dy], axis=1),
                         np.stack([(hi + 0.5) * dx, hy], axis=1)])
    verts = np.concatenate([
        np.stack([np.stack([vx, vj * dy], axis=1), np.stack([vx, (vj + 1) * dy], axis=1)], axis=1),
        np.stack([np.stack([hi * dx, hy], axis=1), np.stack([(hi + 1) * dx, hy], axis=1)], axis=1),
    ])

    b_cell, b_meas, b_norm, b_cent = [], [], [], []
    for jj in range(ny):
        for ii, nrm, xf in ((0, -1.0, 0.0), (nx - 1, 1.0, lx)):
            b_cell.append(jj * nx + ii)
            b_meas.append(dy)
            b_norm.append([nrm, 0.0])
            b_cent.append([xf, (jj + 0.5) * dy])
    for ii in range(nx):
        for jj, nrm, yf in ((0, -1.0, 0.0), (ny - 1, 1.0, ly)):
            b_cell.append(jj * nx + ii)
            b_meas.append(dx)
            b_norm.append([0.0, nrm])
            b_cent.append([(ii + 0.5) * dx, yf])

    return Mesh(
        dim=2,
        centers=centers[np.argsort(cid)],
        volumes=np.full(n, dx * dy),
        diameters=np.full(n, np.hypot(dx, dy)),
        iface_cells=cells,
        iface_measure=measure,
        iface_dist=dist,
        iface_half_dist=0.5 * np.stack([dist, dist], axis=1),
        iface_normal=normal,
        iface_center=fc,
        iface_vertices=verts,
        bface_cell=np.array(b_cell),
        bface_measure=np.array(b_meas),
        bface_normal=np.array(b_norm),
        bface_center=np.array(b_cent),
        layout={"kind": "rectangle", "lx": lx, "ly": ly, "nx": nx, "ny": ny},
        cell_ids=np.arange(n),
    )
