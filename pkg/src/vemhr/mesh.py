"""Polygonal meshes with globally oriented edges.

Edges are stored once, oriented from the lower to the higher global vertex
index.  The unit tangent t points from p to q and the unit normal is the
clockwise rotation n = (t_y, -t_x).  A cell that traverses the edge in the
canonical direction on its CCW boundary walk sees n as its outward normal
and gets sign +1; the neighbour on the other side gets -1.  Traction degrees
of freedom attached to an edge are therefore shared verbatim by both cells,
which is what makes the stress space H(div)-conforming.
"""

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .quadrature import polygon_rule

__all__ = [
    "perp",
    "polygon_metrics",
    "PolyMesh",
    "build_topology",
    "MeshError",
    "QualityReport",
    "check_assumptions",
    "cook_domain",
    "save_mesh",
    "load_mesh",
    "write_mesh_text",
    "mesh_checksum",
]

MESH_FORMAT_HEADER = "vemhr-mesh v1"


class MeshError(ValueError):
    """Raised for topological or geometric defects in a mesh definition."""


def perp(v):
    """Rotation (c1, c2) -> (c2, -c1), applied to the last axis."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = v[..., 1]
    out[..., 1] = -v[..., 0]
    return out


def polygon_metrics(coords):
    """Area, centroid, diameter and second moment of a simple CCW polygon.

    Area and centroid come from the shoelace formulas.  The centered second
    moment m_E = integral of |x - x_C|^2 is evaluated with a degree-2 Gauss
    rule on the centroid fan, which is exact for the quadratic integrand.
    """
    area, centroid, diameter, q = _cell_metrics(np.asarray(coords, dtype=float))
    return area, centroid, diameter, float(np.trace(q))


def _cell_metrics(coords):
    nxt = np.roll(coords, -1, axis=0)
    cross = coords[:, 0] * nxt[:, 1] - nxt[:, 0] * coords[:, 1]
    area = 0.5 * cross.sum()
    if area <= 0.0:
        raise MeshError("degenerate polygon: signed area <= 0")
    centroid = (coords + nxt).T @ cross / (6.0 * area)
    diffs = coords[:, None, :] - coords[None, :, :]
    diameter = np.sqrt((diffs**2).sum(-1).max())
    return area, centroid, diameter, _second_moment_tensor(coords, centroid)


def _second_moment_tensor(coords, centroid):
    """Integral of (x - x_C) outer (x - x_C) by degree-2 fan quadrature."""
    rule = polygon_rule(coords, 2, centroid=np.asarray(centroid, dtype=float))
    xi = rule.points - centroid
    return np.einsum("q,qa,qb->ab", rule.weights, xi, xi)


class PolyMesh:
    """Immutable polygonal mesh with signed cell/edge incidence tables.

    Construction is done by :func:`build_topology`; all derived geometric
    quantities (areas, centroids, diameters, second moments, edge frames)
    are precomputed there.
    """

    def __init__(self, vertices, cell_vertices, cell_edges, cell_signs,
                 edge_nodes, edge_cells, metadata=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cell_vertices = [np.asarray(v, dtype=int) for v in cell_vertices]
        self.cell_edges = [np.asarray(e, dtype=int) for e in cell_edges]
        self.cell_signs = [np.asarray(s, dtype=float) for s in cell_signs]
        self.edge_nodes = np.asarray(edge_nodes, dtype=int)
        self.edge_cells = np.asarray(edge_cells, dtype=int)
        self.metadata = dict(metadata or {})

        p = self.vertices[self.edge_nodes[:, 0]]
        q = self.vertices[self.edge_nodes[:, 1]]
        d = q - p
        self.edge_lengths = np.sqrt((d**2).sum(1))
        if np.any(self.edge_lengths <= 0.0):
            raise MeshError("zero-length edge")
        self.edge_tangents = d / self.edge_lengths[:, None]
        self.edge_normals = perp(self.edge_tangents)
        self.edge_midpoints = 0.5 * (p + q)

        n_cells = len(self.cell_vertices)
        self.areas = np.empty(n_cells)
        self.centroids = np.empty((n_cells, 2))
        self.diameters = np.empty(n_cells)
        self.second_moments = np.empty(n_cells)
        self.moment_tensors = np.empty((n_cells, 2, 2))
        for c, loop in enumerate(self.cell_vertices):
            a, xc, h, q = _cell_metrics(self.vertices[loop])
            self.areas[c] = a
            self.centroids[c] = xc
            self.diameters[c] = h
            self.second_moments[c] = float(np.trace(q))
            self.moment_tensors[c] = q

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cell_vertices)

    @property
    def n_edges(self):
        return len(self.edge_nodes)

    @property
    def boundary_edges(self):
        return np.nonzero((self.edge_cells < 0).any(axis=1))[0]

    @property
    def interior_edges(self):
        return np.nonzero((self.edge_cells >= 0).all(axis=1))[0]

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    def cell_coords(self, c):
        return self.vertices[self.cell_vertices[c]]

    def boundary_sign(self, e):
        """Outward sign of the single cell incident to a boundary edge."""
        plus, minus = self.edge_cells[e]
        if plus >= 0 and minus >= 0:
            raise MeshError(f"edge {e} is interior")
        return 1.0 if plus >= 0 else -1.0

    def __repr__(self):
        return (f"PolyMesh(vertices={self.n_vertices}, cells={self.n_cells}, "
                f"edges={self.n_edges})")


def _is_simple(coords):
    """Reject self-intersecting vertex loops (O(k^2) segment test)."""
    k = len(coords)
    seg_a = coords
    seg_b = np.roll(coords, -1, axis=0)
    for i in range(k):
        for j in range(i + 1, k):
            if j == i + 1 or (i == 0 and j == k - 1):
                continue  # adjacent segments share a vertex
            if _segments_cross(seg_a[i], seg_b[i], seg_a[j], seg_b[j]):
                return False
    return True


def _segments_cross(a, b, c, d):
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def build_topology(vertices, cell_vertex_loops, metadata=None,
                   check_simple=True):
    """Build a :class:`PolyMesh` from vertex coordinates and CCW cell loops.

    Edges are deduplicated with canonical lower-index-first orientation and
    cell-side signs are assigned from the traversal direction.  Raises
    :class:`MeshError` on non-manifold edges (three or more incident cells),
    cells wound clockwise, degenerate edges, or inconsistent orientation of
    two neighbouring cells.
    """
    vertices = np.asarray(vertices, dtype=float)
    if not np.all(np.isfinite(vertices)):
        raise MeshError("non-finite vertex coordinates")

    edge_index = {}
    edge_nodes = []
    edge_cells = []
    cell_edges = []
    cell_signs = []
    loops = []

    for c, loop in enumerate(cell_vertex_loops):
        loop = np.asarray(loop, dtype=int)
        if len(loop) < 3:
            raise MeshError(f"cell {c} has fewer than 3 vertices")
        if len(np.unique(loop)) != len(loop):
            raise MeshError(f"cell {c} repeats a vertex")
        coords = vertices[loop]
        nxt = np.roll(coords, -1, axis=0)
        area2 = (coords[:, 0] * nxt[:, 1] - nxt[:, 0] * coords[:, 1]).sum()
        if area2 <= 0.0:
            raise MeshError(f"cell {c} is not counterclockwise")
        if check_simple and not _is_simple(coords):
            raise MeshError(f"cell {c} is self-intersecting")
        loops.append(loop)

        eids = np.empty(len(loop), dtype=int)
        sgns = np.empty(len(loop))
        for k in range(len(loop)):
            a, b = int(loop[k]), int(loop[(k + 1) % len(loop)])
            if a == b:
                raise MeshError(f"cell {c} contains a degenerate edge")
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edge_nodes)
                edge_index[key] = e
                edge_nodes.append(key)
                edge_cells.append([-1, -1])
            sign = 1.0 if a < b else -1.0
            side = 0 if sign > 0 else 1
            if edge_cells[e][side] != -1:
                raise MeshError(
                    f"edge {key} has inconsistent orientation or more than "
                    f"two incident cells")
            edge_cells[e][side] = c
            eids[k] = e
            sgns[k] = sign
        cell_edges.append(eids)
        cell_signs.append(sgns)

    mesh = PolyMesh(vertices, loops, cell_edges, cell_signs,
                    np.array(edge_nodes, dtype=int),
                    np.array(edge_cells, dtype=int), metadata)

    # Discrete divergence theorem for constants: closed signed boundary.
    for c in range(mesh.n_cells):
        e = mesh.cell_edges[c]
        s = mesh.cell_signs[c]
        flux = (s[:, None] * mesh.edge_lengths[e, None]
                * mesh.edge_normals[e]).sum(0)
        if np.abs(flux).max() > 1e-10 * max(mesh.diameters[c], 1.0):
            raise MeshError(f"cell {c} boundary is not closed")
    return mesh


@dataclass
class QualityReport:
    """Shape-regularity diagnostics against the mesh assumptions.

    ``vertex_ratio`` is the minimum pairwise vertex distance over h_E, and
    ``star_ratio`` estimates (inscribed-ball radius of the visibility
    kernel) / h_E.  Cells below the supplied thresholds are listed in
    ``violations``.
    """

    vertex_ratio: np.ndarray
    star_ratio: np.ndarray
    gamma_min: float
    c_min: float
    violations: list = field(default_factory=list)

    @property
    def min_vertex_ratio(self):
        return float(self.vertex_ratio.min())

    @property
    def min_star_ratio(self):
        return float(self.star_ratio.min())

    @property
    def ok(self):
        return not self.violations


def _kernel_polygon(coords):
    """Visibility kernel: clip the polygon by each of its own edge lines."""
    poly = coords
    for i in range(len(coords)):
        a = coords[i]
        b = coords[(i + 1) % len(coords)]
        t = b - a
        n = perp(t)  # outward for a CCW loop
        poly = _clip(poly, n, float(n @ a))
        if len(poly) < 3:
            return None
    return poly


def _clip(poly, n, b):
    """Keep the part of a polygon with n.x <= b (Sutherland-Hodgman step)."""
    if len(poly) == 0:
        return poly
    d = poly @ n - b
    if np.all(d <= 0.0):
        return poly
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if d[i] <= 0.0:
            out.append(poly[i])
        if (d[i] <= 0.0) != (d[j] <= 0.0):
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def _inscribed_radius(coords):
    """Chebyshev radius of a convex polygon via a small LP."""
    from scipy.optimize import linprog

    a = coords
    b = np.roll(coords, -1, axis=0)
    t = b - a
    lengths = np.linalg.norm(t, axis=1)
    keep = lengths > 1e-12 * lengths.max()  # clipping may duplicate vertices
    a, t, lengths = a[keep], t[keep], lengths[keep]
    k = len(a)
    if k < 3:
        return 0.0
    n = perp(t) / lengths[:, None]
    # maximize r subject to n_i . x + r <= n_i . a_i
    A_ub = np.column_stack([n, np.ones(k)])
    b_ub = np.einsum("ij,ij->i", n, a)
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None)] * 3, method="highs")
    if not res.success:
        return 0.0
    return max(res.x[2], 0.0)


def check_assumptions(mesh, gamma_min=0.0, c_min=0.0):
    """Per-cell shape-regularity report (reporting only, never raises)."""
    nc = mesh.n_cells
    vr = np.empty(nc)
    sr = np.empty(nc)
    for c in range(nc):
        coords = mesh.cell_coords(c)
        h = mesh.diameters[c]
        diffs = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diffs**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        vr[c] = dist.min() / h
        kernel = _kernel_polygon(coords)
        sr[c] = 0.0 if kernel is None else _inscribed_radius(kernel) / h
    report = QualityReport(vertex_ratio=vr, star_ratio=sr,
                           gamma_min=gamma_min, c_min=c_min)
    bad = np.nonzero((sr < gamma_min) | (vr < c_min))[0]
    report.violations = [int(c) for c in bad]
    return report


def cook_domain():
    """Tapered cantilever quadrilateral: vertices (0,0), (48,44), (48,60), (0,44)."""
    return np.array([[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0]])


def write_mesh_text(mesh) -> str:
    """Serialize to the versioned text format (17 significant digits)."""
    buf = io.StringIO()
    buf.write(MESH_FORMAT_HEADER + "\n")
    buf.write(f"{mesh.n_vertices}\n")
    for x, y in mesh.vertices:
        buf.write(f"{x:.17g} {y:.17g}\n")
    buf.write(f"{mesh.n_cells}\n")
    for loop in mesh.cell_vertices:
        buf.write(" ".join(str(int(v)) for v in loop) + "\n")
    return buf.getvalue()


def save_mesh(path, mesh):
    with open(path, "w") as fh:
        fh.write(write_mesh_text(mesh))


def load_mesh(path):
    """Load a mesh file and rebuild the full topology."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != MESH_FORMAT_HEADER:
        raise MeshError(f"not a '{MESH_FORMAT_HEADER}' file: {path}")
    nv = int(lines[1])
    verts = np.array([[float(t) for t in ln.split()] for ln in lines[2:2 + nv]])
    nc = int(lines[2 + nv])
    loops = [np.array([int(t) for t in ln.split()], dtype=int)
             for ln in lines[3 + nv:3 + nv + nc]]
    if len(loops) != nc:
        raise MeshError("truncated mesh file")
    return build_topology(verts, loops)


def mesh_checksum(mesh) -> str:
    """SHA-256 of the canonical text serialization."""
    return hashlib.sha256(write_mesh_text(mesh).encode()).hexdigest()
