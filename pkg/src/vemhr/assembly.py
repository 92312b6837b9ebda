"""Global saddle-point assembly and sparse direct solution.

Unknown ordering: the 3 traction DOFs of every edge first (c_x, c_y, d per
edge), then the 3 rigid-motion DOFs of every cell (a_x, a_y, b).  The system
is the symmetric indefinite block matrix [[A, B^T], [B, 0]] with right-hand
side [G, -F]: G collects weak displacement (Dirichlet) boundary data and F
the body load against the rigid-motion bases.  Prescribed tractions are
essential conditions on edge DOFs and are imposed by symmetric elimination.
"""

import io
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import element
from .element import RigidMotion, cell_groups, dirichlet_boundary_term, \
    edge_traction_moments
from .mesh import mesh_checksum

__all__ = [
    "DofMap",
    "DisplacementBC",
    "TractionBC",
    "GlobalSystem",
    "Solution",
    "SolveReport",
    "SolverError",
    "assemble",
    "apply_essential_traction",
    "solve",
    "inf_sup_constant",
    "save_solution",
    "load_solution",
]


class SolverError(RuntimeError):
    """Singular or badly solved linear system."""


@dataclass(frozen=True)
class DofMap:
    """Contiguous numbering: 3 stress DOFs per edge, then 3 per cell."""

    n_edges: int
    n_cells: int

    @property
    def n_stress(self):
        return 3 * self.n_edges

    @property
    def n_displacement(self):
        return 3 * self.n_cells

    @property
    def size(self):
        return self.n_stress + self.n_displacement

    def edge_dofs(self, e):
        return np.arange(3 * e, 3 * e + 3)

    def cell_dofs(self, c):
        base = self.n_stress + 3 * c
        return np.arange(base, base + 3)


@dataclass(frozen=True)
class DisplacementBC:
    """Weak (natural) displacement data on a boundary edge; None means zero."""

    g: object = None


@dataclass(frozen=True)
class TractionBC:
    """Prescribed outward traction on a boundary edge (essential on the edge
    DOFs); None means traction-free."""

    traction: object = None


@dataclass
class GlobalSystem:
    """Assembled raw system plus the essential-constraint bookkeeping."""

    mesh: object
    dofmap: DofMap
    matrix: sps.csr_matrix
    rhs: np.ndarray
    constrained_dofs: np.ndarray
    constrained_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def eliminated(self):
        """Symmetric elimination of the essential DOFs.

        Constrained columns are moved to the right-hand side, the rows are
        replaced by the identity, and the prescribed values become the rhs
        entries, so the reduced matrix stays symmetric.
        """
        m = self.matrix
        rhs = self.rhs.copy()
        idx = self.constrained_dofs
        if len(idx) == 0:
            return m, rhs
        x0 = np.zeros(self.dofmap.size)
        x0[idx] = self.constrained_values
        rhs -= m @ x0
        keep = np.ones(self.dofmap.size)
        keep[idx] = 0.0
        Z = sps.diags(keep)
        m = (Z @ m @ Z + sps.diags(1.0 - keep)).tocsr()
        rhs[idx] = self.constrained_values
        return m, rhs


@dataclass
class SolveReport:
    n_dof: int
    n_constrained: int
    residual: float
    tolerance: float


@dataclass
class Solution:
    """Stress DOFs per edge and rigid-motion coefficients per cell."""

    mesh: object
    edge_dofs: np.ndarray
    cell_motions: np.ndarray
    report: SolveReport = None

    def rigid_motion(self, c) -> RigidMotion:
        a = self.cell_motions[c, :2]
        return RigidMotion(a, float(self.cell_motions[c, 2]),
                           self.mesh.centroids[c])

    def cell_stress_dofs(self, c):
        return self.edge_dofs[self.mesh.cell_edges[c]].reshape(-1)


def assemble(mesh, problem, stabilization="stab1", load_degree=6,
             kappa=None) -> GlobalSystem:
    """Assemble the saddle-point system of a problem on a mesh.

    ``problem`` provides ``material``, ``body_force`` (vectorized field or
    None) and ``boundary(mesh, edge) -> DisplacementBC | TractionBC`` for
    boundary edges.  Local matrices are computed group-wise and scattered
    with the cell-side signs already folded in.  ``kappa`` overrides the
    stabilization scale (default: material compliance trace).
    """
    dm = DofMap(mesh.n_edges, mesh.n_cells)
    rows, cols, vals = [], [], []
    material = problem.material

    for g in cell_groups(mesh):
        A = g.a_matrices(material, stabilization, kappa)
        B = g.b_matrices()
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(B)):
            raise SolverError("non-finite local matrix entries")
        m, nd = A.shape[0], A.shape[1]
        gdof = (3 * g.edge_ids[:, :, None]
                + np.arange(3)[None, None, :]).reshape(m, nd)
        cdof = dm.n_stress + 3 * g.cells[:, None] + np.arange(3)[None, :]

        rows.append(np.broadcast_to(gdof[:, :, None], (m, nd, nd)).ravel())
        cols.append(np.broadcast_to(gdof[:, None, :], (m, nd, nd)).ravel())
        vals.append(A.ravel())
        rows.append(np.broadcast_to(cdof[:, :, None], (m, 3, nd)).ravel())
        cols.append(np.broadcast_to(gdof[:, None, :], (m, 3, nd)).ravel())
        vals.append(B.ravel())
        rows.append(np.broadcast_to(gdof[:, :, None], (m, nd, 3)).ravel())
        cols.append(np.broadcast_to(cdof[:, None, :], (m, nd, 3)).ravel())
        vals.append(B.transpose(0, 2, 1).ravel())

    matrix = sps.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dm.size, dm.size)).tocsr()

    rhs = np.zeros(dm.size)
    if problem.body_force is not None:
        loads = element.body_load_vector(mesh, problem.body_force, load_degree)
        rhs[dm.n_stress:] = -loads.reshape(-1)

    system = GlobalSystem(mesh=mesh, dofmap=dm, matrix=matrix, rhs=rhs,
                          constrained_dofs=np.empty(0, dtype=int),
                          constrained_values=np.empty(0),
                          meta={"stabilization": stabilization,
                                "problem": getattr(problem, "name", "")})

    for e in mesh.boundary_edges:
        bc = problem.boundary(mesh, int(e))
        if isinstance(bc, DisplacementBC):
            if bc.g is not None:
                rhs[dm.edge_dofs(e)] += dirichlet_boundary_term(
                    mesh, int(e), bc.g, load_degree)
        elif isinstance(bc, TractionBC):
            apply_essential_traction(system, int(e), bc.traction, load_degree)
        else:
            raise TypeError(f"unsupported boundary condition {bc!r}")
    return system


def apply_essential_traction(system, edge, traction, degree=6):
    """Fix the three DOFs of a boundary edge to the moments of a prescribed
    outward traction (None means traction-free).

    The field gives sigma n against the domain's outward normal; the stored
    DOFs live in the canonical edge frame, so the cell-side sign of the
    single incident cell is folded in.
    """
    mesh = system.mesh
    sign = mesh.boundary_sign(edge)  # raises on interior edges
    if traction is None:
        values = np.zeros(3)
    else:
        c, d = edge_traction_moments(
            mesh, edge, lambda p: sign * np.asarray(traction(p), dtype=float),
            degree)
        values = np.array([c[0], c[1], d])
    dofs = system.dofmap.edge_dofs(edge)
    if np.isin(dofs, system.constrained_dofs).any():
        raise ValueError(f"edge {edge} already constrained")
    system.constrained_dofs = np.concatenate([system.constrained_dofs, dofs])
    system.constrained_values = np.concatenate(
        [system.constrained_values, values])
    return system


def solve(system, tol=1e-10) -> Solution:
    """Sparse LU solve with a relative-residual acceptance check."""
    m, rhs = system.eliminated()
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(m.tocsc(), rhs)
        except (spla.MatrixRankWarning, RuntimeError) as exc:
            raise SolverError(f"singular system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        bad = np.nonzero(~np.isfinite(x))[0]
        raise SolverError(f"singular system: non-finite solution at DOFs "
                          f"{bad[:5].tolist()}...")
    scale = np.linalg.norm(rhs)
    residual = np.linalg.norm(m @ x - rhs) / (scale if scale > 0 else 1.0)
    if residual > tol:
        raise SolverError(f"solver residual {residual:.3e} above {tol:.1e}")
    dm = system.dofmap
    return Solution(
        mesh=system.mesh,
        edge_dofs=x[:dm.n_stress].reshape(dm.n_edges, 3),
        cell_motions=x[dm.n_stress:].reshape(dm.n_cells, 3),
        report=SolveReport(n_dof=dm.size,
                           n_constrained=len(system.constrained_dofs),
                           residual=float(residual), tolerance=tol))


def inf_sup_constant(mesh, material, stabilization="stab1"):
    """Smallest singular value of the divergence coupling measured in the
    discrete norms: beta_h^2 = lambda_min(B H^-1 B^T, M_u) with H the
    energy-plus-divergence Gram matrix of the stress space and M_u the
    displacement mass matrix.  Dense; intended as a diagnostic on modest
    meshes."""
    import scipy.linalg as sla

    dm = DofMap(mesh.n_edges, mesh.n_cells)
    A = np.zeros((dm.n_stress, dm.n_stress))
    B = np.zeros((dm.n_displacement, dm.n_stress))
    mu_diag = np.empty(dm.n_displacement)
    for g in cell_groups(mesh):
        Ag = g.a_matrices(material, stabilization)
        Bg = g.b_matrices()
        for i in range(len(g.cells)):
            gd = (3 * g.edge_ids[i][:, None] + np.arange(3)[None, :]).reshape(-1)
            A[np.ix_(gd, gd)] += Ag[i]
            cd = 3 * g.cells[i]
            B[cd:cd + 3, gd] += Bg[i]
            mu_diag[cd:cd + 2] = g.areas[i]
            mu_diag[cd + 2] = g.second_moments[i]
    H = A + B.T @ (B / mu_diag[:, None])
    S = B @ sla.solve(H, B.T, assume_a="pos")
    evals = sla.eigh(S, np.diag(mu_diag), eigvals_only=True)
    return float(np.sqrt(max(evals.min(), 0.0)))


SOLUTION_FORMAT_HEADER = "vemhr-solution v1"


def write_solution_text(solution, checksum=None) -> str:
    buf = io.StringIO()
    buf.write(SOLUTION_FORMAT_HEADER + "\n")
    buf.write(f"mesh_checksum {checksum or mesh_checksum(solution.mesh)}\n")
    rep = solution.report
    buf.write(f"residual {rep.residual:.17g}\n" if rep else "residual nan\n")
    buf.write(f"n_constrained {rep.n_constrained if rep else 0}\n")
    buf.write(f"{len(solution.edge_dofs)}\n")
    for row in solution.edge_dofs:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    buf.write(f"{len(solution.cell_motions)}\n")
    for row in solution.cell_motions:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def save_solution(path, solution):
    with open(path, "w") as fh:
        fh.write(write_solution_text(solution))


def load_solution(path, mesh=None):
    """Read a solution file; if a mesh is given, its checksum is verified."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != SOLUTION_FORMAT_HEADER:
        raise ValueError(f"not a '{SOLUTION_FORMAT_HEADER}' file: {path}")
    checksum = lines[1].split()[1]
    residual = float(lines[2].split()[1])
    n_constrained = int(lines[3].split()[1])
    ne = int(lines[4])
    edge = np.array([[float(t) for t in ln.split()]
                     for ln in lines[5:5 + ne]])
    nc = int(lines[5 + ne])
    cells = np.array([[float(t) for t in ln.split()]
                      for ln in lines[6 + ne:6 + ne + nc]])
    if mesh is not None and mesh_checksum(mesh) != checksum:
        raise ValueError("solution file does not match the mesh")
    report = SolveReport(n_dof=3 * (ne + nc), n_constrained=n_constrained,
                         residual=residual, tolerance=np.nan)
    return Solution(mesh=mesh, edge_dofs=edge, cell_motions=cells,
                    report=report)
