"""End-to-end benchmark drivers: convergence studies and the cantilever run.

A refinement level n means n subdivisions per direction for grid-based mesh
kinds and n^2 seeds for the Voronoi kinds, which roughly matches the mean
edge lengths across families.  All runs are deterministic given the config
(fixed seeds, fixed formats), so repeated runs produce identical CSV bytes.
"""

import io
from dataclasses import dataclass

import numpy as np

from . import postproc
from .assembly import assemble, solve
from .element import projection_field
from .generators import MESH_KINDS, generate_mesh
from .mesh import cook_domain
from .postproc import von_mises_field, write_vtk_polydata
from .problems import COOK_PROBE_POINT, problem_cook, problem_test_a, \
    problem_test_b, problem_test_incompressible, verify_exact_bundle

__all__ = [
    "RunConfig",
    "PROBLEM_IDS",
    "COOK_KINDS",
    "make_problem",
    "mesh_for_level",
    "solve_on_mesh",
    "convergence_study",
    "run_convergence",
    "run_cook",
    "cook_reference",
    "cook_csv_text",
]

PROBLEM_IDS = ("test-a", "test-b", "test-inc", "cook")

COOK_KINDS = {"quad": "quad_structured",
              "cvor": "poly_voronoi_cvt",
              "rvor": "poly_voronoi_random"}

ORACLE_TOL = 1e-8


@dataclass(frozen=True)
class RunConfig:
    problem: str = "test-a"
    kind: str = "quad_structured"
    levels: tuple = (8, 16, 32, 64)
    nu: float = 1.0 / 3.0
    cook_kinds: tuple = ("quad", "cvor", "rvor")
    cook_nus: tuple = (1.0 / 3.0, 0.499995)
    stabilization: str = "stab1"
    load_degree: int = 6
    error_degree: int = 6
    solver_tol: float = 1e-10
    seed: int = 0
    lloyd_iters: int = 50
    rate_window: int = 3
    overkill_n: int = 128
    csv_path: str = None
    vtk_path: str = None

    def validate(self):
        if self.problem not in PROBLEM_IDS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.kind not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if len(self.levels) == 0 or any(n < 1 for n in self.levels):
            raise ValueError("levels must be positive integers")
        if any(k not in COOK_KINDS for k in self.cook_kinds):
            raise ValueError(f"cook kinds must be among {tuple(COOK_KINDS)}")
        if self.stabilization not in ("stab1", "stab1bis"):
            raise ValueError(f"unknown stabilization {self.stabilization!r}")
        return self

    def to_text(self) -> str:
        """Flat key = value serialization, written alongside outputs."""
        lines = []
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) if isinstance(v, float) else str(v)
                                 for v in value)
            lines.append(f"{name} = {value}")
        return "\n".join(lines) + "\n"


def make_problem(problem_id, nu=1.0 / 3.0):
    if problem_id == "test-a":
        return problem_test_a()
    if problem_id == "test-b":
        return problem_test_b()
    if problem_id == "test-inc":
        return problem_test_incompressible()
    if problem_id == "cook":
        return problem_cook(nu)
    raise ValueError(f"unknown problem {problem_id!r}")


def mesh_for_level(kind, level, domain=None, seed=0, lloyd_iters=50):
    """Generate the level-n mesh of a family (n^2 seeds for Voronoi kinds)."""
    resolution = level * level if kind.startswith("poly_voronoi") else level
    return generate_mesh(kind, resolution, domain=domain, seed=seed,
                         lloyd_iters=lloyd_iters)


def solve_on_mesh(problem, mesh, config: RunConfig):
    system = assemble(mesh, problem, stabilization=config.stabilization,
                      load_degree=config.load_degree)
    return solve(system, tol=config.solver_tol)


def convergence_study(problem, kind, levels, config: RunConfig):
    """One refinement sweep of a manufactured problem on a mesh family.

    Each row carries the three error norms plus equilibrium by-products:
    the largest per-cell norm of div sigma_h + Pi_RM f and the L2 norm of
    the body load (for relative equilibrium checks).
    """
    from .quadrature import mesh_polygon_quadrature

    kappa = problem.material.kappa
    rows = []
    failures = []
    for level in levels:
        try:
            mesh = mesh_for_level(kind, level, domain=problem.domain,
                                  seed=config.seed,
                                  lloyd_iters=config.lloyd_iters)
            solution = solve_on_mesh(problem, mesh, config)
        except Exception as exc:  # record and continue with the other levels
            failures.append((level, f"{type(exc).__name__}: {exc}"))
            continue
        f_l2 = 0.0
        if problem.body_force is not None:
            pts, wts, _ = mesh_polygon_quadrature(mesh, config.load_degree)
            fv = problem.body_force(pts)
            f_l2 = float(np.sqrt(wts @ (fv**2).sum(axis=1)))
        row = {
            "level": level,
            "h_bar": mesh.mean_edge_length,
            "n_dof": solution.report.n_dof,
            "equilibrium_max": float(postproc.equilibrium_residuals(
                mesh, solution, problem.body_force,
                config.load_degree).max()),
            "f_l2": f_l2,
        }
        if problem.exact is not None:
            row["E_sigma"] = postproc.error_sigma(
                mesh, solution, problem.exact.stress, kappa,
                config.error_degree)
            row["E_sigma_div"] = postproc.error_div(
                mesh, solution, problem.exact.divergence, config.error_degree)
            row["E_u"] = postproc.error_u(
                mesh, solution, problem.exact.displacement,
                config.error_degree)
        rows.append(row)
    return rows, failures


def run_convergence(config: RunConfig):
    """Solve a manufactured problem over a refinement sequence and collect
    the three error norms; returns (rows, RateTable) and writes the CSV."""
    config.validate()
    problem = make_problem(config.problem, config.nu)
    if problem.exact is None:
        raise ValueError(f"problem {config.problem} has no exact solution")
    report = verify_exact_bundle(problem)
    if max(report["sigma_vs_fd"], report["div_sigma_plus_f"]) > ORACLE_TOL:
        raise ValueError(f"exact bundle inconsistent: {report}")

    rows, failures = convergence_study(problem, config.kind, config.levels,
                                       config)
    if config.csv_path:
        postproc.write_convergence_csv(config.csv_path, rows)
        _write_sidecar_config(config)
    if failures and not rows:
        raise RuntimeError(f"all levels failed: {failures}")
    table = postproc.convergence_rates(
        [r["h_bar"] for r in rows],
        {k: [r[k] for r in rows] for k in ("E_sigma", "E_sigma_div", "E_u")},
        window=config.rate_window)
    return rows, table, failures


def cook_reference(nu, n=128, config: RunConfig = None):
    """Overkill tip displacement on a fine structured quad mesh."""
    config = config or RunConfig(problem="cook")
    problem = problem_cook(nu)
    mesh = generate_mesh("quad_structured", n, domain=cook_domain())
    solution = solve_on_mesh(problem, mesh, config)
    return float(postproc.probe_displacement(mesh, solution,
                                             COOK_PROBE_POINT)[1])


def run_cook(config: RunConfig):
    """Tip-displacement refinement study over the requested mesh families and
    Poisson ratios; writes the CSV and a von Mises VTK per finest mesh."""
    config.validate()
    rows = []
    for short in config.cook_kinds:
        kind = COOK_KINDS[short]
        for nu in config.cook_nus:
            problem = problem_cook(nu)
            for i, level in enumerate(config.levels):
                mesh = mesh_for_level(kind, level, domain=problem.domain,
                                      seed=config.seed,
                                      lloyd_iters=config.lloyd_iters)
                solution = solve_on_mesh(problem, mesh, config)
                va = postproc.probe_displacement(mesh, solution,
                                                 COOK_PROBE_POINT)[1]
                rows.append({"kind": short, "nu": nu, "level": level,
                             "h_bar": mesh.mean_edge_length,
                             "n_dof": solution.report.n_dof,
                             "v_A": float(va)})
                if config.vtk_path and i == len(config.levels) - 1:
                    vm = von_mises_field(mesh, solution, problem.material)
                    path = _suffixed(config.vtk_path, f"{short}_nu{nu:g}")
                    proj = projection_field(mesh, solution.edge_dofs)
                    write_vtk_polydata(path, mesh, {
                        "displacement": solution.cell_motions[:, :2],
                        "von_mises": vm,
                        "sigma_11": proj[:, 0],
                        "sigma_22": proj[:, 1],
                        "sigma_12": proj[:, 2],
                    }, title=f"cook {short} nu={nu:g} level={level}")
    if config.csv_path:
        with open(config.csv_path, "w", newline="") as fh:
            fh.write(cook_csv_text(rows))
        _write_sidecar_config(config)
    return rows


def cook_csv_text(rows) -> str:
    buf = io.StringIO()
    buf.write("kind,nu,level,h_bar,n_dof,v_A\n")
    for r in rows:
        buf.write(f"{r['kind']},{r['nu']:.12g},{r['level']},"
                  f"{r['h_bar']:.12e},{r['n_dof']},{r['v_A']:.12e}\n")
    return buf.getvalue()


def _suffixed(path, tag):
    if path.endswith(".vtk"):
        return f"{path[:-4]}_{tag}.vtk"
    return f"{path}_{tag}"


def _write_sidecar_config(config: RunConfig):
    with open(config.csv_path + ".cfg", "w") as fh:
        fh.write(config.to_text())
