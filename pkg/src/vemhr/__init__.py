"""Low-order virtual element solver for plane elasticity in the mixed
stress/displacement formulation on general polygonal meshes.

Stresses are approximated with a-priori symmetric virtual fields carrying
three traction DOFs per edge (constant tangential, affine normal component);
displacements are cellwise rigid motions.  The package covers mesh
generation for the benchmark families, local element operators, saddle-point
assembly and direct solution, error norms and the benchmark drivers.
"""

from .assembly import (DisplacementBC, DofMap, GlobalSystem, Solution,
                       SolverError, TractionBC, apply_essential_traction,
                       assemble, inf_sup_constant, load_solution,
                       save_solution, solve)
from .element import (RigidMotion, constant_stress_dofs, div_reconstruction,
                      dirichlet_boundary_term, edge_traction_moments,
                      interpolate_global, interpolate_local, local_a_h,
                      local_b, local_load, mean_stress, rm_basis)
from .generators import MESH_KINDS, UNIT_SQUARE, generate_mesh
from .material import (IsotropicMaterial, from_lame,
                       from_young_poisson_plane_strain, sym_dot,
                       von_mises_plane_strain)
from .mesh import (PolyMesh, QualityReport, build_topology, check_assumptions,
                   cook_domain, load_mesh, mesh_checksum, polygon_metrics,
                   save_mesh)
from .postproc import (convergence_rates, equilibrium_residuals, error_div,
                       error_sigma, error_u, probe_displacement,
                       von_mises_field, write_convergence_csv,
                       write_vtk_polydata)
from .problems import (ProblemSpec, problem_cook, problem_test_a,
                       problem_test_b, problem_test_incompressible,
                       verify_exact_bundle)
from .quadrature import EdgeRule, PolygonRule, edge_rule, polygon_rule
from .runner import RunConfig, cook_reference, run_convergence, run_cook

__version__ = "0.1.0"
