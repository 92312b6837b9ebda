"""Benchmark problem definitions with hand-coded exact bundles.

Each problem bundles the domain, the material, the body load, a boundary
classifier, and (where available) the exact displacement, stress and stress
divergence.  The closed forms are hand-derived; ``verify_exact_bundle``
cross-checks them against derivative oracles applied to the displacement
alone, so a transcription slip in any field is caught before a solve:

* central finite differences (step 1e-5) validate sigma = C eps(u) and
  div sigma = -f at a tolerance relative to the constitutive scale,
* a complex-step derivative (machine-precision for these entire functions)
  validates pointwise constraints such as div u = 0.

Vector fields map an array of points (..., 2) to values (..., 2); stress
fields return triples (..., 3) in the (s11, s22, s12) convention.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import DisplacementBC, TractionBC
from .material import IsotropicMaterial, from_lame, \
    from_young_poisson_plane_strain
from .mesh import cook_domain
from .generators import UNIT_SQUARE

__all__ = [
    "ExactSolution",
    "ProblemSpec",
    "problem_test_a",
    "problem_test_b",
    "problem_test_incompressible",
    "problem_cook",
    "COOK_TRACTION",
    "COOK_PROBE_POINT",
    "verify_exact_bundle",
    "grad_complex_step",
    "grad_central",
]

COOK_TRACTION = 6.25
COOK_PROBE_POINT = np.array([48.0, 60.0])


@dataclass(frozen=True)
class ExactSolution:
    displacement: object
    stress: object
    divergence: object  # div sigma = -f


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: np.ndarray
    material: IsotropicMaterial
    body_force: object
    boundary: object
    exact: ExactSolution = None


def _dirichlet(g):
    bc = DisplacementBC(g=g)
    return lambda mesh, edge: bc


def problem_test_a() -> ProblemSpec:
    """Cubic displacement, zero load, nonhomogeneous Dirichlet data."""
    mat = from_lame(1.0, 1.0)
    mu = mat.mu

    def u(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([x**3 - 3 * x * y**2, y**3 - 3 * x**2 * y], axis=-1)

    def sigma(p):
        # tr(eps) = 0, so sigma = 2 mu eps regardless of lambda
        x, y = p[..., 0], p[..., 1]
        return np.stack([2 * mu * (3 * x**2 - 3 * y**2),
                         2 * mu * (3 * y**2 - 3 * x**2),
                         -12 * mu * x * y], axis=-1)

    def div_sigma(p):
        return np.zeros(p.shape[:-1] + (2,))

    return ProblemSpec(name="test-a", domain=UNIT_SQUARE.copy(), material=mat,
                       body_force=None, boundary=_dirichlet(u),
                       exact=ExactSolution(u, sigma, div_sigma))


def problem_test_b() -> ProblemSpec:
    """Trigonometric displacement, trigonometric load, homogeneous Dirichlet."""
    mat = from_lame(1.0, 1.0)
    lam, mu = mat.lam, mat.mu
    pi = np.pi

    def u(p):
        x, y = p[..., 0], p[..., 1]
        s = np.sin(pi * x) * np.sin(pi * y)
        return np.stack([s, s], axis=-1)

    def sigma(p):
        x, y = p[..., 0], p[..., 1]
        m1 = np.cos(pi * x) * np.sin(pi * y)
        m2 = np.sin(pi * x) * np.cos(pi * y)
        return np.stack([pi * ((2 * mu + lam) * m1 + lam * m2),
                         pi * (lam * m1 + (2 * mu + lam) * m2),
                         pi * mu * (m1 + m2)], axis=-1)

    def f(p):
        x, y = p[..., 0], p[..., 1]
        val = -pi**2 * (-(3 * mu + lam) * np.sin(pi * x) * np.sin(pi * y)
                        + (mu + lam) * np.cos(pi * x) * np.cos(pi * y))
        return np.stack([val, val], axis=-1)

    return ProblemSpec(name="test-b", domain=UNIT_SQUARE.copy(), material=mat,
                       body_force=f, boundary=_dirichlet(None),
                       exact=ExactSolution(u, sigma, lambda p: -f(p)))


def problem_test_incompressible(lam=1e5, mu=0.5) -> ProblemSpec:
    """Divergence-free displacement; default Lame pair is nearly
    incompressible.  The exact stress and load do not depend on lambda, so
    runs at different lambda share the manufactured solution."""
    mat = from_lame(lam, mu)
    pi = np.pi

    def u(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([
            0.5 * np.sin(2 * pi * x)**2 * np.sin(2 * pi * y) * np.cos(2 * pi * y),
            -0.5 * np.sin(2 * pi * y)**2 * np.sin(2 * pi * x) * np.cos(2 * pi * x),
        ], axis=-1)

    def sigma(p):
        x, y = p[..., 0], p[..., 1]
        s4x, s4y = np.sin(4 * pi * x), np.sin(4 * pi * y)
        c4x, c4y = np.cos(4 * pi * x), np.cos(4 * pi * y)
        diag = mu * pi * s4x * s4y
        shear = 0.5 * mu * pi * ((1 - c4x) * c4y - (1 - c4y) * c4x)
        return np.stack([diag, -diag, shear], axis=-1)

    def f(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([
            2 * mu * pi**2 * np.sin(4 * pi * y) * (1 - 2 * np.cos(4 * pi * x)),
            -2 * mu * pi**2 * np.sin(4 * pi * x) * (1 - 2 * np.cos(4 * pi * y)),
        ], axis=-1)

    return ProblemSpec(name="test-inc", domain=UNIT_SQUARE.copy(), material=mat,
                       body_force=f, boundary=_dirichlet(None),
                       exact=ExactSolution(u, sigma, lambda p: -f(p)))


def problem_cook(nu=1.0 / 3.0) -> ProblemSpec:
    """Tapered cantilever under a constant tangential edge traction.

    The left edge is clamped (weak zero displacement data), the right edge
    carries the prescribed traction (0, q), top and bottom are traction-free.
    No exact bundle; accuracy is judged against an overkill run.
    """
    mat = from_young_poisson_plane_strain(70.0, nu)
    domain = cook_domain()
    right = domain[:, 0].max()

    clamped = DisplacementBC(g=None)
    loaded = TractionBC(traction=lambda p: np.broadcast_to(
        np.array([0.0, COOK_TRACTION]), p.shape[:-1] + (2,)))
    free = TractionBC(traction=None)

    def boundary(mesh, edge):
        x = mesh.edge_midpoints[edge, 0]
        if abs(x) < 1e-9 * right:
            return clamped
        if abs(x - right) < 1e-9 * right:
            return loaded
        return free

    return ProblemSpec(name=f"cook-nu{nu:g}", domain=domain, material=mat,
                       body_force=None, boundary=boundary, exact=None)


def grad_central(field, points, step=1e-5):
    """Central finite-difference gradient; returns (..., comp, deriv)."""
    points = np.asarray(points, dtype=float)
    cols = []
    for k in range(2):
        dp = np.zeros_like(points)
        dp[..., k] = step
        cols.append((np.asarray(field(points + dp))
                     - np.asarray(field(points - dp))) / (2 * step))
    return np.stack(cols, axis=-1)


def grad_complex_step(field, points, step=1e-200):
    """Complex-step gradient, exact to machine precision for entire fields."""
    points = np.asarray(points, dtype=float)
    cols = []
    for k in range(2):
        dp = np.zeros(points.shape, dtype=complex)
        dp[..., k] = 1j * step
        cols.append(np.imag(np.asarray(field(points + dp))) / step)
    return np.stack(cols, axis=-1)


def _sample_points(domain, count, rng):
    lo, hi = domain.min(axis=0), domain.max(axis=0)
    nxt = np.roll(domain, -1, axis=0)
    tang = nxt - domain
    pts = []
    while len(pts) < count:
        cand = rng.uniform(lo, hi, size=(4 * count, 2))
        rel = cand[:, None, :] - domain[None, :, :]
        cross = tang[None, :, 0] * rel[:, :, 1] - tang[None, :, 1] * rel[:, :, 0]
        pts.extend(cand[(cross > 0).all(axis=1)])
    return np.array(pts[:count])


def verify_exact_bundle(problem, n_points=20, seed=1234, fd_step=1e-5):
    """Cross-check the hand-coded bundle against derivative oracles on random
    interior points; returns the worst relative deviations.

    The constitutive check is measured relative to the scale (lam + 2 mu)
    max|eps|, which keeps the finite-difference oracle meaningful when
    lambda amplifies round-off in tr(eps) (nearly incompressible runs).
    """
    if problem.exact is None:
        raise ValueError(f"problem {problem.name} has no exact bundle")
    rng = np.random.default_rng(seed)
    pts = _sample_points(problem.domain, n_points, rng)
    exact = problem.exact
    mat = problem.material

    grad_fd = grad_central(exact.displacement, pts, fd_step)
    eps = np.stack([grad_fd[:, 0, 0], grad_fd[:, 1, 1],
                    0.5 * (grad_fd[:, 0, 1] + grad_fd[:, 1, 0])], axis=-1)
    sig_fd = mat.stress(eps)
    sig = np.asarray(exact.stress(pts))
    scale = max(np.abs(sig).max(),
                (mat.lam + 2 * mat.mu) * np.abs(eps).max(), 1e-300)
    dev_sigma = np.abs(sig_fd - sig).max() / scale

    grad_sig = grad_central(exact.stress, pts, fd_step)
    div_fd = np.stack([grad_sig[:, 0, 0] + grad_sig[:, 2, 1],
                       grad_sig[:, 2, 0] + grad_sig[:, 1, 1]], axis=-1)
    div = np.asarray(exact.divergence(pts))
    fv = (np.zeros_like(div) if problem.body_force is None
          else np.asarray(problem.body_force(pts)))
    # equilibrium fields have div = 0; normalize by the stress-gradient scale
    dscale = max(np.abs(div).max(), np.abs(fv).max(),
                 np.abs(grad_sig).max(), 1e-300)
    dev_div = np.abs(div_fd - div).max() / dscale
    dev_f = np.abs(div + fv).max() / dscale

    grad_cs = grad_complex_step(exact.displacement, pts)
    div_u = grad_cs[:, 0, 0] + grad_cs[:, 1, 1]
    return {
        "sigma_vs_fd": float(dev_sigma),
        "div_sigma_vs_fd": float(dev_div),
        "div_sigma_plus_f": float(dev_f),
        "div_u_max": float(np.abs(div_u).max()),
    }
