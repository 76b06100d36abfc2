"""
P1 finite elements for the Neumann problem -div(A grad f) = mu f on star-shaped domains.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, eigh
from scipy.optimize import minimize_scalar
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, splu
from scipy.spatial import cKDTree

from src.services.bounds import poincare_constant_upper
from src.services.dilatation import constant_matrix_field
from src.services.domains import square_domain
from src.utils.disc_functions import get_disc_function
from src.utils.errors import (
    DegenerateBoundary,
    IndefiniteMass,
    InvalidParams,
    InvalidResolution,
    SolverNoConvergence,
)
from src.utils.quadrature import disc_quadrature, polar_quadrature

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-6
AREA_TOL = 1e-14
DENSE_LIMIT = 2000
SHIFT = -0.01
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh; triangles are counter-clockwise."""
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_flags: np.ndarray
    h_max: float

    @classmethod
    def from_arrays(cls, vertices, triangles, boundary_flags=None):
        """
        Build a mesh and check its invariants.

        Raises:
            DegenerateBoundary: On a triangle with area below 1e-14 h_max^2, an edge
                shared by more than two triangles, or V - E + F != 1
        """
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if boundary_flags is None:
            boundary_flags = np.zeros(len(vertices), dtype=bool)
        edges = _edges(triangles)
        lengths = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)
        h_max = float(lengths.max())

        areas = _signed_areas(vertices, triangles)
        if np.any(areas < AREA_TOL * h_max ** 2):
            raise DegenerateBoundary(
                f"{np.count_nonzero(areas < AREA_TOL * h_max ** 2)} triangles with area below "
                f"{AREA_TOL:g} h^2 (min {areas.min():.3e})"
            )
        _, counts = np.unique(_all_edges(triangles), axis=0, return_counts=True)
        if np.any(counts > 2):
            raise DegenerateBoundary("non-conforming mesh: an edge is shared by more than two triangles")
        euler = len(vertices) - len(edges) + len(triangles)
        if euler != 1:
            raise DegenerateBoundary(f"mesh is not disc-like: V - E + F = {euler}")
        return cls(vertices=vertices, triangles=triangles,
                   boundary_flags=np.asarray(boundary_flags, dtype=bool), h_max=h_max)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def areas(self):
        return _signed_areas(self.vertices, self.triangles)

    @property
    def area(self):
        return float(self.areas.sum())

    @property
    def centroids(self):
        xy = self.vertices[self.triangles].mean(axis=1)
        return xy[:, 0] + 1j * xy[:, 1]


def _signed_areas(vertices, triangles):
    v1, v2, v3 = (vertices[triangles[:, k]] for k in range(3))
    d1, d2 = v2 - v1, v3 - v1
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _all_edges(triangles):
    return np.sort(np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]), axis=1)


def _edges(triangles):
    return np.unique(_all_edges(triangles), axis=0)


def _collapse_tip(points, triangles, flags, tip, tol):
    """
    Merge boundary vertices within tol of the tip into the tip vertex; the triangles of
    the collapsed strip become a fan about the tip. Drops collapsed triangles and
    unused vertices.
    """
    boundary = np.flatnonzero(flags)
    near = boundary[np.asarray(cKDTree(points[boundary]).query_ball_point(tip, tol), dtype=np.int64)]
    if len(near) > 1:
        target = near[np.argmin(np.hypot(*(points[near] - tip).T))]
        rep = np.arange(len(points))
        rep[near] = target
        triangles = rep[triangles]
        logger.debug(f"Merged {len(near) - 1} boundary vertices within {tol:g} of the tip")

    keep = ((triangles[:, 0] != triangles[:, 1]) & (triangles[:, 1] != triangles[:, 2])
            & (triangles[:, 2] != triangles[:, 0]))
    triangles = triangles[keep]
    used, inverse = np.unique(triangles, return_inverse=True)
    return points[used], inverse.reshape(-1, 3), flags[used]


def mesh_star_domain(domain, n_radial, n_angular):
    """
    Structured triangulation of a star-shaped domain.

    Vertex (i, j) sits at pole + (i / n_radial)(p_j - pole), where p_j are n_angular
    counter-clockwise boundary points; ring 1 is joined to the pole by a fan. Boundary
    vertices within 1e-6 of a tip at the polar center (cusp and petal) are merged into it.

    Raises:
        InvalidResolution: If n_radial < 4 or n_angular < 16
        DegenerateBoundary: If the merged mesh still has a degenerate triangle
    """
    if n_radial < 4 or n_angular < 16:
        raise InvalidResolution(f"resolution ({n_radial}, {n_angular}) below the minimum (4, 16)")

    pole = complex(domain.pole)
    boundary = domain.boundary_points(n_angular)
    s = np.arange(1, n_radial + 1) / n_radial
    rings = pole + s[:, None] * (boundary[None, :] - pole)
    points = np.concatenate([[pole], rings.ravel()])
    points = np.column_stack((points.real, points.imag))

    def vid(i, j):
        return 1 + (i - 1) * n_angular + (j % n_angular)

    j = np.arange(n_angular)
    fan = np.column_stack((np.zeros(n_angular, dtype=np.int64), vid(1, j), vid(1, j + 1)))
    i = np.arange(1, n_radial)[:, None]
    inner, outer = vid(i, j), vid(i + 1, j)
    inner_next, outer_next = vid(i, j + 1), vid(i + 1, j + 1)
    lower = np.stack((inner, outer, outer_next), axis=-1).reshape(-1, 3)
    upper = np.stack((inner, outer_next, inner_next), axis=-1).reshape(-1, 3)
    triangles = np.concatenate([fan, lower, upper]).astype(np.int64)

    flags = np.zeros(len(points), dtype=bool)
    flags[vid(n_radial, j)] = True

    center = complex(domain.center)
    tip = np.array([center.real, center.imag])
    points, triangles, flags = _collapse_tip(points, triangles, flags, tip, MERGE_TOL)
    mesh = Mesh.from_arrays(points, triangles, flags)
    logger.info(f"Meshed {domain.name}: {mesh.n_vertices} vertices, {len(mesh.triangles)} "
                f"triangles, h_max={mesh.h_max:.4f}")
    return mesh


def assemble(mesh, A):
    """
    P1 stiffness and mass matrices with A sampled at triangle centroids.

    Args:
        mesh (Mesh): The triangulation
        A (MatrixField): Coefficient field; its invariants are checked at the centroids

    Returns:
        tuple: (stiffness, mass) as CSR matrices
    """
    t = mesh.triangles
    v1, v2, v3 = (mesh.vertices[t[:, k]] for k in range(3))
    area = mesh.areas
    # gradient of the hat function at vertex k is rot(opposite edge) / (2 area)
    opposite = np.stack((v3 - v2, v1 - v3, v2 - v1), axis=1)
    grads = np.stack((-opposite[..., 1], opposite[..., 0]), axis=-1) / (2.0 * area)[:, None, None]

    a11, a12, a22 = (np.broadcast_to(np.asarray(e, dtype=float), area.shape)
                     for e in A.evaluate(mesh.centroids))
    gx, gy = grads[..., 0], grads[..., 1]
    Ag_x = a11[:, None] * gx + a12[:, None] * gy
    Ag_y = a12[:, None] * gx + a22[:, None] * gy
    local_stiffness = area[:, None, None] * (Ag_x[:, :, None] * gx[:, None, :]
                                             + Ag_y[:, :, None] * gy[:, None, :])
    local_mass = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))

    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    stiffness = sparse.coo_matrix((local_stiffness.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mass = sparse.coo_matrix((local_mass.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return stiffness, mass


@dataclass
class SpectralReport:
    """FEM eigenvalues of one (domain, A) pair together with the bounds compared against them."""
    mu1_fem: float
    mu_sequence: list
    mesh_h: float = float("nan")
    bounds: list = field(default_factory=list)
    convergence_slope: Optional[float] = None
    map_id: str = ""
    n_vertices: int = 0
    solver: str = ""
    checks: dict = field(default_factory=dict)

    def violations(self, tolerance=0.02):
        """Applicable bounds exceeding mu1_fem (1 + tolerance)."""
        return [bound for bound in self.bounds
                if bound.applicable and bound.value > self.mu1_fem * (1.0 + tolerance)]

    def to_dict(self):
        return {
            "map_id": self.map_id,
            "mu1_fem": self.mu1_fem,
            "mu_sequence": [float(mu) for mu in self.mu_sequence],
            "mesh_h": self.mesh_h,
            "n_vertices": self.n_vertices,
            "solver": self.solver,
            "convergence_slope": self.convergence_slope,
            "bounds": [bound.to_dict() for bound in self.bounds],
            "checks": self.checks,
        }


def _check_residuals(stiffness, mass, values, vectors):
    for mu, x in zip(values, vectors.T):
        Mx = mass @ x
        residual = np.linalg.norm(stiffness @ x - mu * Mx)
        if residual > RESIDUAL_TOL * max(1.0, abs(mu)) * np.linalg.norm(Mx):
            raise SolverNoConvergence(
                f"eigenpair mu={mu:.10g} has relative residual {residual / np.linalg.norm(Mx):.3e}"
            )


def _dense_pencil(stiffness, mass, m):
    try:
        values, vectors = eigh(stiffness.toarray(), mass.toarray(), subset_by_index=[0, m - 1])
    except LinAlgError as e:
        raise IndefiniteMass(f"mass matrix is not positive definite: {e}") from e
    _check_residuals(stiffness, mass, values[1:], vectors[:, 1:])
    return values


def _shift_invert_deflated(stiffness, mass, m):
    n = stiffness.shape[0]
    ones = np.ones(n)
    M_ones = mass @ ones
    total = ones @ M_ones
    if not total > 0.0:
        raise IndefiniteMass(f"mass of the constant mode is {total}")

    def project(y):
        return y - ones * (M_ones @ y) / total

    lu = splu((stiffness - SHIFT * mass).tocsc())
    op_inv = LinearOperator(shape=stiffness.shape, matvec=lambda x: project(lu.solve(x)),
                            dtype=float)
    v0 = project(np.random.default_rng(0).standard_normal(n))
    try:
        values, vectors = eigsh(stiffness, k=m - 1, M=mass, sigma=SHIFT, OPinv=op_inv, v0=v0,
                                which="LM")
    except (ArpackNoConvergence, ArpackError) as e:
        raise SolverNoConvergence(f"shift-invert Lanczos failed: {e}") from e
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    _check_residuals(stiffness, mass, values, vectors)
    mu0 = float(ones @ (stiffness @ ones) / total)
    return np.concatenate([[mu0], values])


def neumann_mu1(stiffness, mass, m=6, mesh_h=float("nan")):
    """
    Smallest m eigenvalues of the pencil (stiffness, mass).

    Dense below 2000 unknowns; above, shift-invert Lanczos on the mass-orthogonal
    complement of the constants, with the constant mode's Rayleigh quotient as mu_0.

    Raises:
        InvalidParams: If m < 2
        IndefiniteMass: If the mass matrix is not positive definite
        SolverNoConvergence: If the solver fails or a residual exceeds 1e-9
    """
    if m < 2:
        raise InvalidParams(f"need at least 2 eigenvalues, got m={m}")
    n = stiffness.shape[0]
    if n < DENSE_LIMIT:
        values, solver = _dense_pencil(stiffness, mass, m), "dense"
    else:
        values, solver = _shift_invert_deflated(stiffness, mass, m), "shift-invert"
    logger.info(f"{solver} solve on {n} unknowns: mu_1 = {values[1]:.10g}")
    return SpectralReport(mu1_fem=float(values[1]), mu_sequence=[float(v) for v in values],
                          mesh_h=mesh_h, n_vertices=n, solver=solver)


def solve_domain(domain, A, n_radial, n_angular, m=6):
    """Mesh, assemble and solve in one call."""
    mesh = mesh_star_domain(domain, n_radial, n_angular)
    stiffness, mass = assemble(mesh, A)
    return neumann_mu1(stiffness, mass, m, mesh_h=mesh.h_max)


def _domain_rule(qc_map, n_quad):
    d = qc_map.domain
    return polar_quadrature(d.radius, d.theta_min, d.theta_max, n_radial=n_quad,
                            n_angular=4 * n_quad, center=d.center)


def _energy_density(qc_map, fn, z):
    """<A grad(f o phi), grad(f o phi)> at z, with grad(f o phi) = D phi^T (grad f)(phi)."""
    w = qc_map.phi(z)
    fu, fv = fn.gradient(w.real, w.imag)
    D = qc_map.jacobi_matrix(z)
    gx = D[..., 0, 0] * fu + D[..., 1, 0] * fv
    gy = D[..., 0, 1] * fu + D[..., 1, 1] * fv
    a11, a12, a22 = qc_map.matrix_field.evaluate(z)
    return a11 * gx * gx + 2.0 * a12 * gx * gy + a22 * gy * gy


def isometry_check(qc_map, test_fn_id, n_quad=64):
    """
    Compare the A-energy of f o phi on the domain with the Dirichlet energy of f on the disc.

    Returns:
        tuple: (lhs, rhs, rel_err)
    """
    fn = get_disc_function(test_fn_id)
    z, wz = _domain_rule(qc_map, n_quad)
    lhs = float(np.sum(wz * _energy_density(qc_map, fn, z)))

    w, ww = disc_quadrature(n_quad, 4 * n_quad)
    fu, fv = fn.gradient(w.real, w.imag)
    rhs = float(np.sum(ww * (fu * fu + fv * fv)))
    rel_err = abs(lhs - rhs) / rhs if rhs > 0.0 else abs(lhs)
    logger.debug(f"isometry {qc_map.map_id} / {fn.name}: {lhs:.12g} vs {rhs:.12g}")
    return lhs, rhs, rel_err


def weighted_poincare_check(qc_map, r, test_fn_id, n_quad=64):
    """
    Check inf_c ||f o phi - c | L^r(Omega, h)|| <= B_r ||f o phi | L^{1,2}_A(Omega)||
    with weight h = |J(z, phi)|.

    Returns:
        tuple: (lhs, rhs, margin)

    Raises:
        InvalidParams: If r < 1
    """
    if r < 1.0:
        raise InvalidParams(f"r must be >= 1, got {r}")
    fn = get_disc_function(test_fn_id)
    z, wz = _domain_rule(qc_map, n_quad)
    w = qc_map.phi(z)
    values = fn.value(w.real, w.imag)
    weights = wz * np.abs(qc_map.jacobian(z))

    def deviation(c):
        return float(np.sum(weights * np.abs(values - c) ** r)) ** (1.0 / r)

    low, high = float(values.min()), float(values.max())
    if high - low < 1e-14:
        lhs = 0.0
    else:
        lhs = minimize_scalar(deviation, bounds=(low, high), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, high - low)}).fun
    energy = float(np.sum(wz * _energy_density(qc_map, fn, z)))
    rhs = poincare_constant_upper(r) * np.sqrt(max(energy, 0.0))
    return lhs, rhs, rhs - lhs


@dataclass(frozen=True)
class ConvergenceStudy:
    levels: tuple
    h: list
    mu1: list
    errors: list
    slope: float


def convergence_study(domain=None, A=None, exact=np.pi ** 2,
                      levels=((8, 32), (16, 64), (32, 128))):
    """
    mu_1 at successive uniform refinements and the log-log slope of its error against h.

    Defaults to the unit square with A = I, whose exact value is pi^2.
    """
    domain = square_domain() if domain is None else domain
    A = constant_matrix_field(1.0, 0.0, 1.0) if A is None else A
    h, mu1 = [], []
    for n_radial, n_angular in levels:
        report = solve_domain(domain, A, n_radial, n_angular, m=2)
        h.append(report.mesh_h)
        mu1.append(report.mu1_fem)
    errors = [abs(mu - exact) for mu in mu1]
    slope = float(np.polyfit(np.log(h), np.log(errors), 1)[0])
    logger.info(f"Convergence on {domain.name}: slope {slope:.3f}")
    return ConvergenceStudy(levels=tuple(levels), h=h, mu1=mu1, errors=errors, slope=slope)


def write_mesh(mesh, path):
    """Plain-text mesh: "nv nt", then nv lines "x y flag", then nt lines "i j k"."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{mesh.n_vertices} {len(mesh.triangles)}\n")
        for (x, y), flag in zip(mesh.vertices, mesh.boundary_flags):
            f.write(f"{float(x)!r} {float(y)!r} {int(flag)}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{i} {j} {k}\n")
    logger.info(f"Mesh written to {path}")


def read_mesh(path):
    """Inverse of write_mesh; the mesh invariants are re-checked."""
    with open(path, "r", encoding="utf-8") as f:
        nv, nt = (int(token) for token in f.readline().split())
        rows = [f.readline().split() for _ in range(nv)]
        triangles = [[int(token) for token in f.readline().split()] for _ in range(nt)]
    vertices = [(float(x), float(y)) for x, y, _ in rows]
    flags = [flag == "1" for _, _, flag in rows]
    return Mesh.from_arrays(vertices, triangles, flags)
