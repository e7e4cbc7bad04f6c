"""P1 finite elements for ``div(sigma grad u) = 0`` on a disc mesh."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .conductivity import ConductivityField
from .mesh import TriangleMesh, layer_elements

__all__ = [
    "SolverError",
    "StiffnessSystem",
    "DiscreteSolution",
    "p1_gradients",
    "element_matrices",
    "element_tensors",
    "QUADRATURES",
    "assemble",
    "solve_dirichlet",
    "caccioppoli_ratio",
    "l2_mass",
]


class SolverError(RuntimeError):
    pass


def p1_gradients(mesh: TriangleMesh):
    """Barycentric gradients ``(T, 3, 2)`` and areas ``(T,)``."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    if np.any(area <= 0):
        bad = int(np.flatnonzero(area <= 0)[0])
        raise SolverError(f"degenerate or clockwise triangle {bad}")
    # rows of inv([e1 e2]) give grad(lambda_1), grad(lambda_2)
    g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
    g0 = -(g1 + g2)
    return np.stack([g0, g1, g2], axis=1), area


QUADRATURES = ("centroid", "composite")


def element_tensors(mesh: TriangleMesh, sigma: ConductivityField,
                    quadrature: str = "centroid") -> np.ndarray:
    """One conductivity tensor per element.

    ``"centroid"`` evaluates ``sigma`` at the element centroid.  ``"composite"``
    uses the field's exact cell average when it provides one (laminates mix
    the two phases of a cut element by their area fractions) and falls back
    to the centroid otherwise.
    """
    if quadrature not in QUADRATURES:
        raise ValueError(f"unknown quadrature {quadrature!r}")
    if quadrature == "composite" and sigma.cell_average is not None:
        s = np.asarray(sigma.cell_average(mesh.vertices[mesh.triangles]), dtype=float)
        return 0.5 * (s + np.swapaxes(s, 1, 2))
    return sigma.eval(mesh.centroids())


def element_matrices(mesh: TriangleMesh, sigma: ConductivityField,
                     quadrature: str = "centroid") -> np.ndarray:
    """Per-element ``area * G sigma_e G^T``, exactly symmetric."""
    G, area = p1_gradients(mesh)
    s = element_tensors(mesh, sigma, quadrature)
    Ke = area[:, None, None] * np.einsum("tia,tab,tjb->tij", G, s, G)
    return 0.5 * (Ke + np.swapaxes(Ke, 1, 2))


@dataclass(frozen=True, eq=False)
class StiffnessSystem:
    """Assembled Neumann stiffness matrix with the interior/boundary split."""

    A: sp.csr_matrix
    interior: np.ndarray
    boundary: np.ndarray
    mesh: TriangleMesh
    sigma: ConductivityField

    @cached_property
    def A_ii(self):
        return self.A[self.interior][:, self.interior].tocsc()

    @cached_property
    def A_ib(self):
        return self.A[self.interior][:, self.boundary].tocsr()

    @cached_property
    def A_bb(self):
        return self.A[self.boundary][:, self.boundary].tocsr()

    @cached_property
    def lu(self):
        try:
            return splu(self.A_ii)
        except RuntimeError as exc:
            raise SolverError(f"interior factorisation failed: {exc}") from exc

    def solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``A_ii x = rhs`` with one step of iterative refinement."""
        x = self.lu.solve(rhs)
        r = rhs - self.A_ii @ x
        return x + self.lu.solve(r)


def assemble(mesh: TriangleMesh, sigma: ConductivityField,
             quadrature: str = "centroid") -> StiffnessSystem:
    """Assemble ``A_ij = int sigma grad(phi_i).grad(phi_j)`` in element order."""
    Ke = element_matrices(mesh, sigma, quadrature)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return StiffnessSystem(A=A, interior=mesh.interior(), boundary=np.asarray(mesh.boundary),
                           mesh=mesh, sigma=sigma)


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    """Nodal values of a discrete solution with its energy ``u^T A u``."""

    values: np.ndarray
    boundary_values: np.ndarray
    energy: float
    system: StiffnessSystem

    @property
    def mesh(self) -> TriangleMesh:
        return self.system.mesh

    def __sub__(self, other: "DiscreteSolution") -> "DiscreteSolution":
        if other.mesh is not self.mesh:
            raise ValueError("solutions live on different meshes")
        v = self.values - other.values
        return DiscreteSolution(v, self.boundary_values - other.boundary_values,
                                float(v @ (self.system.A @ v)), self.system)


def solve_dirichlet(sys: StiffnessSystem, boundary_values, rtol: float = 1e-10) -> DiscreteSolution:
    """Discrete harmonic extension of nodal boundary data.

    Raises
    ------
    SolverError
        If the interior residual exceeds ``rtol * ||A_ib u_b||``.
    """
    ub = np.asarray(boundary_values, dtype=float)
    if ub.shape != (len(sys.boundary),):
        raise ValueError(f"expected {len(sys.boundary)} boundary values, got {ub.shape}")
    rhs = -(sys.A_ib @ ub)
    ui = sys.solve_interior(rhs)
    res = np.linalg.norm(sys.A_ii @ ui - rhs)
    scale = np.linalg.norm(rhs)
    if res > rtol * scale and res > 1e-300:
        raise SolverError(f"interior residual {res:.3e} exceeds {rtol:.1e} * {scale:.3e}")
    u = np.empty(sys.mesh.n_vertices)
    u[sys.interior] = ui
    u[sys.boundary] = ub
    return DiscreteSolution(u, ub, float(u @ (sys.A @ u)), sys)


def l2_mass(mesh: TriangleMesh, w: np.ndarray, elements=None) -> float:
    """Exact ``int |w|^2`` of a P1 function over an element subset."""
    t = mesh.triangles if elements is None else mesh.triangles[elements]
    _, area = p1_gradients(mesh)
    if elements is not None:
        area = area[elements]
    wv = w[t]
    return float(np.sum(area / 12.0 * ((wv * wv).sum(axis=1) + wv.sum(axis=1) ** 2)))


def caccioppoli_ratio(sol: DiscreteSolution, delta: float) -> float:
    """``int_{O_d} |grad w|^2 / (delta^-2 int_{O_2d} |w|^2)`` on element sets.

    ``O_d`` collects the elements whose centroid satisfies ``1 - |c| < d``.
    A vanishing function yields 0.
    """
    mesh = sol.mesh
    w = sol.values
    inner = layer_elements(mesh, delta)
    outer = layer_elements(mesh, 2 * delta)
    if len(inner) == 0:
        raise ValueError(f"no elements in the boundary layer of width {delta} at h={mesh.h:.3g}")
    G, area = p1_gradients(mesh)
    gw = np.einsum("tia,ti->ta", G[inner], w[mesh.triangles[inner]])
    num = float(np.sum(area[inner] * (gw * gw).sum(axis=1)))
    den = l2_mass(mesh, w, outer) / delta ** 2
    if den == 0.0:
        return 0.0
    return num / den
