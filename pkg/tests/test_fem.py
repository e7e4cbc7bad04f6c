import numpy as np
import pytest

from dnlab.conductivity import constant, counterexample_sigma, laminate, radial_layered
from dnlab.fem import (
    SolverError,
    assemble,
    caccioppoli_ratio,
    element_matrices,
    l2_mass,
    solve_dirichlet,
)
from dnlab.mesh import TriangleMesh, build_polar_mesh


def one_triangle(pts):
    return TriangleMesh(vertices=np.array(pts, dtype=float), triangles=np.array([[0, 1, 2]]),
                        boundary=np.array([0, 1, 2]), h=1.0)


def test_unit_right_triangle():
    Ke = element_matrices(one_triangle([(0, 0), (1, 0), (0, 1)]), constant(1.0))[0]
    assert np.allclose(Ke, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)


def test_cotangent_weights():
    pts = np.array([(0.1, 0.0), (1.3, 0.2), (0.4, 0.9)])
    Ke = element_matrices(one_triangle(pts), constant(1.0))[0]
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        a, b = pts[j] - pts[k], pts[i] - pts[k]
        # off-diagonal entry opposite vertex k is -cot(angle at k)/2
        cot = (a @ b) / abs(a[0] * b[1] - a[1] * b[0])
        assert Ke[i, j] == pytest.approx(-0.5 * cot, abs=1e-14)


def test_degenerate_triangle_rejected():
    with pytest.raises(SolverError):
        element_matrices(one_triangle([(0, 0), (1, 0), (2, 0)]), constant(1.0))
    with pytest.raises(SolverError):
        element_matrices(one_triangle([(0, 0), (0, 1), (1, 0)]), constant(1.0))


@pytest.fixture(scope="module")
def mesh():
    return build_polar_mesh(12, 48, [0.5, 0.8])


def test_linearity_and_symmetry(mesh):
    A1 = assemble(mesh, constant(1.0)).A
    A3 = assemble(mesh, constant(3.0)).A
    assert abs(A3 - 3 * A1).max() <= 1e-12
    for s in [constant(1.0), radial_layered([0.5, 0.8], [4.0, 0.5, 1.0]),
              laminate(1, 2, 3, (1, 1), 1.0)]:
        A = assemble(mesh, s).A
        assert (A != A.T).nnz == 0
        assert np.abs(np.asarray(A.sum(axis=1))).max() <= 1e-10


def test_interior_block_positive_definite(mesh):
    sys = assemble(mesh, radial_layered([0.5, 0.8], [4.0, 0.5, 1.0]))
    ev = np.linalg.eigvalsh(sys.A_ii.toarray())
    assert ev.min() > 0


def test_assembly_is_deterministic(mesh):
    s = laminate(1, 2, 5, (1, 0), 0.8)
    a, b = assemble(mesh, s).A, assemble(mesh, s).A
    assert np.array_equal(a.data, b.data) and np.array_equal(a.indices, b.indices)


def test_composite_quadrature_falls_back(mesh):
    s = radial_layered([0.5, 0.8], [4.0, 0.5, 1.0])
    a = assemble(mesh, s, "composite").A
    b = assemble(mesh, s).A
    assert abs(a - b).max() == 0
    with pytest.raises(ValueError):
        assemble(mesh, s, "gauss")


def test_constant_trace(mesh):
    sys = assemble(mesh, radial_layered([0.5, 0.8], [4.0, 0.5, 1.0]))
    sol = solve_dirichlet(sys, np.full(len(mesh.boundary), 2.5))
    assert np.allclose(sol.values, 2.5, atol=1e-12)
    assert abs(sol.energy) <= 1e-10


def test_affine_reproduced(mesh):
    sys = assemble(mesh, constant(1.0))
    x = mesh.vertices
    sol = solve_dirichlet(sys, x[mesh.boundary, 0])
    assert np.abs(sol.values - x[:, 0]).max() <= 1e-10
    assert np.array_equal(sol.values[mesh.boundary], x[mesh.boundary, 0])


def test_wrong_trace_length(mesh):
    with pytest.raises(ValueError):
        solve_dirichlet(assemble(mesh, constant(1.0)), np.zeros(3))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_energy_converges_to_pi_k(k):
    errs = []
    for nr, ns in [(18, 112), (36, 224), (72, 448)]:
        m = build_polar_mesh(nr, ns)
        sol = solve_dirichlet(assemble(m, constant(1.0)), np.cos(k * m.boundary_angles()))
        errs.append(abs(sol.energy - np.pi * k) / (np.pi * k))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 5e-3


def test_maximum_principle_and_residual(mesh, rng):
    sys = assemble(mesh, radial_layered([0.5, 0.8], [4.0, 0.5, 1.0]))
    ub = rng.standard_normal(len(mesh.boundary))
    sol = solve_dirichlet(sys, ub)
    assert sol.values.min() >= ub.min() - 1e-8
    assert sol.values.max() <= ub.max() + 1e-8
    ui = sol.values[sys.interior]
    rhs = -(sys.A_ib @ ub)
    assert np.linalg.norm(sys.A_ii @ ui - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_energy_optimality(mesh, rng):
    sys = assemble(mesh, laminate(1, 2, 3, (1, 0), 1.0))
    sol = solve_dirichlet(sys, np.sin(2 * mesh.boundary_angles()))
    for _ in range(10):
        v = sol.values.copy()
        v[sys.interior] += 1e-3 * rng.standard_normal(len(sys.interior))
        assert v @ (sys.A @ v) >= sol.energy


def test_l2_mass_exact_for_linear():
    m = build_polar_mesh(8, 32)
    # int x^2 over the polygon approximates pi/4; P1 is exact for the interpolant
    w = m.vertices[:, 0]
    assert l2_mass(m, w) == pytest.approx(np.pi / 4, rel=0.02)
    assert l2_mass(m, np.ones(m.n_vertices)) == pytest.approx(
        float(m.signed_areas().sum()), rel=1e-13)


def _ring_difference(nr, ns):
    m = build_polar_mesh(nr, ns, [0.81, 0.9])
    th = m.boundary_angles()
    g = np.cos(th) + 0.3 * np.sin(3 * th)
    return (solve_dirichlet(assemble(m, counterexample_sigma(1, 0.9)), g)
            - solve_dirichlet(assemble(m, constant(1.0)), g))


def test_caccioppoli_zero_function():
    m = build_polar_mesh(10, 40)
    sys = assemble(m, constant(1.0))
    g = np.cos(m.boundary_angles())
    w = solve_dirichlet(sys, g) - solve_dirichlet(sys, g)
    assert caccioppoli_ratio(w, 0.1) == 0.0


def test_caccioppoli_empty_layer():
    w = _ring_difference(4, 16)
    with pytest.raises(ValueError):
        caccioppoli_ratio(w, 1e-4)


@pytest.mark.parametrize("delta, chain", [(0.02, [(36, 128), (72, 256), (144, 512)]),
                                          (0.05, [(18, 64), (36, 128), (72, 256)])])
def test_caccioppoli_bounded_under_refinement(delta, chain):
    ratios = [caccioppoli_ratio(_ring_difference(nr, ns), delta) for nr, ns in chain]
    assert all(np.isfinite(r) and r >= 0 for r in ratios)
    for a, b in zip(ratios, ratios[1:]):
        assert b <= 1.5 * a


def test_solution_difference_requires_same_mesh():
    a = _ring_difference(4, 16)
    b = _ring_difference(4, 16)
    with pytest.raises(ValueError):
        a - b
