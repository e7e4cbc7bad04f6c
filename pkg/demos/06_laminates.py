"""Stripe laminates against their homogenised limit.

Cut elements are given the exact two-phase mix of the stripes crossing them
(``quadrature="composite"``), which leaves an error of order h; two meshes and
a Richardson step remove most of it.
"""
from dnlab.conductivity import homogenized_laminate, laminate
from dnlab.dnmap import dn_matrix, op_norm
from dnlab.fem import assemble
from dnlab.mesh import build_polar_mesh

coarse = build_polar_mesh(40, 256, [0.5])
fine = build_polar_mesh(80, 512, [0.5])
limit = homogenized_laminate(1.0, 2.0, support_radius=0.5)


def norm_at(mesh, n):
    a = dn_matrix(assemble(mesh, laminate(1.0, 2.0, n, support_radius=0.5), "composite"), 16)
    b = dn_matrix(assemble(mesh, limit, "composite"), 16)
    return op_norm(a - b)


for n in (2, 4, 8):
    c, f = norm_at(coarse, n), norm_at(fine, n)
    print(f"n={n}: coarse {c:.5f}  fine {f:.5f}  extrapolated {2 * f - c:.5f}")
