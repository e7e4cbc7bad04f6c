"""Boundary-fixing diffeomorphisms leave the DN map unchanged, and the cloaking
map hides a highly conducting inclusion up to a defect that shrinks with rho."""
from dnlab.conductivity import cloaking_map, constant, push_forward, radial_layered, radial_qc_map
from dnlab.dnmap import dn_matrix, op_norm
from dnlab.fem import assemble
from dnlab.mesh import build_polar_mesh, refine

sigma = push_forward(constant(1.0), radial_qc_map(0.5))
mesh = build_polar_mesh(18, 112)
for _ in range(3):
    d = op_norm(dn_matrix(assemble(mesh, sigma), 16) - dn_matrix(assemble(mesh, constant(1.0)), 16))
    print(f"h={mesh.h:.4f}  ||L_(F*I) - L_I|| = {d:.4f}")
    mesh = refine(mesh)

for rho in (0.4, 0.2, 0.1):
    # the pushed-forward inclusion edge sits at radius (1 + rho)/2
    mesh = build_polar_mesh(72, 448, [0.5 * (1 + rho)])
    L1 = dn_matrix(assemble(mesh, constant(1.0)), 16)
    s = push_forward(radial_layered([rho], [100.0, 1.0]), cloaking_map(rho))
    # equivalently dnlab.experiments.cloaked_field(rho, 100.0)
    print(f"rho={rho}: ||L_cloak - L_I|| = {op_norm(dn_matrix(assemble(mesh, s), 16) - L1):.4f}")
