"""FEM Dirichlet-to-Neumann matrices and their Sobolev operator norms.

For sigma = I the DN eigenvalue of mode k is |k|, and the FEM matrix
approaches that diagonal as the mesh is refined.
"""
import numpy as np

from dnlab.conductivity import constant, counterexample_sigma
from dnlab.dnmap import dn_matrix, op_norm
from dnlab.fem import assemble
from dnlab.mesh import build_polar_mesh
from dnlab.oracles import sup_m_k

for nr, ns in [(9, 56), (18, 112), (36, 224)]:
    mesh = build_polar_mesh(nr, ns, [0.81, 0.9])
    A = dn_matrix(assemble(mesh, constant(1.0)), 8)
    d = A.diagonal_by_mode()[1:, 0]
    err = np.max(np.abs(d - np.arange(1, 9)) / np.arange(1, 9))
    print(f"h={mesh.h:.4f}  max relative diagonal error {err:.2e}  "
          f"max off-diagonal {A.off_diagonal_max():.1e}")

# The ring conductivity: FEM norm of the DN difference against the closed form.
L1 = dn_matrix(assemble(mesh, constant(1.0)), 16)
LR = dn_matrix(assemble(mesh, counterexample_sigma(1.0, 0.9)), 16)
print("FEM    ||L_R - L_1|| =", op_norm(LR - L1))
print("closed form sup m_k  =", sup_m_k(1.0, 0.9, 16)[0])
