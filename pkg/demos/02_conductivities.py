"""Conductivity fields: constants, radial rings, laminates and push-forwards."""
import numpy as np

from dnlab.conductivity import (
    constant,
    counterexample_sigma,
    homogenized_laminate,
    laminate,
    push_forward,
    radial_qc_map,
)

pts = np.array([[0.0, 0.0], [0.85, 0.0], [0.0, 0.95]])

ring = counterexample_sigma(1.0, 0.9)
print("ring conductivity at r = 0, 0.85, 0.95:", ring.eval(pts)[:, 0, 0])

lam = laminate(1.0, 2.0, 8, (1.0, 0.0), support_radius=0.5)
x = np.linspace(-0.4, 0.4, 9)
print("laminate along the x axis:", lam.eval(np.c_[x, 0 * x])[:, 0, 0])
print("its G-limit inside the support:\n", homogenized_laminate(1.0, 2.0, support_radius=0.5).eval(pts[:1])[0])

# Push the identity forward through a radial map fixing the boundary.
F = radial_qc_map(0.5)
s = push_forward(constant(1.0), F)
m = s.eval(np.array([[0.3, 0.2]]))[0]
print("F_* I at (0.3, 0.2):\n", m)
print("det =", np.linalg.det(m), " eigenvalues =", np.linalg.eigvalsh(m))
