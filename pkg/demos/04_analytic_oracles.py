"""Closed-form references: transfer matrices for radial layers and the ring defect m_k."""
from dnlab.oracles import (
    CRITICAL_R,
    RadialLayers,
    counterexample_bound,
    critical_mode,
    laminate_g_limit,
    layered_defect,
    m_k,
    sup_m_k,
)

alpha, R = 1.0, 0.95
layers = RadialLayers((R * R, R), (1.0, 1.0 + alpha, 1.0))
print(" k   transfer/k        m_k")
for k in (1, 2, 5, 10, 20):
    print(f"{k:2d}  {layered_defect(layers, k) / k:.15f}  {m_k(alpha, R, k):.15f}")

# The defect stays above alpha/(16(2+alpha)) however thin the ring is.
print("bound 1/48 =", counterexample_bound(alpha))
for R in (0.95, 0.99, 0.999):
    ks = critical_mode(R)
    print(f"R={R}: k*={ks}  m_k*={m_k(alpha, R, ks):.5f}  sup={sup_m_k(alpha, R)[0]:.5f}")
print("critical_mode needs R >", CRITICAL_R)

print("laminate G-limit for phases 1, 2:\n", laminate_g_limit(1.0, 2.0))
