"""Structured polar meshes of the unit disc.

A mesh has one centre vertex plus ``n_rings`` rings of ``n_sectors`` vertices.
Ring radii can be snapped so that element edges sit on conductivity jumps.
"""
import io

import numpy as np

from dnlab.mesh import boundary_layer, build_polar_mesh, read_mesh, refine, write_mesh

mesh = build_polar_mesh(4, 16)
print("V =", mesh.n_vertices, " T =", mesh.n_triangles, " B =", len(mesh.boundary))
print("Euler characteristic:", mesh.euler_characteristic())

# Snap rings onto the two interfaces of the ring conductivity at R = 0.9.
snapped = build_polar_mesh(18, 112, [0.81, 0.9])
radii = np.unique(np.round(np.hypot(*snapped.vertices.T), 12))
print("0.81 and 0.9 are mesh radii:", bool(np.isin([0.81, 0.9], radii).all()))

# Uniform refinement halves the mesh size.
chain = [snapped]
for _ in range(2):
    chain.append(refine(chain[-1]))
print("h along the chain:", [f"{m.h:.4f}" for m in chain])

# Elements whose centroid lies within 0.1 of the boundary.
layer = boundary_layer(chain[-1], 0.1)
print("boundary layer elements at delta=0.1:", len(layer.elements))

# Text round trip.
buf = io.StringIO()
write_mesh(mesh, buf)
back = read_mesh(io.StringIO(buf.getvalue()))
print("round trip exact:", np.array_equal(back.vertices, mesh.vertices))
