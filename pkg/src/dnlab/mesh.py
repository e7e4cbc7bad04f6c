"""Structured polar triangulations of the unit disc.

Vertex 0 is the centre; ring ``i`` (1-based) holds ``n_sectors`` vertices at
angles ``2*pi*j/n_sectors``.  The outermost ring lies exactly on the unit
circle and doubles as the boundary, so boundary indices are naturally ordered
by increasing polar angle starting at angle 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TriangleMesh",
    "BoundaryLayer",
    "MeshError",
    "ring_radii",
    "build_polar_mesh",
    "refine",
    "boundary_layer",
    "layer_elements",
    "write_mesh",
    "read_mesh",
]


class MeshError(ValueError):
    pass


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Triangulation of the closed unit disc.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise
    boundary : (B,) int array of boundary vertices in angle order
    h : float
        Maximum edge length.
    interfaces : tuple of float
        Radii that were snapped onto rings.
    n_rings, n_sectors : int
        Generation parameters (0 when unknown, e.g. for a mesh read from disk
        that is not a polar mesh).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    h: float
    interfaces: tuple = ()
    n_rings: int = 0
    n_sectors: int = 0
    radii: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def boundary_angles(self) -> np.ndarray:
        x, y = self.vertices[self.boundary].T
        return np.mod(np.arctan2(y, x), 2 * np.pi)

    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_triangles


@dataclass(frozen=True, eq=False)
class BoundaryLayer:
    """Sample points of the inner boundary layer ``1 - |x| < delta``."""

    delta: float
    sample_points: np.ndarray
    elements: np.ndarray


def ring_radii(n_rings: int, snap_radii=()) -> np.ndarray:
    """Ring radii in (0, 1], piecewise uniform between snapped radii.

    Each segment between consecutive snap radii receives a share of the rings
    proportional to its length (largest-remainder rounding, at least one ring
    per segment), so every snap radius is hit exactly.
    """
    snap = [float(s) for s in snap_radii]
    if n_rings < 1:
        raise MeshError("n_rings must be positive")
    for s in snap:
        if not 0.0 < s < 1.0:
            raise MeshError(f"snap radius {s} outside (0, 1)")
    if any(b <= a for a, b in zip(snap, snap[1:])):
        raise MeshError("snap radii must be strictly increasing")
    if len(snap) >= n_rings:
        raise MeshError(
            f"{len(snap)} snap radii need more than {n_rings} rings")

    ends = np.array([0.0] + snap + [1.0])
    lengths = np.diff(ends)
    ideal = n_rings * lengths
    counts = np.maximum(np.floor(ideal).astype(int), 1)
    while counts.sum() > n_rings:
        # over-allocated because of the one-ring minimum
        cand = np.flatnonzero(counts > 1)
        j = cand[np.argmin((ideal - counts)[cand])]
        counts[j] -= 1
    rem = ideal - counts
    while counts.sum() < n_rings:
        j = int(np.argmax(rem))
        counts[j] += 1
        rem[j] -= 1.0

    radii = []
    for a, b, c in zip(ends[:-1], ends[1:], counts):
        radii.extend(a + (b - a) * np.arange(1, c + 1) / c)
    radii = np.array(radii)
    # hit snap radii and the unit circle bit-exactly
    idx = np.cumsum(counts) - 1
    radii[idx] = ends[1:]
    return radii


def build_polar_mesh(n_rings: int, n_sectors: int, snap_radii=()) -> TriangleMesh:
    """Structured polar mesh with ``1 + n_rings * n_sectors`` vertices.

    Parameters
    ----------
    n_rings : int
        Number of rings around the centre vertex, the last one being the
        unit circle.
    n_sectors : int
        Vertices per ring, at least 3.
    snap_radii : sequence of float
        Strictly increasing radii in (0, 1) that must coincide with rings.
    """
    if n_sectors < 3:
        raise MeshError("n_sectors must be at least 3")
    radii = ring_radii(n_rings, snap_radii)

    theta = 2 * np.pi * np.arange(n_sectors) / n_sectors
    c, s = np.cos(theta), np.sin(theta)
    # exact axis values keep boundary radii at 1 to rounding
    pts = np.empty((1 + n_rings * n_sectors, 2))
    pts[0] = 0.0
    pts[1:, 0] = (radii[:, None] * c[None, :]).ravel()
    pts[1:, 1] = (radii[:, None] * s[None, :]).ravel()

    def vid(i, j):
        # ring i is 0-based here
        return 1 + i * n_sectors + np.mod(j, n_sectors)

    j = np.arange(n_sectors)
    fan = np.stack([np.zeros(n_sectors, dtype=int), vid(0, j), vid(0, j + 1)], axis=1)
    strips = []
    for i in range(n_rings - 1):
        a, b = vid(i, j), vid(i, j + 1)
        cc, d = vid(i + 1, j + 1), vid(i + 1, j)
        strips.append(np.stack([a, d, cc], axis=1))
        strips.append(np.stack([a, cc, b], axis=1))
    tris = np.concatenate([fan] + strips) if strips else fan

    boundary = vid(n_rings - 1, j)
    mesh = TriangleMesh(
        vertices=_frozen(pts, float),
        triangles=_frozen(tris, np.int64),
        boundary=_frozen(boundary, np.int64),
        h=0.0,
        interfaces=tuple(float(r) for r in snap_radii),
        n_rings=n_rings,
        n_sectors=n_sectors,
        radii=_frozen(radii, float),
    )
    object.__setattr__(mesh, "h", _max_edge(mesh))
    return mesh


def _max_edge(mesh: TriangleMesh) -> float:
    e = mesh.edges()
    d = mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]]
    return float(np.sqrt((d * d).sum(axis=1)).max())


def refine(mesh: TriangleMesh) -> TriangleMesh:
    """Regenerate with doubled rings and sectors, keeping snapped interfaces."""
    if mesh.n_rings < 1 or mesh.n_sectors < 3:
        raise MeshError("refine needs a mesh with known polar parameters")
    return build_polar_mesh(2 * mesh.n_rings, 2 * mesh.n_sectors, mesh.interfaces)


def layer_elements(mesh: TriangleMesh, delta: float) -> np.ndarray:
    """Indices of elements whose centroid lies in ``1 - |x| < delta``."""
    r = np.linalg.norm(mesh.centroids(), axis=1)
    return np.flatnonzero(1.0 - r < delta)


def boundary_layer(mesh: TriangleMesh, delta: float) -> BoundaryLayer:
    """Centroids in the layer plus a polar sampling grid of spacing <= delta/4."""
    if not 0.0 < delta <= 1.0:
        raise MeshError(f"delta={delta} outside (0, 1]")
    elems = layer_elements(mesh, delta)
    cents = mesh.centroids()[elems]

    radial = 1.0 - delta * (np.arange(4) + 0.5) / 4.0
    n_theta = int(np.ceil(8 * np.pi / delta))
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    grid = np.stack(
        [np.outer(radial, np.cos(theta)).ravel(), np.outer(radial, np.sin(theta)).ravel()],
        axis=1,
    )
    pts = np.concatenate([cents, grid])
    pts = pts[1.0 - np.linalg.norm(pts, axis=1) < delta]
    return BoundaryLayer(delta=float(delta), sample_points=pts, elements=elems)


def write_mesh(mesh: TriangleMesh, path) -> None:
    """Write the ``disc-mesh v1`` text format to a path or text stream."""
    lines = [f"disc-mesh v1 {mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [str(b) for b in mesh.boundary.tolist()]
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def read_mesh(path) -> TriangleMesh:
    """Read the ``disc-mesh v1`` text format.

    Polar parameters are recovered when the vertex count has the structured
    form ``1 + n_rings * B``; snapped interfaces are not stored in the format.
    ``path`` may also be an open text stream.
    """
    text = path.read() if hasattr(path, "read") else Path(path).read_text()
    lines = text.split("\n")
    head = lines[0].split()
    if head[:2] != ["disc-mesh", "v1"] or len(head) != 5:
        raise MeshError(f"{path}: not a disc-mesh v1 file")
    nv, nt, nb = (int(v) for v in head[2:])
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != nv + nt + nb:
        raise MeshError(f"{path}: expected {nv + nt + nb} records, found {len(body)}")
    verts = np.array([[float(v) for v in ln.split()] for ln in body[:nv]])
    tris = np.array([[int(v) for v in ln.split()] for ln in body[nv:nv + nt]], dtype=np.int64)
    bnd = np.array([int(ln) for ln in body[nv + nt:]], dtype=np.int64)
    n_rings = (nv - 1) // nb if nb and (nv - 1) % nb == 0 else 0
    radii = None
    if n_rings:
        r = np.linalg.norm(verts[1:].reshape(n_rings, nb, 2), axis=2)
        radii = r.mean(axis=1)
    mesh = TriangleMesh(
        vertices=_frozen(verts, float),
        triangles=_frozen(tris, np.int64),
        boundary=_frozen(bnd, np.int64),
        h=0.0,
        n_rings=n_rings,
        n_sectors=nb if n_rings else 0,
        radii=None if radii is None else _frozen(radii, float),
    )
    object.__setattr__(mesh, "h", _max_edge(mesh))
    return mesh
