"""Discrete Dirichlet-to-Neumann forms and their fractional Sobolev norms.

Boundary functions are expanded in the L2(circle)-orthonormal real basis

    f_0 = 1/sqrt(2 pi),  f_{k,c} = cos(k t)/sqrt(pi),  f_{k,s} = sin(k t)/sqrt(pi),

ordered ``[const, cos 1, sin 1, cos 2, sin 2, ...]``, so matrix entries are
the pairings ``<Lambda f_k, f_l>`` directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fem import StiffnessSystem
from .mesh import TriangleMesh

__all__ = [
    "DnMatrix",
    "SobolevWeights",
    "basis_labels",
    "fourier_basis",
    "schur_dn",
    "to_fourier",
    "dn_matrix",
    "op_norm",
    "weak_pairing",
    "write_dn_csv",
    "read_dn_csv",
    "mode_vector",
]


def basis_labels(k_max: int):
    """``[(type, k), ...]`` in basis order."""
    out = [("const", 0)]
    for k in range(1, k_max + 1):
        out += [("cos", k), ("sin", k)]
    return out


def _modes(k_max: int) -> np.ndarray:
    return np.array([k for _, k in basis_labels(k_max)])


@dataclass(frozen=True)
class SobolevWeights:
    """Weights ``max(|k|, 1)**(2 s)`` per basis function."""

    s: float
    k_max: int

    @property
    def w(self) -> np.ndarray:
        return np.maximum(_modes(self.k_max), 1).astype(float) ** (2 * self.s)

    def norm(self, coeffs) -> float:
        c = np.asarray(coeffs, dtype=float)
        return float(np.sqrt(np.sum(self.w * c * c)))


@dataclass(frozen=True, eq=False)
class DnMatrix:
    """DN bilinear form in the orthonormal boundary Fourier basis."""

    entries: np.ndarray
    k_max: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        n = 2 * self.k_max + 1
        if self.entries.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n} for k_max={self.k_max}")

    @property
    def labels(self):
        return basis_labels(self.k_max)

    def __sub__(self, other: "DnMatrix") -> "DnMatrix":
        k = min(self.k_max, other.k_max)
        a, b = self.truncate(k), other.truncate(k)
        return DnMatrix(a.entries - b.entries, k, {"difference": True})

    def __add__(self, other: "DnMatrix") -> "DnMatrix":
        if self.k_max != other.k_max:
            raise ValueError("k_max mismatch")
        return DnMatrix(self.entries + other.entries, self.k_max)

    def __mul__(self, c: float) -> "DnMatrix":
        return DnMatrix(c * self.entries, self.k_max, dict(self.provenance))

    __rmul__ = __mul__

    def truncate(self, k_max: int) -> "DnMatrix":
        if k_max > self.k_max:
            raise ValueError(f"cannot extend k_max {self.k_max} to {k_max}")
        n = 2 * k_max + 1
        return DnMatrix(self.entries[:n, :n].copy(), k_max, dict(self.provenance))

    def diagonal_by_mode(self) -> np.ndarray:
        """Diagonal entries as ``(k_max + 1, 2)``: ``[k] -> (cos, sin)``; k=0 in both slots."""
        d = np.diag(self.entries)
        out = np.empty((self.k_max + 1, 2))
        out[0] = d[0]
        out[1:, 0] = d[1::2]
        out[1:, 1] = d[2::2]
        return out

    def off_diagonal_max(self) -> float:
        m = self.entries - np.diag(np.diag(self.entries))
        return float(np.abs(m).max()) if m.size > 1 else 0.0

    def invariant_report(self) -> dict:
        e = self.entries
        return {
            "asymmetry": float(np.abs(e - e.T).max()),
            "constant_column": float(np.linalg.norm(e[:, 0])),
            "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (e + e.T)).min()),
        }


def mode_vector(k_max: int, kind: str, k: int) -> np.ndarray:
    """Coefficient vector of a single basis function."""
    v = np.zeros(2 * k_max + 1)
    v[basis_labels(k_max).index((kind, k))] = 1.0
    return v


def fourier_basis(theta, k_max: int) -> np.ndarray:
    """Nodal values ``(B, 2 k_max + 1)`` of the orthonormal basis at angles ``theta``."""
    theta = np.asarray(theta, dtype=float)
    cols = [np.full_like(theta, 1.0 / np.sqrt(2 * np.pi))]
    for k in range(1, k_max + 1):
        cols += [np.cos(k * theta) / np.sqrt(np.pi), np.sin(k * theta) / np.sqrt(np.pi)]
    return np.stack(cols, axis=1)


def _check_k_max(mesh: TriangleMesh, k_max: int):
    b = len(mesh.boundary)
    if k_max < 0 or k_max > b // 4:
        raise ValueError(f"k_max={k_max} violates k_max <= B/4 = {b // 4}")


def schur_dn(sys: StiffnessSystem) -> np.ndarray:
    """Dense boundary form ``A_bb - A_bi A_ii^-1 A_ib``."""
    Aib = sys.A_ib.toarray()
    X = sys.solve_interior(Aib)
    S = sys.A_bb.toarray() - Aib.T @ X
    return 0.5 * (S + S.T)


def to_fourier(S: np.ndarray, mesh: TriangleMesh, k_max: int, provenance=None) -> DnMatrix:
    """Project a nodal boundary form on the Fourier basis by nodal interpolation."""
    _check_k_max(mesh, k_max)
    F = fourier_basis(mesh.boundary_angles(), k_max)
    M = F.T @ S @ F
    return DnMatrix(0.5 * (M + M.T), k_max, dict(provenance or {}))


def dn_matrix(sys: StiffnessSystem, k_max: int) -> DnMatrix:
    """Fourier DN matrix without forming the dense Schur complement.

    Uses ``F^T S F = F^T A_bb F - (A_ib F)^T A_ii^-1 (A_ib F)``, which costs
    ``2 k_max + 1`` interior solves instead of ``B``.
    """
    mesh = sys.mesh
    _check_k_max(mesh, k_max)
    F = fourier_basis(mesh.boundary_angles(), k_max)
    AF = sys.A_ib @ F
    X = sys.solve_interior(AF)
    M = F.T @ (sys.A_bb @ F) - AF.T @ X
    prov = {"n_vertices": mesh.n_vertices, "h": mesh.h, "k_max": k_max,
            "sigma": sys.sigma.kind}
    return DnMatrix(0.5 * (M + M.T), k_max, prov)


def op_norm(A: DnMatrix, from_s: float = 0.5, to_s: float = -0.5) -> float:
    """Operator norm ``H^from_s -> H^to_s`` of a Fourier-basis matrix.

    This is the largest singular value of ``D2 A D1`` with
    ``D1 = diag(max(|k|,1)**-from_s)`` and ``D2 = diag(max(|k|,1)**to_s)``.
    """
    w = np.maximum(_modes(A.k_max), 1).astype(float)
    M = (w ** to_s)[:, None] * A.entries * (w ** -from_s)[None, :]
    if not np.any(M):
        return 0.0
    return float(np.linalg.norm(M, ord=2))


def weak_pairing(A: DnMatrix, phi, psi) -> float:
    """``psi^T A phi`` for coefficient vectors of matching truncation."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    n = A.entries.shape[0]
    if phi.shape != (n,) or psi.shape != (n,):
        raise ValueError(f"coefficient vectors must have length {n}")
    return float(psi @ A.entries @ phi)


def write_dn_csv(A: DnMatrix, path) -> None:
    """CSV with header ``k_type,l_type,k,l,value``; value is ``entries[l, k]``.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_dn_rows(A, csv.writer(path, lineterminator="\n"))
        return
    with open(path, "w", newline="") as fh:
        _write_dn_rows(A, csv.writer(fh))


def _write_dn_rows(A: DnMatrix, w) -> None:
    labels = A.labels
    w.writerow(["k_type", "l_type", "k", "l", "value"])
    for ci, (kt, k) in enumerate(labels):
        for ri, (lt, l) in enumerate(labels):
            w.writerow([kt, lt, k, l, repr(float(A.entries[ri, ci]))])


def read_dn_csv(path) -> DnMatrix:
    """Inverse of :func:`write_dn_csv`; accepts a path or a text stream."""
    text = path.read() if hasattr(path, "read") else Path(path).read_text()
    rows = list(csv.DictReader(text.splitlines()))
    k_max = max(int(r["k"]) for r in rows)
    labels = basis_labels(k_max)
    idx = {lab: i for i, lab in enumerate(labels)}
    E = np.zeros((len(labels), len(labels)))
    for r in rows:
        E[idx[(r["l_type"], int(r["l"]))], idx[(r["k_type"], int(r["k"]))]] = float(r["value"])
    return DnMatrix(E, k_max, {"source": str(path)})
