"""Closed-form DN references for radial conductivities and laminates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dnmap import DnMatrix

__all__ = [
    "RadialLayers",
    "ModeSpectrum",
    "layered_reflection",
    "layered_dn",
    "layered_defect",
    "mode_spectrum",
    "layered_dn_matrix",
    "layers_from_profile",
    "radial_defect_norm",
    "m_k",
    "sup_m_k",
    "counterexample_bound",
    "critical_mode",
    "CRITICAL_R",
    "laminate_g_limit",
]

CRITICAL_R = 0.75 ** 0.25


@dataclass(frozen=True)
class RadialLayers:
    """``values[j]`` on ``radii[j-1] < r < radii[j]`` with ``r_0 = 0``, ``r_N = 1``."""

    radii: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(v) != len(r) + 1:
            raise ValueError("need len(values) == len(radii) + 1")
        if np.any(v <= 0):
            raise ValueError("layer values must be positive")
        if len(r) and (r[0] <= 0 or r[-1] >= 1 or np.any(np.diff(r) <= 0)):
            raise ValueError("radii must be strictly increasing in (0, 1)")

    @classmethod
    def from_field(cls, f) -> "RadialLayers":
        if f.kind not in ("radial-layered", "constant"):
            raise ValueError(f"no layered description for kind {f.kind!r}")
        if f.kind == "constant":
            m = np.asarray(f.metadata["value"])
            if not np.allclose(m, m[0, 0] * np.eye(2), rtol=0, atol=0):
                raise ValueError("anisotropic constant is not a radial layering")
            return cls((), (float(m[0, 0]),))
        return cls(tuple(f.metadata["radii"]), tuple(f.metadata["values"]))


@dataclass(frozen=True)
class ModeSpectrum:
    eigenvalues: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.eigenvalues) - 1


def layered_reflection(layers: RadialLayers, k: int) -> float:
    """Outer coefficient ratio ``b/a`` at ``r = 1`` of ``a r^k + b r^-k``.

    Propagates ``x_j = b_j r^(-2k) / a_j`` across interfaces; continuity of
    ``u`` and ``gamma du/dr`` gives, from inner phase ``g1`` to outer ``g2``,
    ``y = ((g2 - g1) + x (g2 + g1)) / ((g2 + g1) + x (g2 - g1))``, and
    ``x`` at the next interface is ``y * (r_j / r_{j+1})^(2k)``.  Only ratios
    below one appear, so large ``k`` neither overflows nor underflows badly.
    """
    k = abs(int(k))
    if k == 0:
        return 0.0
    radii = list(layers.radii) + [1.0]
    vals = layers.values
    x = 0.0
    for j, r in enumerate(radii[:-1]):
        g1, g2 = vals[j], vals[j + 1]
        y = ((g2 - g1) + x * (g2 + g1)) / ((g2 + g1) + x * (g2 - g1))
        x = y * (r / radii[j + 1]) ** (2 * k)
    return x


def layered_dn(layers: RadialLayers, k: int) -> float:
    """DN eigenvalue of mode ``k``: ``gamma_N |k| (1 - x)/(1 + x)``; 0 for ``k = 0``."""
    k = abs(int(k))
    if k == 0:
        return 0.0
    x = layered_reflection(layers, k)
    if 1.0 + x == 0.0:
        raise ArithmeticError("degenerate outer coefficients a + b = 0")
    return layers.values[-1] * k * (1.0 - x) / (1.0 + x)


def layered_defect(layers: RadialLayers, k: int) -> float:
    """``layered_dn - gamma_N |k|`` written as ``-2 gamma_N |k| x/(1 + x)``."""
    k = abs(int(k))
    if k == 0:
        return 0.0
    x = layered_reflection(layers, k)
    return -2.0 * layers.values[-1] * k * x / (1.0 + x)


def mode_spectrum(layers: RadialLayers, k_max: int) -> ModeSpectrum:
    return ModeSpectrum(np.array([layered_dn(layers, k) for k in range(k_max + 1)]))


def layered_dn_matrix(layers: RadialLayers, k_max: int, defect: bool = False) -> DnMatrix:
    """Diagonal DN matrix in the real Fourier basis (optionally minus ``gamma_N |k|``)."""
    g = layered_defect if defect else layered_dn
    d = [0.0]
    for k in range(1, k_max + 1):
        v = g(layers, k)
        d += [v, v]
    return DnMatrix(np.diag(d), k_max, {"oracle": "layered", "defect": defect})


def layers_from_profile(profile, n_layers: int = 400, base: float = 1.0) -> RadialLayers:
    """Piecewise-constant approximation (midpoint values) of a continuous radial profile."""
    edges = np.linspace(0.0, 1.0, n_layers + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return RadialLayers(tuple(edges[1:-1]), tuple(base + np.asarray(profile(mids), dtype=float)))


def radial_defect_norm(layers: RadialLayers, k_max: int, reference: float = 1.0) -> float:
    """``H^1/2 -> H^-1/2`` norm of ``Lambda_layers - reference * Lambda_1`` up to ``k_max``.

    For a diagonal operator this is ``max_k |lambda_k - reference k| / k``.
    """
    if reference == layers.values[-1]:
        return max(abs(layered_defect(layers, k)) / k for k in range(1, k_max + 1))
    return max(abs(layered_dn(layers, k) - reference * k) / k for k in range(1, k_max + 1))


def m_k(alpha: float, R: float, k: int) -> float:
    """Per-mode DN defect of the ring conductivity, with ``t = R^(2|k|)``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if not 0.0 < R < 1.0:
        raise ValueError("R must lie in (0, 1)")
    if k == 0:
        raise ValueError("m_k is defined for k != 0")
    t = R ** (2 * abs(k))
    u = t - t * t
    return 2.0 * alpha * (2.0 + alpha) * u / ((2.0 + alpha) ** 2 - alpha ** 2 * t
                                              - alpha * (2.0 + alpha) * u)


def sup_m_k(alpha: float, R: float, k_max: int | None = None):
    """``(max_k m_k, argmax)`` over ``1 <= k <= k_max``.

    Without ``k_max`` the search runs until ``t = R^(2k)`` is past the
    maximiser of ``t - t^2`` by a safe margin; the formula is unimodal in
    ``t`` there, so the truncation is exact.
    """
    if k_max is None:
        k_max = max(4, int(math.ceil(-3.0 / math.log2(R))) + 4)
    vals = [m_k(alpha, R, k) for k in range(1, k_max + 1)]
    i = int(np.argmax(vals))
    return vals[i], i + 1


def counterexample_bound(alpha: float) -> float:
    return alpha / (16.0 * (2.0 + alpha))


def critical_mode(R: float) -> int:
    """``floor(-1 / (2 log2 R))`` for ``(3/4)^(1/4) < R < 1``."""
    if not CRITICAL_R < R < 1.0:
        raise ValueError(f"R={R} outside ((3/4)^(1/4), 1) = ({CRITICAL_R:.6f}, 1)")
    return int(math.floor(-1.0 / (2.0 * math.log2(R))))


def laminate_g_limit(a: float, b: float, direction=(1.0, 0.0)) -> np.ndarray:
    """Homogenised tensor of equal-proportion stripes varying along ``direction``.

    Harmonic mean ``2ab/(a+b)`` along ``direction``, arithmetic mean across.
    """
    if a <= 0 or b <= 0:
        raise ValueError("phases must be positive")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    P = np.outer(d, d)
    m = 2 * a * b / (a + b) * P + 0.5 * (a + b) * (np.eye(2) - P)
    return 0.5 * (m + m.T)
