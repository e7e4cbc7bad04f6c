"""Conductivity fields on the unit disc and changes of variables.

Every field evaluates vectorised: ``field.eval(points)`` maps an ``(N, 2)``
array of positions to an ``(N, 2, 2)`` array of symmetric matrices.  Calling a
field on a single point returns one ``(2, 2)`` matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ConductivityError",
    "ConductivityField",
    "Diffeomorphism",
    "ConductivitySequence",
    "constant",
    "radial_layered",
    "counterexample_sigma",
    "laminate",
    "homogenized_laminate",
    "blended",
    "push_forward",
    "radial_diffeomorphism",
    "identity_map",
    "cloaking_map",
    "radial_qc_map",
    "compose",
    "quasiconformal_constant",
    "disc_samples",
    "spectral_norm_diff",
    "boundary_condition_scan",
    "field_from_config",
    "field_to_config",
]

_PROBES = np.array([[1.0, 0.0], [0.0, 1.0], [2 ** -0.5, 2 ** -0.5]])


class ConductivityError(ValueError):
    pass


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 2), x.ndim == 1


@dataclass(frozen=True, eq=False)
class ConductivityField:
    """A matrix conductivity with a known ellipticity constant ``K``."""

    func: Callable[[np.ndarray], np.ndarray]
    K: float
    kind: str
    metadata: dict = field(default_factory=dict)
    cell_average: Callable | None = field(default=None, repr=False)

    def eval(self, x) -> np.ndarray:
        pts, single = _as_points(x)
        out = _sym(np.asarray(self.func(pts), dtype=float))
        return out[0] if single else out

    __call__ = eval

    def interfaces(self) -> tuple:
        """Radii across which the field jumps (for mesh snapping)."""
        return tuple(self.metadata.get("interfaces", ()))

    def check(self, points, atol: float = 1e-12) -> bool:
        """Sampled symmetry and ellipticity against ``K``."""
        m = self.eval(np.asarray(points).reshape(-1, 2))
        if not np.array_equal(m, np.swapaxes(m, 1, 2)):
            return False
        q = np.einsum("pi,nij,pj->np", _PROBES, m, _PROBES)
        return bool(np.all(q >= 1.0 / self.K - atol) and np.all(q <= self.K + atol))


@dataclass(frozen=True, eq=False)
class Diffeomorphism:
    """Orientation-preserving map of the disc with analytic Jacobian."""

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    boundary_identity: bool
    descriptor: dict = field(default_factory=dict)

    def check(self, points, tol: float = 1e-10) -> bool:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if np.abs(self.inverse(self.forward(pts)) - pts).max() > tol:
            return False
        if np.any(np.linalg.det(self.jacobian(pts)) <= 0):
            return False
        if self.boundary_identity:
            t = np.linspace(0, 2 * np.pi, 97)
            b = np.stack([np.cos(t), np.sin(t)], axis=1)
            if np.abs(self.forward(b) - b).max() > 1e-12:
                return False
        return True


@dataclass(frozen=True, eq=False)
class ConductivitySequence:
    """Indexed family ``at(n)`` with its limit, evaluated on ``indices``."""

    at: Callable[[int], ConductivityField]
    limit: ConductivityField
    indices: tuple
    description: str = ""

    def members(self, n_max=None):
        return [(n, self.at(n)) for n in self.indices if n_max is None or n <= n_max]


# --- constructors -----------------------------------------------------------

def constant(value=1.0) -> ConductivityField:
    """Constant field, scalar ``c`` meaning ``c*I`` or an explicit 2x2 matrix."""
    m = np.asarray(value, dtype=float)
    if m.ndim == 0:
        m = float(m) * np.eye(2)
    if m.shape != (2, 2) or not np.array_equal(m, m.T):
        raise ConductivityError("constant conductivity must be a symmetric 2x2 matrix")
    ev = np.linalg.eigvalsh(m)
    if ev[0] <= 0:
        raise ConductivityError("constant conductivity must be positive definite")
    K = max(ev[1], 1.0 / ev[0], 1.0)
    m = m.copy()
    return ConductivityField(
        func=lambda x: np.broadcast_to(m, (len(x), 2, 2)).copy(),
        K=float(K),
        kind="constant",
        metadata={"value": m.tolist()},
    )


def radial_layered(radii, values) -> ConductivityField:
    """Isotropic ``values[j]*I`` on the annulus ``radii[j-1] < |x| < radii[j]``.

    ``len(values) == len(radii) + 1``; the last value occupies the outermost
    annulus up to the unit circle.  A point exactly on an interface takes the
    outer value.
    """
    radii = np.asarray(radii, dtype=float).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if len(values) != len(radii) + 1:
        raise ConductivityError("need one more value than radii")
    if np.any(values <= 0):
        raise ConductivityError("layer values must be positive")
    if np.any(radii <= 0) or np.any(radii >= 1) or np.any(np.diff(radii) <= 0):
        raise ConductivityError("layer radii must be strictly increasing in (0, 1)")

    def func(x):
        r = np.hypot(x[:, 0], x[:, 1])
        g = values[np.searchsorted(radii, r, side="right")]
        return g[:, None, None] * np.eye(2)

    K = max(values.max(), 1.0 / values.min(), 1.0)
    return ConductivityField(
        func=func,
        K=float(K),
        kind="radial-layered",
        metadata={"radii": radii.tolist(), "values": values.tolist(),
                  "interfaces": radii.tolist()},
    )


def counterexample_sigma(alpha: float, R: float) -> ConductivityField:
    """``(1 + alpha)*I`` on the ring ``R**2 < |x| < R`` and ``I`` elsewhere."""
    if not 0.0 < R < 1.0:
        raise ConductivityError(f"R={R} outside (0, 1)")
    if alpha < 0:
        raise ConductivityError(f"alpha={alpha} must be positive")
    if alpha == 0:
        f = constant(1.0)
        return ConductivityField(f.func, 1.0, "radial-layered",
                                 {"radii": [], "values": [1.0], "interfaces": [],
                                  "alpha": 0.0, "R": R})
    f = radial_layered([R * R, R], [1.0, 1.0 + alpha, 1.0])
    f.metadata.update(alpha=float(alpha), R=float(R))
    return f


def laminate(a: float, b: float, n: int, direction=(1.0, 0.0),
             support_radius: float = 1.0) -> ConductivityField:
    """Two-phase stripes of period ``1/n`` along ``direction`` inside a disc.

    The phase at ``x`` is ``a`` when ``frac(n * x.direction) < 1/2`` and ``b``
    otherwise; outside ``|x| < support_radius`` the field is the identity.
    """
    if a <= 0 or b <= 0:
        raise ConductivityError("laminate phases must be positive")
    if n < 1:
        raise ConductivityError("laminate needs n >= 1")
    if not 0.0 < support_radius <= 1.0:
        raise ConductivityError("support_radius must lie in (0, 1]")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def func(x):
        s = np.mod(n * (x @ d), 1.0)
        g = np.where(s < 0.5, a, b)
        if support_radius < 1.0:
            g = np.where(np.hypot(x[:, 0], x[:, 1]) < support_radius, g, 1.0)
        return g[:, None, None] * np.eye(2)

    def cell_average(tri):
        # exact phase fraction per triangle, mixed by the rank-one laminate rule
        theta = _stripe_fraction(n * (tri @ d))
        harm = 1.0 / (theta / a + (1.0 - theta) / b)
        arit = theta * a + (1.0 - theta) * b
        P = np.outer(d, d)
        out = harm[:, None, None] * P + arit[:, None, None] * (np.eye(2) - P)
        if support_radius < 1.0:
            c = tri.mean(axis=1)
            outside = np.hypot(c[:, 0], c[:, 1]) >= support_radius
            out[outside] = np.eye(2)
        return out

    md = {"a": a, "b": b, "n": int(n), "direction": d.tolist(),
          "support_radius": support_radius}
    if support_radius < 1.0:
        md["interfaces"] = [support_radius]
    return ConductivityField(func, float(max(a, b, 1 / a, 1 / b)), "laminate", md,
                             cell_average=cell_average)


def homogenized_laminate(a: float, b: float, direction=(1.0, 0.0),
                         support_radius: float = 1.0) -> ConductivityField:
    """G-limit of :func:`laminate` as ``n -> inf``: constant tensor inside the support."""
    if a <= 0 or b <= 0:
        raise ConductivityError("laminate phases must be positive")
    if not 0.0 < support_radius <= 1.0:
        raise ConductivityError("support_radius must lie in (0, 1]")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    P = np.outer(d, d)
    G = 2 * a * b / (a + b) * P + 0.5 * (a + b) * (np.eye(2) - P)
    G = 0.5 * (G + G.T)

    def func(x):
        out = np.broadcast_to(G, (len(x), 2, 2)).copy()
        if support_radius < 1.0:
            out[np.hypot(x[:, 0], x[:, 1]) >= support_radius] = np.eye(2)
        return out

    md = {"a": a, "b": b, "n": None, "direction": d.tolist(),
          "support_radius": support_radius}
    if support_radius < 1.0:
        md["interfaces"] = [support_radius]
    return ConductivityField(func, float(max(a, b, 1 / a, 1 / b)), "laminate", md)


def _linear_cdf(t, s1, s2, s3):
    """Area fraction of a triangle where a linear function with sorted vertex values is ``<= t``."""
    t = np.clip(t, s1, s3)
    d31, d21, d32 = s3 - s1, s2 - s1, s3 - s2
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(d21 > 0, (t - s1) ** 2 / (d21 * d31), 0.0)
        hi = np.where(d32 > 0, 1.0 - (s3 - t) ** 2 / (d32 * d31), 1.0)
    out = np.where(t <= s2, lo, hi)
    return np.where(d31 > 0, out, np.where(t >= s3, 1.0, 0.0))


def _stripe_fraction(s):
    """Fraction of each triangle with ``frac(s) < 1/2`` for vertex values ``s`` of shape (T, 3)."""
    s = np.sort(s, axis=1)
    s1, s2, s3 = s.T
    m0 = np.floor(s1)
    total = np.zeros(len(s))
    for j in range(int((np.floor(s3) - m0).max()) + 1):
        m = m0 + j
        total += _linear_cdf(m + 0.5, s1, s2, s3) - _linear_cdf(m, s1, s2, s3)
    # a constant-coordinate triangle falls in one phase
    flat = s3 == s1
    total[flat] = (np.mod(s1[flat], 1.0) < 0.5).astype(float)
    return np.clip(total, 0.0, 1.0)


def blended(base: ConductivityField, profile: Callable, amplitude: float,
            profile_max: float = 1.0) -> ConductivityField:
    """``base + amplitude * profile(|x|) * I`` for a radial profile in [0, profile_max]."""
    if amplitude < 0:
        raise ConductivityError("blended amplitude must be non-negative")

    def func(x):
        r = np.hypot(x[:, 0], x[:, 1])
        return base.eval(x) + (amplitude * profile(r))[:, None, None] * np.eye(2)

    md = {"base": field_to_config(base), "amplitude": amplitude}
    md.update({k: v for k, v in base.metadata.items() if k == "interfaces"})
    return ConductivityField(func, base.K + amplitude * profile_max, "blended", md)


# --- diffeomorphisms --------------------------------------------------------

def radial_diffeomorphism(f, df, finv, boundary_identity=True, descriptor=None,
                          slope0=None) -> Diffeomorphism:
    """Map ``x -> f(|x|) x/|x|`` from a radial profile and its derivative.

    ``DF = f'(r) P_r + (f(r)/r) P_theta``; at the origin ``f(r)/r`` is
    replaced by ``slope0`` (default ``f'(0)``).
    """
    s0 = float(df(np.zeros(1))[0]) if slope0 is None else slope0

    def _scale(r, g):
        out = np.full_like(r, s0)
        nz = r > 0
        out[nz] = g(r[nz]) / r[nz]
        return out

    def forward(x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        return x * _scale(r, f)[..., None]

    def inverse(y):
        y = np.asarray(y, dtype=float)
        s = np.hypot(y[..., 0], y[..., 1])
        out = np.empty_like(s)
        nz = s > 0
        out[nz] = finv(s[nz]) / s[nz]
        out[~nz] = 1.0 / s0
        return y * out[..., None]

    def jacobian(x):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        r = np.hypot(x[:, 0], x[:, 1])
        u = np.zeros_like(x)
        nz = r > 0
        u[nz] = x[nz] / r[nz, None]
        u[~nz] = (1.0, 0.0)
        pr = u[:, :, None] * u[:, None, :]
        fr = _scale(r, f)
        dfr = np.asarray(df(r), dtype=float)
        return dfr[:, None, None] * pr + fr[:, None, None] * (np.eye(2) - pr)

    return Diffeomorphism(forward, inverse, jacobian, boundary_identity,
                          descriptor or {"kind": "radial"})


def identity_map() -> Diffeomorphism:
    return Diffeomorphism(
        forward=lambda x: np.array(x, dtype=float),
        inverse=lambda y: np.array(y, dtype=float),
        jacobian=lambda x: np.broadcast_to(np.eye(2), (len(np.reshape(x, (-1, 2))), 2, 2)).copy(),
        boundary_identity=True,
        descriptor={"kind": "identity"},
    )


def cloaking_map(rho: float) -> Diffeomorphism:
    """Radial cloaking map blowing the disc ``|x| < rho`` up to radius ``(1+rho)/2``.

    Profile ``f(r) = (1 + r)/2`` on ``rho <= r <= 1`` and the linear stretch
    ``f(r) = r (1 + rho)/(2 rho)`` on ``r < rho``.  The stretch is conformal,
    so an isotropic inclusion inside stays isotropic with the same value.
    """
    if not 0.0 < rho < 1.0:
        raise ConductivityError(f"rho={rho} outside (0, 1)")
    rho = float(rho)
    s_in = (1.0 + rho) / (2.0 * rho)
    r_out = 0.5 * (1.0 + rho)

    def f(r):
        return np.where(r < rho, s_in * r, 0.5 * (1.0 + r))

    def df(r):
        return np.where(r < rho, s_in, 0.5)

    def finv(s):
        return np.where(s < r_out, s / s_in, 2.0 * s - 1.0)

    return radial_diffeomorphism(f, df, finv, True, {"kind": "cloaking", "rho": rho},
                                 slope0=s_in)


def radial_qc_map(c: float) -> Diffeomorphism:
    """Radial map with profile ``f(r) = r + c r (1 - r)``, ``|c| < 1``."""
    if not abs(c) < 1.0:
        raise ConductivityError(f"c={c} must satisfy |c| < 1")
    c = float(c)
    if c == 0.0:
        m = identity_map()
        return Diffeomorphism(m.forward, m.inverse, m.jacobian, True,
                              {"kind": "radial-qc", "c": 0.0})

    def f(r):
        return r + c * r * (1.0 - r)

    def df(r):
        return 1.0 + c * (1.0 - 2.0 * r)

    def finv(s):
        q = (1.0 + c) ** 2 - 4.0 * c * s
        # root of c r^2 - (1+c) r + s = 0 continuous in c, written to avoid cancellation
        return 2.0 * s / ((1.0 + c) + np.sqrt(q))

    return radial_diffeomorphism(f, df, finv, True, {"kind": "radial-qc", "c": c})


def compose(g: Diffeomorphism, f: Diffeomorphism) -> Diffeomorphism:
    """``g o f``."""
    return Diffeomorphism(
        forward=lambda x: g.forward(f.forward(x)),
        inverse=lambda y: f.inverse(g.inverse(y)),
        jacobian=lambda x: g.jacobian(f.forward(np.reshape(x, (-1, 2)))) @ f.jacobian(x),
        boundary_identity=g.boundary_identity and f.boundary_identity,
        descriptor={"kind": "compose", "outer": g.descriptor, "inner": f.descriptor},
    )


def disc_samples(n_r: int = 40, n_theta: int = 64, r_max: float = 1.0) -> np.ndarray:
    """Polar sample grid covering the closed disc, including centre and boundary."""
    r = np.linspace(0.0, r_max, n_r + 1)[1:]
    t = 2 * np.pi * np.arange(n_theta) / n_theta
    pts = np.stack([np.outer(r, np.cos(t)).ravel(), np.outer(r, np.sin(t)).ravel()], axis=1)
    return np.concatenate([[[0.0, 0.0]], pts])


def quasiconformal_constant(F: Diffeomorphism, points=None) -> float:
    """Sampled ``sup ||DF||^2 / J_F``."""
    pts = disc_samples(80, 96) if points is None else np.asarray(points).reshape(-1, 2)
    D = F.jacobian(pts)
    J = np.linalg.det(D)
    if np.any(J <= 0):
        raise ConductivityError("Jacobian not positive on the sample grid")
    s = np.linalg.norm(D, ord=2, axis=(1, 2))
    return float(np.max(s * s / J))


def push_forward(sigma: ConductivityField, F: Diffeomorphism, points=None) -> ConductivityField:
    """``y -> J_F(x)^-1 DF(x) sigma(x) DF(x)^T`` at ``x = F^-1(y)``."""
    pts = disc_samples(80, 96) if points is None else points
    if np.any(np.linalg.det(F.jacobian(pts)) <= 0):
        raise ConductivityError("Jacobian singular or orientation-reversing at a sample point")
    KF = quasiconformal_constant(F, pts)

    def func(y):
        x = F.inverse(y)
        D = F.jacobian(x)
        J = np.linalg.det(D)
        return (D @ sigma.eval(x) @ np.swapaxes(D, 1, 2)) / J[:, None, None]

    md = {"sigma": field_to_config(sigma), "map": F.descriptor, "K_F": KF}
    inner = sigma.interfaces()
    if inner:
        md["interfaces"] = [float(np.hypot(*F.forward(np.array([r, 0.0])))) for r in inner]
    return ConductivityField(func, KF * KF * sigma.K, "pushforward", md)


# --- boundary-layer diagnostics ---------------------------------------------

def spectral_norm_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Largest absolute eigenvalue of ``a - b`` for stacks of symmetric 2x2."""
    d = a - b
    p = 0.5 * (d[..., 0, 0] + d[..., 1, 1])
    q = np.hypot(0.5 * (d[..., 0, 0] - d[..., 1, 1]), d[..., 0, 1])
    return np.abs(p) + q


def _layer_points(delta, extra_radii=()):
    radial = list(1.0 - delta * (np.arange(4) + 0.5) / 4.0)
    radial += [r for r in extra_radii if 1.0 - r < delta]
    n_theta = int(np.ceil(8 * np.pi / delta))
    t = 2 * np.pi * np.arange(n_theta) / n_theta
    radial = np.asarray(radial)
    return np.stack([np.outer(radial, np.cos(t)).ravel(),
                     np.outer(radial, np.sin(t)).ravel()], axis=1)


def _layer_midradii(fields):
    # midpoints of every annulus bounded by field interfaces, so thin rings are sampled
    out = []
    for f in fields:
        edges = sorted(set([0.0, *f.interfaces(), 1.0]))
        out.extend(0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:]))
    return out


def boundary_condition_scan(seq: ConductivitySequence, deltas, n_max=None, mesh=None):
    """Estimate ``delta^-1 * max_n ||sigma_n - sigma||_{L^inf(layer)}`` per delta.

    Returns a dict with ``rows`` (``delta``, ``sup``, ``scaled``), the
    per-index sup values, and the verdict ``plausible``: the scaled values are
    non-increasing along the (decreasing) delta grid and either vanish or end
    below where they started.  The sup is taken over a polar grid of spacing
    at most ``delta/4`` (plus layer midpoints and, if given, mesh centroids)
    and over the sequence indices ``<= n_max``.
    """
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ConductivityError("empty delta list")
    if any(not 0.0 < d < 1.0 for d in deltas):
        raise ConductivityError("deltas must lie in (0, 1)")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConductivityError("deltas must be strictly decreasing")
    members = seq.members(n_max)
    if not members:
        raise ConductivityError("no sequence members with n <= n_max")
    extra = _layer_midradii([f for _, f in members] + [seq.limit])
    cents = None
    if mesh is not None:
        cents = mesh.centroids()

    rows, per_index = [], []
    for d in deltas:
        pts = _layer_points(d, extra)
        if cents is not None:
            pts = np.concatenate([pts, cents[1.0 - np.linalg.norm(cents, axis=1) < d]])
        lim = seq.limit.eval(pts)
        sups = [float(spectral_norm_diff(f.eval(pts), lim).max()) for _, f in members]
        sup = max(sups)
        rows.append({"delta": d, "sup": sup, "scaled": sup / d})
        per_index.append(sups)
    scaled = [r["scaled"] for r in rows]
    mono = all(b <= a + 1e-12 for a, b in zip(scaled, scaled[1:]))
    plausible = mono and (scaled[-1] <= 1e-12 or scaled[-1] < scaled[0])
    return {
        "rows": rows,
        "indices": [n for n, _ in members],
        "per_index": per_index,
        "plausible": bool(plausible),
    }


# --- descriptors ------------------------------------------------------------

def field_to_config(f: ConductivityField) -> dict:
    md = f.metadata
    if f.kind == "constant":
        return {"kind": "constant", "value": md["value"]}
    if f.kind == "radial-layered":
        return {"kind": "radial-layered", "radii": md["radii"], "values": md["values"]}
    if f.kind == "laminate":
        return {"kind": "laminate", **{k: md[k] for k in
                                       ("a", "b", "n", "direction", "support_radius")}}
    if f.kind == "pushforward":
        return {"kind": "pushforward", "sigma": md["sigma"], "map": md["map"]}
    return {"kind": f.kind}


def map_from_config(d: dict) -> Diffeomorphism:
    kind = d.get("kind")
    if kind == "identity":
        return identity_map()
    if kind == "cloaking":
        return cloaking_map(float(d["rho"]))
    if kind == "radial-qc":
        return radial_qc_map(float(d["c"]))
    raise ConductivityError(f"unknown map kind {kind!r}")


def field_from_config(d: dict) -> ConductivityField:
    """Build a field from a descriptor such as ``{"kind": "radial-layered", ...}``."""
    kind = d.get("kind")
    if kind == "constant":
        return constant(d.get("value", 1.0))
    if kind == "radial-layered":
        return radial_layered(d["radii"], d["values"])
    if kind == "counterexample":
        return counterexample_sigma(float(d["alpha"]), float(d["R"]))
    if kind == "laminate":
        direction = d.get("direction", (1.0, 0.0))
        support = float(d.get("support_radius", 1.0))
        if d.get("n") is None:
            return homogenized_laminate(float(d["a"]), float(d["b"]), direction, support)
        return laminate(float(d["a"]), float(d["b"]), int(d["n"]), direction, support)
    if kind == "pushforward":
        sigma = d["sigma"]
        if isinstance(sigma, dict):
            sigma = field_from_config(sigma)
        F = d["map"]
        if isinstance(F, dict):
            F = map_from_config(F)
        return push_forward(sigma, F)
    raise ConductivityError(f"unknown conductivity kind {kind!r}")
