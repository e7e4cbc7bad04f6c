import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from dnlab.conductivity import (
    ConductivityError,
    ConductivitySequence,
    boundary_condition_scan,
    cloaking_map,
    compose,
    constant,
    counterexample_sigma,
    disc_samples,
    field_from_config,
    field_to_config,
    homogenized_laminate,
    identity_map,
    laminate,
    push_forward,
    quasiconformal_constant,
    radial_diffeomorphism,
    radial_layered,
    radial_qc_map,
)
from dnlab.conductivity import _stripe_fraction
from dnlab.oracles import laminate_g_limit

PTS = disc_samples(20, 36)


def test_counterexample_values():
    s = counterexample_sigma(1.0, 0.9)
    assert np.array_equal(s((0.85, 0.0)), 2 * np.eye(2))
    assert np.array_equal(s((0.95, 0.0)), np.eye(2))
    assert s.K == 2.0
    assert s.interfaces() == (0.81, 0.9)


def test_counterexample_alpha_zero_is_identity():
    s = counterexample_sigma(0.0, 0.7)
    assert np.array_equal(s.eval(PTS), np.broadcast_to(np.eye(2), (len(PTS), 2, 2)))


@pytest.mark.parametrize("alpha, R", [(-0.5, 0.9), (1.0, 0.0), (1.0, 1.0), (1.0, 1.3)])
def test_counterexample_range(alpha, R):
    with pytest.raises(ConductivityError):
        counterexample_sigma(alpha, R)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.01, 10), R=st.floats(0.05, 0.99))
def test_counterexample_takes_two_values(alpha, R):
    v = counterexample_sigma(alpha, R).eval(PTS)
    scal = v[:, 0, 0]
    assert np.all(v[:, 0, 1] == 0) and np.array_equal(v[:, 0, 0], v[:, 1, 1])
    assert set(np.unique(scal)) <= {1.0, 1.0 + alpha}


def test_fields_pass_sampled_invariants():
    fields = [constant(1.0), constant([[2.0, 0.5], [0.5, 1.0]]),
              radial_layered([0.3, 0.6], [3.0, 0.5, 1.0]), counterexample_sigma(2.0, 0.9),
              laminate(1, 2, 8, (1, 1), 0.7), homogenized_laminate(1, 2),
              push_forward(counterexample_sigma(1.0, 0.9), radial_qc_map(0.4)),
              push_forward(constant(1.0), cloaking_map(0.3))]
    for f in fields:
        assert f.K >= 1
        assert f.check(PTS), f.kind


def test_check_detects_too_small_K():
    f = radial_layered([0.5], [5.0, 1.0])
    bad = type(f)(f.func, 2.0, f.kind, f.metadata)
    assert not bad.check(PTS)


def test_constant_rejects_indefinite():
    with pytest.raises(ConductivityError):
        constant([[1.0, 2.0], [2.0, 1.0]])


def test_push_forward_identity_map():
    s = radial_layered([0.4], [3.0, 1.0])
    p = push_forward(s, identity_map())
    assert np.allclose(p.eval(PTS), s.eval(PTS), rtol=0, atol=1e-15)


def test_push_forward_radial_profile_eigenvalues():
    # f(r) = (1 + r)/2, so |y| = 0.75 comes from r = 0.5
    F = cloaking_map(0.2)
    p = push_forward(constant(1.0), F)
    for ang in np.linspace(0, 2 * np.pi, 7):
        u = np.array([np.cos(ang), np.sin(ang)])
        m = p(0.75 * u)
        v = np.array([-u[1], u[0]])
        assert u @ m @ u == pytest.approx(1 / 3, abs=1e-13)
        assert v @ m @ v == pytest.approx(3.0, abs=1e-13)
        assert u @ m @ v == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("s", [0.62, 0.75, 0.9, 0.99])
def test_cloaked_radial_eigenvalue(s):
    p = push_forward(constant(1.0), cloaking_map(0.2))
    m = p((s, 0.0))
    assert m[0, 0] == pytest.approx((2 * s - 1) / (2 * s), rel=1e-12)


@pytest.mark.parametrize("F", [cloaking_map(0.3), radial_qc_map(0.5), radial_qc_map(-0.7),
                               compose(radial_qc_map(0.3), cloaking_map(0.4))],
                         ids=["cloak", "qc", "qc-neg", "composed"])
def test_det_push_forward_identity_is_one(F):
    p = push_forward(constant(1.0), F)
    det = np.linalg.det(p.eval(PTS))
    assert np.abs(det - 1).max() <= 1e-10


def test_push_forward_composition():
    s = radial_layered([0.4], [3.0, 1.0])
    F, G = radial_qc_map(0.5), radial_qc_map(-0.3)
    lhs = push_forward(s, compose(G, F)).eval(PTS)
    rhs = push_forward(push_forward(s, F), G).eval(PTS)
    assert np.abs(lhs - rhs).max() <= 1e-8


def test_push_forward_preserves_trace_when_DF_is_identity():
    # f(r) = r + c r (1 - r)^2 has f(1) = 1 and f'(1) = 1
    c = 0.4

    def finv(s):
        s = np.atleast_1d(s)
        return np.array([brentq(lambda r: r + c * r * (1 - r) ** 2 - v, 0, 1) if v < 1 else 1.0
                         for v in s])

    F = radial_diffeomorphism(lambda r: r + c * r * (1 - r) ** 2,
                              lambda r: 1 + c * (1 - r) * (1 - 3 * r), finv)
    assert F.check(disc_samples(10, 16))
    s = constant([[2.0, 0.3], [0.3, 1.0]])
    t = np.linspace(0, 2 * np.pi, 17)
    b = np.stack([np.cos(t), np.sin(t)], axis=1)
    assert np.abs(push_forward(s, F).eval(b) - s.eval(b)).max() <= 1e-10


def test_push_forward_ellipticity_constant():
    F = radial_qc_map(0.5)
    s = counterexample_sigma(1.0, 0.9)
    KF = quasiconformal_constant(F)
    p = push_forward(s, F)
    assert p.K == pytest.approx(KF ** 2 * s.K)
    assert p.check(PTS)


def test_push_forward_rejects_folding_map():
    bad_df = lambda r: np.full_like(r, -1.0)
    F = radial_diffeomorphism(lambda r: r, bad_df, lambda s: s, slope0=1.0)
    with pytest.raises(ConductivityError):
        push_forward(constant(1.0), F)


def test_cloaking_map_examples():
    F = cloaking_map(0.2)
    assert np.hypot(*F.forward(np.array([0.2, 0.0]))) == pytest.approx(0.6)
    t = np.linspace(0, 2 * np.pi, 9)
    b = np.stack([np.cos(t), np.sin(t)], axis=1)
    assert np.abs(F.forward(b) - b).max() <= 1e-12
    assert F.check(disc_samples(30, 40))


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.2])
def test_cloaking_map_range(rho):
    with pytest.raises(ConductivityError):
        cloaking_map(rho)


def test_qc_map_checks():
    for c in (-0.9, -0.5, 0.0, 0.5, 0.9):
        assert radial_qc_map(c).check(disc_samples(30, 40))
    with pytest.raises(ConductivityError):
        radial_qc_map(1.0)


def test_laminate_degenerate_and_lookup():
    f = laminate(3.0, 3.0, 7, (1, 0), 0.6)
    inside = PTS[np.linalg.norm(PTS, axis=1) < 0.6]
    assert np.allclose(f.eval(inside), 3 * np.eye(2))
    g = laminate(1.0, 2.0, 4, (1, 0), 0.5)
    assert np.array_equal(g((0.0, 0.0)), np.eye(2))  # frac(0) < 1/2: phase a = 1
    assert np.array_equal(g((0.2, 0.0)), 2 * np.eye(2))
    assert np.array_equal(g((0.7, 0.0)), np.eye(2))  # outside the support
    assert g.K == 2.0
    assert g.interfaces() == (0.5,)


def test_laminate_g_limit_values():
    G = homogenized_laminate(1.0, 2.0)((0.3, 0.2))
    assert np.array_equal(G, np.diag([4 / 3, 1.5]))
    assert np.array_equal(G, laminate_g_limit(1.0, 2.0))


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=3, max_size=3),
       shift=st.floats(-3, 3))
def test_stripe_fraction_matches_sampling(pts, shift):
    tri = np.array(pts)
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    if area < 1e-3:
        return
    s = tri[:, 0] + shift
    frac = _stripe_fraction(s[None, :])[0]
    # barycentric sampling of the exact linear coordinate
    g = np.linspace(0, 1, 401)
    u, v = np.meshgrid(g, g)
    keep = u + v <= 1
    lam = np.stack([1 - u[keep] - v[keep], u[keep], v[keep]], axis=1)
    x = lam @ s
    est = np.mean(np.mod(x, 1.0) < 0.5)
    assert frac == pytest.approx(est, abs=0.02)


def test_cell_average_pure_phase_elements():
    f = laminate(1.0, 2.0, 2, (1, 0), 1.0)
    tri = np.array([[[0.05, 0.0], [0.2, 0.0], [0.1, 0.1]],      # inside phase a
                    [[0.3, 0.0], [0.45, 0.0], [0.35, 0.1]]])    # inside phase b
    out = f.cell_average(tri)
    assert np.allclose(out[0], np.eye(2)) and np.allclose(out[1], 2 * np.eye(2))


def test_scan_identical_sequence():
    s = counterexample_sigma(1.0, 0.9)
    seq = ConductivitySequence(lambda n: s, s, (1, 2, 3))
    res = boundary_condition_scan(seq, [0.5, 0.2, 0.1])
    assert all(r["sup"] == 0 and r["scaled"] == 0 for r in res["rows"])
    assert res["plausible"]


def test_scan_interior_support():
    seq = ConductivitySequence(lambda n: laminate(1, 2, n, (1, 0), 0.5),
                               homogenized_laminate(1, 2, (1, 0), 0.5), (2, 4, 8))
    res = boundary_condition_scan(seq, [0.45, 0.3, 0.1])
    assert all(r["sup"] == 0 for r in res["rows"])
    assert res["plausible"]


def test_scan_counterexample_not_plausible():
    alpha = 1.0
    seq = ConductivitySequence(lambda n: counterexample_sigma(alpha, 1 - 0.1 / n), constant(1.0),
                               (1, 2, 4, 8, 16))
    deltas = [0.2, 0.1, 0.05, 0.02]
    res = boundary_condition_scan(seq, deltas)
    for d, r in zip(deltas, res["rows"]):
        assert r["scaled"] >= alpha / d
    assert not res["plausible"]


@pytest.mark.parametrize("deltas", [[], [0.1, 0.2], [0.0], [1.0]])
def test_scan_rejects_bad_deltas(deltas):
    seq = ConductivitySequence(lambda n: constant(1.0), constant(1.0), (1,))
    with pytest.raises(ConductivityError):
        boundary_condition_scan(seq, deltas)


def test_config_round_trip():
    for f in [constant(2.0), radial_layered([0.81, 0.9], [1.0, 2.0, 1.0]),
              laminate(1, 2, 4, (1, 0), 0.5), homogenized_laminate(1, 2, (0, 1), 0.5),
              push_forward(radial_layered([0.3], [100.0, 1.0]), cloaking_map(0.3))]:
        g = field_from_config(field_to_config(f))
        assert g.kind == f.kind
        assert np.array_equal(g.eval(PTS), f.eval(PTS))
    with pytest.raises(ConductivityError):
        field_from_config({"kind": "nonsense"})
