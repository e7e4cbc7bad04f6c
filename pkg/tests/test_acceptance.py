"""One test per acceptance criterion, each at its stated tolerance and time budget."""

import time

import numpy as np
import pytest

from dnlab.conductivity import constant, counterexample_sigma, laminate, push_forward, radial_qc_map
from dnlab.dnmap import dn_matrix
from dnlab.experiments import (
    clear_cache,
    run_calibration,
    run_cloaking,
    run_counterexample,
    run_laminate,
    run_qc_invariance,
)
from dnlab.fem import assemble, caccioppoli_ratio, solve_dirichlet
from dnlab.mesh import build_polar_mesh, refine
from dnlab.oracles import (
    CRITICAL_R,
    RadialLayers,
    counterexample_bound,
    critical_mode,
    laminate_g_limit,
    layered_defect,
    layered_dn,
    m_k,
    sup_m_k,
)


@pytest.fixture(autouse=True)
def cold_cache():
    clear_cache()
    yield
    clear_cache()


def _report(log, name, report, budget, elapsed):
    ok = report.passed and elapsed < budget
    failed = [f"{v.clause}: {v.detail}" for v in report.verdicts if not v.passed]
    detail = "; ".join(f"{v.clause} ok" for v in report.verdicts) if not failed else "; ".join(failed)
    log(name, ok, f"{detail} ({elapsed:.1f} s, budget {budget} s)")
    return ok


def test_c1_oracle_equivalence(acceptance_log):
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        for R in (0.8, 0.9, 0.95):
            L = RadialLayers((R * R, R), (1.0, 1.0 + alpha, 1.0))
            for k in range(1, 33):
                m = m_k(alpha, R, k)
                worst = max(worst, abs(layered_defect(L, k) / k - m) / m,
                            abs(layered_dn(L, k) - k * (1 + m)) / (k * (1 + m)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    acceptance_log("criterion 1 oracle equivalence", ok,
                   f"max relative deviation {worst:.2e} (tol 1e-10), {dt * 1e3:.1f} ms")
    assert ok


def test_c2_counterexample_bound(acceptance_log):
    t0 = time.perf_counter()
    alpha = 1.0
    bound = counterexample_bound(alpha)
    grid = [CRITICAL_R + (0.999 - CRITICAL_R) * i / 20 for i in range(1, 21)]
    sups = [sup_m_k(alpha, R)[0] for R in grid]
    wit = [m_k(alpha, R, critical_mode(R)) for R in grid]
    dt = time.perf_counter() - t0
    ok = bound == 1 / 48 and min(sups) > bound and min(wit) > bound and dt < 1.0
    acceptance_log("criterion 2 counterexample bound", ok,
                   f"min sup_k m_k {min(sups):.6f}, min m_k* {min(wit):.6f} > 1/48 over "
                   f"{len(grid)} radii in ({CRITICAL_R:.6f}, 0.999], {dt * 1e3:.1f} ms")
    assert ok


@pytest.mark.slow
def test_c3_fem_calibration(acceptance_log):
    t0 = time.perf_counter()
    r = run_calibration({"n_rings": 36, "n_sectors": 224, "levels": 3, "k_max": 16})
    dt = time.perf_counter() - t0
    clauses = {v.clause for v in r.verdicts}
    assert {"diagonal", "off-diagonal", "refinement"} <= clauses
    assert _report(acceptance_log, "criterion 3 FEM calibration", r, 120, dt)


@pytest.mark.slow
def test_c4_fem_counterexample(acceptance_log):
    t0 = time.perf_counter()
    r = run_counterexample({"alpha": 1.0, "fem_R": [0.9], "k_max": 16})
    dt = time.perf_counter() - t0
    assert _report(acceptance_log, "criterion 4 FEM counterexample", r, 180, dt)


@pytest.mark.slow
def test_c5_diffeomorphism_invariance(acceptance_log):
    t0 = time.perf_counter()
    r = run_qc_invariance({"c": 0.5, "levels": 3})
    dt = time.perf_counter() - t0
    assert _report(acceptance_log, "criterion 5 diffeomorphism invariance", r, 600, dt)


@pytest.mark.slow
def test_c6_cloaking(acceptance_log):
    t0 = time.perf_counter()
    r = run_cloaking({"beta": 100.0, "rho_grid": [0.4, 0.2, 0.1], "match_rho": 0.3,
                      "match_kmax": 6})
    dt = time.perf_counter() - t0
    assert _report(acceptance_log, "criterion 6 cloaking", r, 300, dt)


@pytest.mark.slow
def test_c7_laminates(acceptance_log):
    t0 = time.perf_counter()
    inner = run_laminate({"a": 1.0, "b": 2.0, "n_grid": [4, 8, 16]}, "interior")
    outer = run_laminate({"a": 1.0, "b": 2.0, "n_grid": [4, 8, 16]}, "boundary")
    dt = time.perf_counter() - t0
    ok_in = inner.passed
    ok_out = outer.passed
    rows = inner.tables["norms"] + outer.tables["norms"]
    detail = "; ".join(f"{v.clause}: {v.detail}" for v in inner.verdicts + outer.verdicts)
    raw = ", ".join(f"n={r['n']} fine {r['op_norm_fine']:.4g}/{r['pairing_fine']:.4g}"
                    for r in rows)
    ok = ok_in and ok_out and dt < 600
    acceptance_log("criterion 7 laminates", ok,
                   f"{detail}; single-mesh values (norm/pairing) {raw} ({dt:.1f} s, budget 600 s)")
    assert ok


@pytest.mark.slow
def test_c8_structural_invariants(acceptance_log):
    t0 = time.perf_counter()
    notes = []
    ok = True

    mesh = build_polar_mesh(36, 224, [0.81, 0.9])
    fields = [constant(1.0), counterexample_sigma(1.0, 0.9), laminate(1, 2, 4, (1, 0), 0.5),
              push_forward(counterexample_sigma(1.0, 0.9), radial_qc_map(0.5))]
    worst = {"asymmetry": 0.0, "constant_column": 0.0, "min_eigenvalue": np.inf}
    for f in fields:
        m = mesh if f.kind != "pushforward" else build_polar_mesh(36, 224, f.interfaces())
        rep = dn_matrix(assemble(m, f), 16).invariant_report()
        worst["asymmetry"] = max(worst["asymmetry"], rep["asymmetry"])
        worst["constant_column"] = max(worst["constant_column"], rep["constant_column"])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], rep["min_eigenvalue"])
    ok &= worst["asymmetry"] <= 1e-9 and worst["constant_column"] <= 1e-8
    ok &= worst["min_eigenvalue"] >= -1e-8
    notes.append(f"asymmetry {worst['asymmetry']:.1e}, constant column "
                 f"{worst['constant_column']:.1e}, eigen floor {worst['min_eigenvalue']:.1e}")

    ratios = []
    for nr, ns in [(36, 128), (72, 256), (144, 512)]:
        m = build_polar_mesh(nr, ns, [0.81, 0.9])
        th = m.boundary_angles()
        g = np.cos(th) + 0.3 * np.sin(3 * th)
        w = (solve_dirichlet(assemble(m, counterexample_sigma(1.0, 0.9)), g)
             - solve_dirichlet(assemble(m, constant(1.0)), g))
        ratios.append(caccioppoli_ratio(w, 0.02))
    ok &= all(b <= 1.5 * a for a, b in zip(ratios, ratios[1:]))
    notes.append("Caccioppoli ratios " + ", ".join(f"{r:.3f}" for r in ratios))

    m = build_polar_mesh(2, 8)
    chis = []
    for _ in range(4):
        chis.append(m.euler_characteristic())
        m = refine(m)
    ok &= chis == [1, 1, 1, 1]
    notes.append(f"Euler characteristics {chis}")

    ev = sorted(np.linalg.eigvalsh(laminate_g_limit(1.0, 2.0)).tolist())
    diag = np.diag(laminate_g_limit(1.0, 2.0)).tolist()
    ok &= diag == [4 / 3, 3 / 2] and ev == [4 / 3, 3 / 2]
    notes.append(f"G-limit eigenvalues {ev}")

    dt = time.perf_counter() - t0
    ok &= dt < 120
    acceptance_log("criterion 8 structural invariants", bool(ok),
                   "; ".join(notes) + f" ({dt:.1f} s, budget 120 s)")
    assert ok
