"""Finite-element Dirichlet-to-Neumann maps of planar conductivities."""

__version__ = "0.1.0"

from .conductivity import (
    ConductivityField,
    ConductivitySequence,
    Diffeomorphism,
    boundary_condition_scan,
    cloaking_map,
    compose,
    constant,
    counterexample_sigma,
    homogenized_laminate,
    laminate,
    push_forward,
    radial_layered,
    radial_qc_map,
)
from .dnmap import DnMatrix, dn_matrix, op_norm, schur_dn, to_fourier, weak_pairing
from .experiments import ExperimentConfig, ExperimentReport, run_experiment
from .fem import assemble, caccioppoli_ratio, solve_dirichlet
from .mesh import TriangleMesh, boundary_layer, build_polar_mesh, refine
from .oracles import (
    RadialLayers,
    critical_mode,
    laminate_g_limit,
    layered_defect,
    layered_dn,
    m_k,
)

