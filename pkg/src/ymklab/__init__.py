"""Spectral laboratory for higher-order Yang-Mills energies on flat tori.

Connections with values in a matrix Lie algebra (u(1), su(2), u(m)) live on a
periodic grid; derivatives are exact Fourier multipliers, products are dealiased,
and every functional of interest (the classical action, its higher-derivative
relatives, the biharmonic variant) comes with an exact discrete gradient so the
associated flows dissipate the discrete energy to round-off.
"""

from .grid import TorusGrid, ball_mask, integrate, spectral_partial
from .algebra import (
    FormField,
    StructureGroup,
    bracket,
    frobenius_sup,
    inner_product,
    l2_norm_sq,
    lp_norm,
    pound,
    pound_bracket,
    random_field,
)
from .calculus import (
    codifferential,
    covariant_derivative,
    curvature,
    exterior_derivative,
    hodge_laplacian,
    iterated_covariant_derivative,
    rough_laplacian,
)
from .energy import (
    bym_energy,
    grad_continuum,
    grad_discrete,
    ym_energy,
    ym_rho_k_energy,
    ymk_energy,
    ymk_energy_and_grad,
)
from .gauge import (
    GaugeField,
    act_on_connection,
    act_on_form,
    coulomb_residual,
    equivalence_gap,
    gauge_fixed_rhs,
    gauge_flow_step,
    random_gauge,
)
from .flow import (
    FlowConfig,
    FlowState,
    blowup_monitor,
    cfl_timestep,
    flow_step,
    normalized_zoom,
    rescale_snapshot,
    run_flow,
    smoothing_report,
)
from .snapshots import read_snapshot, write_snapshot
from .identities import (
    check_bochner,
    check_commutator,
    check_curvature_zoom,
    check_kato,
    check_scaling_derivative,
    check_scaling_lp,
    check_symbol,
    check_variation,
    critical_dimension,
    divisible_filter,
    interpolation_ratio_report,
    run_identity_suite,
)

__version__ = "0.1.0"

__all__ = [
    "TorusGrid", "ball_mask", "integrate", "spectral_partial",
    "FormField", "StructureGroup", "bracket", "frobenius_sup", "inner_product",
    "l2_norm_sq", "lp_norm", "pound", "pound_bracket", "random_field",
    "codifferential", "covariant_derivative", "curvature", "exterior_derivative",
    "hodge_laplacian", "iterated_covariant_derivative", "rough_laplacian",
    "bym_energy", "grad_continuum", "grad_discrete", "ym_energy",
    "ym_rho_k_energy", "ymk_energy", "ymk_energy_and_grad",
    "GaugeField", "act_on_connection", "act_on_form", "coulomb_residual",
    "equivalence_gap", "gauge_fixed_rhs", "gauge_flow_step", "random_gauge",
    "FlowConfig", "FlowState", "blowup_monitor", "cfl_timestep", "flow_step",
    "normalized_zoom", "rescale_snapshot", "run_flow", "smoothing_report",
    "read_snapshot", "write_snapshot",
    "check_bochner", "check_commutator", "check_curvature_zoom",
    "check_kato", "check_scaling_derivative", "check_scaling_lp",
    "check_symbol", "check_variation", "critical_dimension",
    "divisible_filter", "interpolation_ratio_report", "run_identity_suite",
]
