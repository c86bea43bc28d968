"""Functional global sensitivity analysis with GP error quantification."""

from ._core import (
    Basis,
    Error,
    InvalidArgument,
    NumericalError,
    VectorGp,
    __version__,
    additive_sine,
    angle_grid,
    fit_pca,
    fit_vector_gp,
    gsi,
    lhs_sample,
    mc_sample,
    predicted_costs,
    q2,
    run_basis_derived,
    run_config,
    sample_trajectories,
    sensitivity_map,
    vector_closed_pf,
    vector_total_jansen,
)
