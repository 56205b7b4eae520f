"""Functional risk curves from Gaussian-process metamodels.

Thin Python layer over the C++ core: input models, KL-tilted perturbations,
kriging, risk-curve estimation with double Monte-Carlo bands, and the Sobol'
and PLI sensitivity measures.
"""

from ._core import (  # noqa: F401
    AnalyticModel,
    BerensFit,
    DesignMatrix,
    FittedGp,
    FrcCurve,
    InputModel,
    PliOptions,
    PliResult,
    ScalarDistribution,
    SobolOptions,
    SobolResult,
    TiltedDistribution,
    __version__,
    evaluate_design,
    fit_berens,
    fit_gp,
    frc_double_mc,
    frc_inverse,
    frc_mean_gp,
    generate_design,
    gp_log_likelihood,
    kl_divergence,
    kl_tilt,
    load_design_csv,
    oracle_frc,
    oracle_frc_mc,
    pli_grid,
    pli_point,
    sample,
    save_design_csv,
    sobol_aggregated,
    sobol_inverse,
    sobol_pointwise,
)
