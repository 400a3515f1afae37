"""Data-driven SOS controller synthesis for polynomial systems."""

from ._ddsos import (
    ClosedLoopOptions,
    Controller,
    DataMatrices,
    DataRankError,
    DataRecord,
    DivergenceError,
    ExperimentConfig,
    FormatError,
    GridSpec,
    LyapunovCertificate,
    MarginalFeasibilityError,
    MonomialVector,
    PolySystem,
    Polynomial,
    SosInfeasibleError,
    SosOptions,
    build_data_matrices,
    check_scalar_sos,
    circle_points,
    export_sdpa,
    extract_controller,
    model_based_synthesize,
    numerical_rank,
    optimal_margin,
    plant_side_vdot,
    run_experiment,
    solve_sdpa,
    synthesize,
    verify_closed_loop,
)

__all__ = [name for name in dir() if not name.startswith("_")]
