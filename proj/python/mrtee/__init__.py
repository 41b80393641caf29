"""Causal excursion effect estimators for micro-randomized trials."""

from mrtee._core import (
    CenteringModel,
    Dataset,
    FitResult,
    MrteeError,
    closed_form_gaps,
    embedded_configs,
    fit,
    fit_centering,
    replicate_table,
    run_monte_carlo,
    simulate_panel,
    table_names,
    truth,
    verify_orthogonality,
)

__all__ = [
    "CenteringModel",
    "Dataset",
    "FitResult",
    "MrteeError",
    "closed_form_gaps",
    "embedded_configs",
    "fit",
    "fit_centering",
    "replicate_table",
    "run_monte_carlo",
    "simulate_panel",
    "table_names",
    "truth",
    "verify_orthogonality",
]
