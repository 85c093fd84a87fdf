"""Least-squares drift estimation for SDEs driven by small Levy noise."""

from ._core import (
    IoError,
    LevySpec,
    NumericalError,
    ValidationError,
    contrast,
    estimate,
    information_matrix,
    ks_critical_value_1pct,
    ks_two_sample,
    model_ids,
    run_cli,
    sample_limit,
    sample_limit_closed_form_sqrt_shift,
    score,
    simulate,
)

__all__ = [
    "IoError",
    "LevySpec",
    "NumericalError",
    "ValidationError",
    "contrast",
    "estimate",
    "information_matrix",
    "ks_critical_value_1pct",
    "ks_two_sample",
    "model_ids",
    "run_cli",
    "sample_limit",
    "sample_limit_closed_form_sqrt_shift",
    "score",
    "simulate",
]
