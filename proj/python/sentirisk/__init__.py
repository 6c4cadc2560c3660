# SPDX-License-Identifier: Apache-2.0
"""Text and market sentiment forecasting with risk alerts."""

from ._core import (
    CheckpointError,
    DataError,
    Model,
    NumericError,
    clean_text,
    detect_alerts,
    label_sentiment,
    metrics,
    prepare,
    render_table,
    risk_score,
    run_cli,
    train,
)

__all__ = [
    "CheckpointError",
    "DataError",
    "Model",
    "NumericError",
    "clean_text",
    "detect_alerts",
    "label_sentiment",
    "metrics",
    "prepare",
    "render_table",
    "risk_score",
    "run_cli",
    "train",
]
