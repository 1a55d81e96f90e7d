"""Utility modules."""

from .artifacts import (
    create_run_folder,
    trace_columns,
    trace_frame,
    write_detection_csv,
    write_key_values,
    write_residual_files,
    write_trace_csv,
)
from .expressions import SignalExpression, VectorExpression

__all__ = [
    "SignalExpression",
    "VectorExpression",
    "create_run_folder",
    "trace_columns",
    "trace_frame",
    "write_detection_csv",
    "write_key_values",
    "write_residual_files",
    "write_trace_csv",
]
