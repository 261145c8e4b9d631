"""Trace serialization: fixed-format CSV with a declared column set.

Columns are written with six decimal places, '.' decimal separator, LF
line endings, and no quoting, so identical runs produce byte-identical
files on every platform.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import UnknownColumnError

AVAILABLE_COLUMNS = (
    "time_s", "t_air_c", "t_out_c", "q_heat_w", "q_cool_w", "u_heat",
    "u_cool", "window_open", "gains_w", "sol_dir_s_wm2", "sol_dir_w_wm2",
    "sol_dir_n_wm2", "sol_dir_e_wm2", "sol_dir_roof_wm2", "sol_dif_wm2",
    "ach_effective",
)


def check_columns(columns) -> tuple:
    cols = tuple(columns)
    if not cols:
        raise UnknownColumnError("no output columns selected")
    for c in cols:
        if c not in AVAILABLE_COLUMNS:
            raise UnknownColumnError(
                f"unknown column {c}; available: "
                f"{', '.join(AVAILABLE_COLUMNS)}")
    return cols


def format_rows(trace: dict, columns) -> str:
    """Render the selected trace columns as CSV text."""
    cols = check_columns(columns)
    missing = [c for c in cols if c not in trace]
    if missing:
        raise UnknownColumnError(
            f"trace is missing column(s): {', '.join(missing)}")
    series = []
    n = None
    for c in cols:
        arr = np.asarray(trace[c])
        if n is None:
            n = arr.shape[0]
        elif arr.shape[0] != n:
            raise UnknownColumnError(
                f"column {c} has {arr.shape[0]} rows, expected {n}")
        series.append(arr)
    parts = [",".join(cols), "\n"]
    is_time = [c == "time_s" for c in cols]
    for i in range(n):
        row = ",".join(
            str(int(s[i])) if t else f"{s[i]:.6f}"
            for s, t in zip(series, is_time))
        parts.append(row)
        parts.append("\n")
    return "".join(parts)


def write_output_csv(path, trace: dict, columns) -> None:
    """Write trace columns to ``path`` atomically (temp file + rename)."""
    text = format_rows(trace, columns)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
