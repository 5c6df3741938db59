"""Closed-form dot-product references and the accuracy metric.

Voltage mode: driving the rows with voltages v produces column currents
I_j = sum_i g[i, j] * v[i].  Current mode: each injected row current divides
among the columns in proportion to conductance,
I_j = sum_i i[i] * g[i, j] / sum_k g[i, k].  Equalizing the row conductance
sums (one designated free cell per row) turns the current-mode divider into
a true weighted dot product.

These formulas assume zero wire resistance and zero terminal resistance;
the network/solver modules quantify how far a physical array strays from
them.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ideal_voltage_mode",
    "ideal_current_mode",
    "normalize_row_conductances",
    "dot_product_error",
]


def _as_matrix(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.size == 0:
        raise InvalidInputError(f"conductance matrix must be 2-D and non-empty, got shape {g.shape}")
    return g


def ideal_voltage_mode(g, v_in) -> np.ndarray:
    """Column currents for row drive voltages: I_j = sum_i g[i, j] * v[i]."""
    g = _as_matrix(g)
    v_in = np.asarray(v_in, dtype=float)
    if v_in.shape != (g.shape[0],):
        raise InvalidInputError(
            f"drive length {v_in.shape} does not match {g.shape[0]} rows"
        )
    return g.T @ v_in


def ideal_current_mode(g, i_in) -> np.ndarray:
    """Column currents for injected row currents (per-row current divider)."""
    g = _as_matrix(g)
    i_in = np.asarray(i_in, dtype=float)
    if i_in.shape != (g.shape[0],):
        raise InvalidInputError(
            f"drive length {i_in.shape} does not match {g.shape[0]} rows"
        )
    row_sums = g.sum(axis=1)
    if np.any(row_sums <= 0.0):
        bad = int(np.flatnonzero(row_sums <= 0.0)[0])
        raise InvalidInputError(f"row {bad} has non-positive conductance sum")
    return (g / row_sums[:, None]).T @ i_in


def normalize_row_conductances(
    g, g_row_target: float, free_column: int = -1, bounds=None
) -> np.ndarray:
    """Set one free cell per row so every row sums to g_row_target.

    All cells outside `free_column` are left untouched.  `bounds` is an
    optional (g_off, g_on) feasibility interval for the free cell; without
    it the free cell must merely be a positive conductance.  Returns a new
    matrix.
    """
    g = _as_matrix(g).copy()
    n_cols = g.shape[1]
    if not -n_cols <= free_column < n_cols:
        raise InvalidInputError(f"free_column {free_column} out of range for {n_cols} columns")
    free_column = free_column % n_cols
    lo, hi = bounds if bounds is not None else (0.0, np.inf)

    fixed = g.sum(axis=1) - g[:, free_column]
    free = g_row_target - fixed
    feasible = (free >= lo) & (free <= hi) if bounds is not None else (free > 0.0)
    if not np.all(feasible):
        bad = int(np.flatnonzero(~feasible)[0])
        raise InvalidInputError(
            f"row {bad} cannot be normalized to {g_row_target!r} S: required free-cell "
            f"value {free[bad]!r} S lies outside [{lo!r}, {hi!r}] S"
        )
    g[:, free_column] = free
    return g


def dot_product_error(actual, ideal) -> float:
    """Mean absolute column error normalized by the mean ideal magnitude."""
    actual = np.asarray(actual, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    if actual.shape != ideal.shape or actual.ndim != 1:
        raise InvalidInputError(
            f"outputs must be equal-length vectors, got {actual.shape} and {ideal.shape}"
        )
    denom = np.mean(np.abs(ideal))
    if denom == 0.0:
        raise InvalidInputError("ideal output is identically zero; error undefined")
    return float(np.mean(np.abs(actual - ideal)) / denom)
