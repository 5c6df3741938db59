"""Linear solves on an assembled nodal system.

DC and AC solutions go through sparse LU factorization; the transient path
integrates G*v + C*dv/dt = src(t) with the trapezoidal rule, refining the
first interval with geometrically growing sub-steps so the stiff boundary
layer introduced by the Norton source resistances is resolved instead of
excited (trapezoidal integration rings on under-resolved stiff modes).

`dense_oracle_solve` is a deliberately independent reference path: dense
Gaussian elimination with full pivoting, used by the test suite to check the
sparse solver differentially.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, NumericalFailureError
from .network import NodalSystem

__all__ = [
    "DcSolution",
    "AcSolution",
    "TransientResult",
    "solve_dc",
    "solve_ac",
    "solve_transient",
    "dense_oracle_solve",
    "time_constant_bounds",
]

RESIDUAL_RTOL = 1e-10
DENSE_ORACLE_MAX_NODES = 1024


@dataclass
class DcSolution:
    node_voltages: np.ndarray
    column_currents: np.ndarray


@dataclass
class AcSolution:
    frequency: float
    node_phasors: np.ndarray
    column_phasors: np.ndarray


@dataclass
class TransientResult:
    """Step response sampled on a fixed dt grid, preceded by the sub-stepped
    first interval (times is therefore non-uniform before t = dt)."""

    times: np.ndarray
    node_voltages: np.ndarray  # (n_samples, n_nodes)
    source_power: np.ndarray
    column_currents: np.ndarray  # (n_samples, n_cols)


def _factorize(matrix):
    try:
        return spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        pivot = None
        found = re.search(r"\d+", str(exc))
        if found:
            pivot = int(found.group())
        raise NumericalFailureError(f"sparse factorization failed: {exc}", pivot=pivot) from exc


def _check_residual(matrix, v, rhs):
    if not np.all(np.isfinite(v)):
        raise NumericalFailureError("solution contains non-finite entries; system is singular or ill-conditioned")
    residual = np.linalg.norm(matrix @ v - rhs)
    # Backward-error scale: evaluating G@v already costs ~n*eps*|||G||v|||,
    # so a bound relative to ||rhs|| alone is unattainable when ||G||*||v||
    # dwarfs the source norm (current-mode drives through stiff wires).
    scale = np.linalg.norm(rhs) + np.linalg.norm(abs(matrix) @ np.abs(v))
    if residual > RESIDUAL_RTOL * scale and scale > 0.0:
        raise NumericalFailureError(
            f"solve residual {residual:.3e} exceeds {RESIDUAL_RTOL * scale:.3e}; "
            "system is ill-conditioned"
        )


def _column_currents(sys: NodalSystem, v):
    return v[..., sys.output_nodes] * sys.terminal_conductance


def solve_dc(sys: NodalSystem) -> DcSolution:
    """Operating point of G*v = src; column currents taken through each
    terminal resistance."""
    lu = _factorize(sys.G)
    v = lu.solve(sys.src)
    _check_residual(sys.G, v, sys.src)
    return DcSolution(node_voltages=v, column_currents=_column_currents(sys, v))


def solve_ac(sys: NodalSystem, frequency: float) -> AcSolution:
    """Phasor solution of (G + j*2*pi*f*C) v = src at one frequency."""
    if not frequency >= 0.0:
        raise InvalidInputError(f"frequency must be >= 0, got {frequency!r}")
    matrix = (sys.G + 2j * np.pi * frequency * sys.C).tocsc()
    lu = _factorize(matrix)
    v = lu.solve(sys.src.astype(complex))
    _check_residual(matrix, v, sys.src)
    return AcSolution(
        frequency=frequency,
        node_phasors=v,
        column_phasors=_column_currents(sys, v),
    )


def _source_power(sys: NodalSystem, v_samples):
    """Instantaneous total power delivered by all sources, per sample row."""
    p = np.zeros(v_samples.shape[0])
    for s in sys.sources:
        if s.r_source is not None:
            p += s.value * (s.value - v_samples[:, s.node]) / s.r_source
        else:
            p += v_samples[:, s.node] * s.value
    return p


def _startup_substeps(sys: NodalSystem, dt: float):
    """Geometric sub-step sizes covering (0, dt], starting near the fastest
    node time constant so stiff start-up transients are resolved."""
    with np.errstate(divide="ignore", invalid="ignore"):
        full_diag = np.asarray(sys.G.diagonal())
        taus = np.where(sys.cap_diag > 0.0, sys.cap_diag / full_diag, np.inf)
    tau_fast = float(np.min(taus))
    h = min(tau_fast / 4.0, dt / 8.0)
    steps = []
    total = 0.0
    while total + h < dt * (1.0 - 1e-12):
        steps.append(h)
        total += h
        h = min(h * 2.0, dt - total)
    steps.append(dt - total)
    return steps


def solve_transient(sys: NodalSystem, t_end: float, dt: float) -> TransientResult:
    """Trapezoidal step response from v(0) = 0; the system's sources switch
    on as a step at t = 0 and stay constant."""
    if not (np.isfinite(dt) and dt > 0.0):
        raise InvalidInputError(f"dt must be positive, got {dt!r}")
    if not (np.isfinite(t_end) and t_end >= dt):
        raise InvalidInputError(f"t_end must be at least dt, got t_end={t_end!r}, dt={dt!r}")

    n_steps = int(np.floor(t_end / dt * (1.0 + 1e-12)))

    if sys.cap_diag is None or not np.any(sys.cap_diag > 0.0):
        # No dynamics: the network settles within one instant.
        lu = _factorize(sys.G)
        v = lu.solve(sys.src)
        _check_residual(sys.G, v, sys.src)
        times = np.arange(n_steps + 1) * dt
        voltages = np.tile(v, (n_steps + 1, 1))
        return TransientResult(
            times=times,
            node_voltages=voltages,
            source_power=_source_power(sys, voltages),
            column_currents=_column_currents(sys, voltages),
        )

    def step_of(h):
        lhs = (sys.C * (2.0 / h) + sys.G).tocsc()
        rhs_matrix = (sys.C * (2.0 / h) - sys.G).tocsc()
        lu = _factorize(lhs)
        return lu, rhs_matrix

    times = [0.0]
    samples = [np.zeros(sys.node_count)]
    v = samples[0]
    t = 0.0
    plans = {}
    schedule = _startup_substeps(sys, dt) + [dt] * (n_steps - 1)
    vmax_guard = 1e12 * (1.0 + np.max(np.abs(sys.src)))
    for h in schedule:
        key = round(np.log2(h) * 1e6)  # cache factorizations per step size
        if key not in plans:
            plans[key] = step_of(h)
        lu, rhs_matrix = plans[key]
        v = lu.solve(rhs_matrix @ v + 2.0 * sys.src)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > vmax_guard:
            raise NumericalFailureError(
                f"trapezoidal step of size {h:.3e} s rejected: iteration diverged"
            )
        t += h
        times.append(t)
        samples.append(v)

    times = np.asarray(times)
    voltages = np.vstack(samples)
    return TransientResult(
        times=times,
        node_voltages=voltages,
        source_power=_source_power(sys, voltages),
        column_currents=_column_currents(sys, voltages),
    )


def dense_oracle_solve(sys: NodalSystem) -> DcSolution:
    """Reference DC solve: dense Gaussian elimination with full pivoting.

    Independent of the sparse path on purpose; guarded to small systems."""
    if sys.node_count > DENSE_ORACLE_MAX_NODES:
        raise InvalidInputError(
            f"dense oracle limited to {DENSE_ORACLE_MAX_NODES} nodes, got {sys.node_count}"
        )
    a = sys.G.toarray().astype(float)
    b = sys.src.astype(float).copy()
    n = a.shape[0]
    row_perm = np.arange(n)
    col_perm = np.arange(n)
    tol = n * np.finfo(float).eps * np.max(np.abs(a)) if a.size else 0.0

    for k in range(n):
        sub = np.abs(a[k:, k:])
        pi, pj = np.unravel_index(np.argmax(sub), sub.shape)
        pi, pj = pi + k, pj + k
        if abs(a[pi, pj]) <= tol:
            raise NumericalFailureError(
                "matrix is singular to working precision at pivot "
                f"(row {row_perm[pi]}, col {col_perm[pj]})",
                pivot=(int(row_perm[pi]), int(col_perm[pj])),
            )
        if pi != k:
            a[[k, pi]] = a[[pi, k]]
            b[[k, pi]] = b[[pi, k]]
            row_perm[[k, pi]] = row_perm[[pi, k]]
        if pj != k:
            a[:, [k, pj]] = a[:, [pj, k]]
            col_perm[[k, pj]] = col_perm[[pj, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        b[k + 1:] -= factors * b[k]

    y = np.zeros(n)
    for k in range(n - 1, -1, -1):
        y[k] = (b[k] - a[k, k + 1:] @ y[k + 1:]) / a[k, k]
    v = np.zeros(n)
    v[col_perm] = y

    _check_residual(sys.G, v, sys.src)
    return DcSolution(node_voltages=v, column_currents=_column_currents(sys, v))


def time_constant_bounds(sys: NodalSystem):
    """(fastest, slowest) per-node RC estimates from physical conductances
    only; penalty stamps (Norton sources, sense shorts) are excluded."""
    mask = (sys.cap_diag > 0.0) & (sys.physical_diag > 0.0)
    if not np.any(mask):
        return 0.0, 0.0
    taus = sys.cap_diag[mask] / sys.physical_diag[mask]
    return float(taus.min()), float(taus.max())
