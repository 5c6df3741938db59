"""Crossbar circuit graph and sparse nodal-system assembly.

Each of the N_r horizontal (row) lines and N_c vertical (column) lines is a
chain of junction nodes, one per crosspoint, linked by wire segments of
resistance r_p.  The memristor at crosspoint (i, j) bridges row node (i, j)
to column node (i, j); every junction node carries a capacitance c_p to
ground.  Rows are driven at their left end; each column line ends at its
bottom node in the terminal resistance r_t to ground, which models the input
impedance of the attached neuron.

Voltage drives are Norton-transformed through a small source resistance so
the stamped conductance matrix stays symmetric positive definite; current
drives inject straight into the source vector.  With r_p = 0 each line
collapses to a single node (capacitances summed), which is observably
identical to the vanishing-resistance limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .device import MemristorDevice
from .errors import InvalidInputError

__all__ = [
    "DriveMode",
    "Parasitics",
    "CrossbarConfig",
    "CrossbarTopology",
    "SourceStamp",
    "NodalSystem",
    "build_topology",
    "assemble",
    "R_SOURCE_DEFAULT",
    "R_SENSE_SHORT",
]

# Norton source resistance for voltage drives and the stand-in sense resistor
# for an ideal r_t = 0 terminal.  Both must keep their bias (r * sum(g), up to
# ~1e-2 S of incident conductance) far below the 1e-9 relative accuracy the
# zero-parasitic equivalence demands.
R_SOURCE_DEFAULT = 1e-9
R_SENSE_SHORT = 1e-9


class DriveMode(enum.Enum):
    VOLTAGE = "voltage"
    CURRENT = "current"


@dataclass(frozen=True)
class Parasitics:
    """Wire and terminal non-idealities.

    r_p : ohms per wire segment between adjacent junction nodes
    c_p : farads from each junction node to ground
    r_t : ohms from each column's bottom node to ground
    """

    r_p: float = 0.0
    c_p: float = 0.0
    r_t: float = 0.0

    def __post_init__(self):
        for name in ("r_p", "c_p", "r_t"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise InvalidInputError(
                    f"parasitic {name} must be finite and non-negative, got {value!r}"
                )


@dataclass(frozen=True, eq=False)
class CrossbarConfig:
    """Electrical description of one crossbar instance."""

    n_rows: int
    n_cols: int
    g: np.ndarray
    parasitics: Parasitics = Parasitics()
    mode: DriveMode = DriveMode.VOLTAGE
    device: MemristorDevice | None = None

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise InvalidInputError(
                f"array must be at least 1x1, got {self.n_rows}x{self.n_cols}"
            )
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        if g.shape != (self.n_rows, self.n_cols):
            raise InvalidInputError(
                f"conductance matrix shape {g.shape} does not match "
                f"{self.n_rows}x{self.n_cols}"
            )
        if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
            raise InvalidInputError("all conductances must be positive and finite")
        if self.device is not None:
            lo, hi = self.device.g_off, self.device.g_on
            if np.any(g < lo) or np.any(g > hi):
                raise InvalidInputError(
                    f"conductances must lie within the device interval [{lo!r}, {hi!r}] S"
                )


@dataclass
class CrossbarTopology:
    """Node graph of a crossbar, before electrical values are stamped.

    index_map sends ("row" | "col", i, j) to a node index; with r_p = 0 all
    crosspoints of a line map to the same merged node.  cap_scale counts how
    many junction capacitances landed on each node.
    """

    n_rows: int
    n_cols: int
    merged: bool
    node_count: int
    index_map: dict
    wire_pairs: list  # (node_a, node_b) per r_p segment
    device_pairs: list  # (row_node, col_node, i, j) per memristor
    drive_nodes: np.ndarray
    output_nodes: np.ndarray
    cap_scale: np.ndarray


@dataclass
class SourceStamp:
    """One drive as stamped: Norton voltage source (value volts, through
    r_source) or direct current injection (value amperes, r_source None)."""

    node: int
    value: float
    r_source: float | None


@dataclass
class NodalSystem:
    """Assembled linear system G*v = src (DC) / G*v + C*dv/dt = src."""

    node_count: int
    G: sp.csc_matrix
    C: sp.csc_matrix
    src: np.ndarray
    index_map: dict
    output_nodes: np.ndarray
    terminal_conductance: np.ndarray
    sources: list = field(default_factory=list)
    branches: list = field(default_factory=list)  # (a, b, g); b = -1 means ground
    cap_diag: np.ndarray | None = None
    physical_diag: np.ndarray | None = None  # diagonal without penalty stamps


def build_topology(cfg: CrossbarConfig) -> CrossbarTopology:
    """Create the junction-node graph for a crossbar configuration."""
    n_r, n_c = cfg.n_rows, cfg.n_cols
    index_map = {}
    wire_pairs = []
    device_pairs = []

    if cfg.parasitics.r_p == 0.0:
        # Ideal wires: each line is one node.  Junction capacitances merge.
        node_count = n_r + n_c
        cap_scale = np.zeros(node_count)
        for i in range(n_r):
            cap_scale[i] = n_c
            for j in range(n_c):
                index_map[("row", i, j)] = i
        for j in range(n_c):
            cap_scale[n_r + j] = n_r
            for i in range(n_r):
                index_map[("col", i, j)] = n_r + j
        for i in range(n_r):
            for j in range(n_c):
                device_pairs.append((i, n_r + j, i, j))
        drive_nodes = np.arange(n_r)
        output_nodes = np.arange(n_r, n_r + n_c)
        merged = True
    else:
        node_count = 2 * n_r * n_c
        cap_scale = np.ones(node_count)
        col_base = n_r * n_c
        for i in range(n_r):
            for j in range(n_c):
                index_map[("row", i, j)] = i * n_c + j
                index_map[("col", i, j)] = col_base + i * n_c + j
        for i in range(n_r):
            for j in range(n_c - 1):
                wire_pairs.append((i * n_c + j, i * n_c + j + 1))
        for j in range(n_c):
            for i in range(n_r - 1):
                wire_pairs.append((col_base + i * n_c + j, col_base + (i + 1) * n_c + j))
        for i in range(n_r):
            for j in range(n_c):
                device_pairs.append((i * n_c + j, col_base + i * n_c + j, i, j))
        drive_nodes = np.array([i * n_c for i in range(n_r)])
        output_nodes = np.array([col_base + (n_r - 1) * n_c + j for j in range(n_c)])
        merged = False

    return CrossbarTopology(
        n_rows=n_r,
        n_cols=n_c,
        merged=merged,
        node_count=node_count,
        index_map=index_map,
        wire_pairs=wire_pairs,
        device_pairs=device_pairs,
        drive_nodes=drive_nodes,
        output_nodes=output_nodes,
        cap_scale=cap_scale,
    )


def assemble(
    topo: CrossbarTopology,
    cfg: CrossbarConfig,
    drive,
    r_source: float = R_SOURCE_DEFAULT,
) -> NodalSystem:
    """Stamp conductances, capacitances and sources into a NodalSystem.

    `drive` has one entry per row: volts in voltage mode, amperes in current
    mode.
    """
    drive = np.asarray(drive, dtype=float)
    if drive.shape != (cfg.n_rows,):
        raise InvalidInputError(
            f"drive length {drive.shape} does not match {cfg.n_rows} rows"
        )
    if not np.all(np.isfinite(drive)):
        raise InvalidInputError("drive contains non-finite entries")
    if not (math.isfinite(r_source) and r_source > 0.0):
        raise InvalidInputError(f"source resistance must be positive, got {r_source!r}")

    n = topo.node_count
    diag = np.zeros(n)
    physical_diag = np.zeros(n)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    branches = []

    def stamp_pair(a, b, g):
        diag[a] += g
        diag[b] += g
        physical_diag[a] += g
        physical_diag[b] += g
        rows.extend((a, b))
        cols.extend((b, a))
        vals.extend((-g, -g))
        branches.append((a, b, g))

    if topo.wire_pairs:
        g_wire = 1.0 / cfg.parasitics.r_p
        for a, b in topo.wire_pairs:
            stamp_pair(a, b, g_wire)
    for a, b, i, j in topo.device_pairs:
        stamp_pair(a, b, float(cfg.g[i, j]))

    # Column terminals to ground; r_t = 0 becomes a sense short.
    r_t = cfg.parasitics.r_t
    g_t = 1.0 / r_t if r_t > 0.0 else 1.0 / R_SENSE_SHORT
    terminal_conductance = np.full(topo.n_cols, g_t)
    for node in topo.output_nodes:
        diag[node] += g_t
        if r_t > 0.0:
            physical_diag[node] += g_t
        branches.append((int(node), -1, g_t))

    src = np.zeros(n)
    sources = []
    if cfg.mode is DriveMode.VOLTAGE:
        g_s = 1.0 / r_source
        for i, node in enumerate(topo.drive_nodes):
            diag[node] += g_s
            src[node] += drive[i] * g_s
            branches.append((int(node), -1, g_s))
            sources.append(SourceStamp(node=int(node), value=float(drive[i]), r_source=r_source))
    else:
        for i, node in enumerate(topo.drive_nodes):
            src[node] += drive[i]
            sources.append(SourceStamp(node=int(node), value=float(drive[i]), r_source=None))

    rows.extend(range(n))
    cols.extend(range(n))
    vals.extend(diag)
    G = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))

    cap_diag = topo.cap_scale * cfg.parasitics.c_p
    C = sp.csc_matrix(sp.diags(cap_diag))

    return NodalSystem(
        node_count=n,
        G=G,
        C=C,
        src=src,
        index_map=topo.index_map,
        output_nodes=np.asarray(topo.output_nodes, dtype=int),
        terminal_conductance=terminal_conductance,
        sources=sources,
        branches=branches,
        cap_diag=cap_diag,
        physical_diag=physical_diag,
    )
