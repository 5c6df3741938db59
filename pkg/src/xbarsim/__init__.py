"""Memristive crossbar dot-product engine simulator.

Models an N x M crossbar of memristors with wire parasitics and a terminal
resistance per column, solves the resulting nodal network (DC, AC,
transient), compares the physical output against the ideal dot product, and
attaches behavioral sigmoid neurons at the column terminals.
"""

from .analysis import (
    McStats,
    MultiPoleResponseWarning,
    SweepResult,
    compute_bandwidth,
    compute_energy,
    monte_carlo,
    rerun_sweep,
    run_sweep,
)
from .config import RunConfig, load_config, parse_config
from .device import (
    DeviceState,
    MemristorDevice,
    conductance,
    device_current,
    evolve_state,
    program_to_conductance,
)
from .errors import (
    ConfigError,
    InvalidInputError,
    NumericalFailureError,
    SettlingTimeoutError,
    SimulationError,
)
from .ideal import (
    dot_product_error,
    ideal_current_mode,
    ideal_voltage_mode,
    normalize_row_conductances,
)
from .network import (
    CrossbarConfig,
    CrossbarTopology,
    DriveMode,
    NodalSystem,
    Parasitics,
    assemble,
    build_topology,
)
from .neuron import (
    NeuronPreset,
    NoFitError,
    SigmoidParams,
    SmallSignalParams,
    builtin_presets,
    fit_sigmoid,
    input_impedance,
    neuron_transfer,
    preset_by_label,
    sigmoid,
)
from .solver import (
    AcSolution,
    DcSolution,
    TransientResult,
    dense_oracle_solve,
    solve_ac,
    solve_dc,
    solve_transient,
    time_constant_bounds,
)

__version__ = "0.1.0"
