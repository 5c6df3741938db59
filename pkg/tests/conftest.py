import numpy as np
import pytest

from xbarsim import (
    CrossbarConfig,
    DriveMode,
    MemristorDevice,
    Parasitics,
    assemble,
    build_topology,
    solve_dc,
)


def solve_columns(cfg, drive, **kwargs):
    """Build, assemble and DC-solve in one call; returns column currents."""
    sys_ = assemble(build_topology(cfg), cfg, drive, **kwargs)
    return solve_dc(sys_).column_currents


@pytest.fixture
def fixed_8x8():
    """The seeded 8x8 instance used by the trend suite: weakly conductive
    devices so the terminal resistance stays well below the column knee."""
    rng = np.random.default_rng(42)
    g = rng.uniform(2e-7, 1e-6, (8, 8))
    device = MemristorDevice(g_off=1e-7, g_on=1e-5, v_th=1.0, k_mob=1e6)
    return CrossbarConfig(
        n_rows=8,
        n_cols=8,
        g=g,
        parasitics=Parasitics(r_p=1.0, c_p=1e-15, r_t=100.0),
        mode=DriveMode.VOLTAGE,
        device=device,
    )
