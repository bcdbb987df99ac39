"""Multi-qubit entangling gate design for trapped-ion crystals.

Units: frequencies passed to build_crystal are in Hz, everything returned
is angular (rad/s); gate times are in seconds; drive coordinates and
amplitudes are dimensionless (amplitude x T).
"""

from ._core import (
    ConfigError,
    Couplings,
    Crystal,
    InfeasibleError,
    NumericalError,
    Pool,
    Solution,
    Target,
    ZeroPhaseSolution,
    build_crystal,
    config_hash,
    convert,
    couplings,
    expand_global,
    infidelity,
    ion_variances,
    nuclear_norm,
    nuclear_norm_estimate,
    overlap,
    raw_pair_phases,
    run_collapse,
    run_scaling,
    set_threads,
    simulate,
    solve,
    target,
    target_from_matrix,
    zero_phase_pool,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
