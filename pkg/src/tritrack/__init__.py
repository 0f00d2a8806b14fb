"""Wave front tracking for triangular systems ``u_t + f(u)_x = 0``,
``v_t + (a(u) v)_x = 0`` with fractional-BV data."""

from .model import (
    FluxModel,
    GridFlux,
    ModelError,
    NumericError,
    build_grid_flux,
    burgers_linear,
    check_ush,
    cubic_shifted,
    from_Z,
    get_model,
    potential_A,
    to_Z,
)
from .pcfn import StepFunction, local_extrema, read_csv, sample_to_grid, tvs, tvs_bruteforce, write_csv
from .riemann import WaveFan, WaveKind, rh_factor, scalar_riemann, system_riemann
from .wft import (
    CircuitBreakerError,
    DegeneracyError,
    EngineError,
    Simulation,
    init,
    next_collision,
    resolve_collision,
    run_until,
    snapshot,
    trace_characteristic,
)

__version__ = "0.1.0"

__all__ = [
    "FluxModel", "GridFlux", "ModelError", "NumericError", "build_grid_flux",
    "burgers_linear", "check_ush", "cubic_shifted", "from_Z", "get_model",
    "potential_A", "to_Z", "StepFunction", "local_extrema", "read_csv",
    "sample_to_grid", "tvs", "tvs_bruteforce", "write_csv", "WaveFan", "WaveKind",
    "rh_factor", "scalar_riemann", "system_riemann", "CircuitBreakerError",
    "DegeneracyError", "EngineError", "Simulation", "init", "next_collision",
    "resolve_collision", "run_until", "snapshot", "trace_characteristic",
]
