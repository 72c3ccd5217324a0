"""2D Yee-grid FDTD with CPML, DFT flux monitors and a 1D stack oracle."""
from .engine import (
    CAL_GAP_CELLS, ENGINE_VERSION, MAX_COURANT, ConfigError, DivergenceError, FdtdError, FieldMonitorSpec,
    FieldState, MonitorRecord, MonitorSpec, RunResult, Simulation, SimulationConfig, SourceSpec,
    calibrate_source, calibration_key, clear_calibration_memo, cpml_profile, drude_from_permittivity,
    pulse_parameters, run, waveform,
)
from .analysis import (
    BeamProfile, BoxFluxes, beam_profile, beam_profile_from_intensity, box_fluxes, box_monitors,
    fit_attenuation, read_snapshot, snspd_efficiency, write_monitor_csv, write_snapshot,
)
from .fdtd1d import FdtdStackResult, solve_stack_fdtd
from .setups import GcLayout, depth_name, grating_coupler, lossy_slab, straight_waveguide
