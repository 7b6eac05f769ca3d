"""Noisy simulation and depth analysis of entanglement-spectroscopy circuits."""

from .circuit import (
    Circuit,
    DurationTable,
    GateKind,
    Instruction,
    cswap_decomposed,
    makespan,
    pad_idle,
    schedule_asap,
    width,
)
from .depthlab import DepthReport, build_contrived_qe_ht, depth_table, effective_depth, max_reset_interval
from .noise import PRESETS, NoiseProfile, load_noise, preset
from .sim import Counts, ShotBatch, StateVector, run, run_shots
from .spectroscopy import (
    ALGORITHMS,
    Algorithm,
    SpectroscopyEstimate,
    SpectroscopyJob,
    build,
    build_state_prep,
    estimate_bell_overlap,
    estimate_ht,
    estimate_tct,
    newton_girard,
    thetas_for_even_traces,
    trace_oracle,
)
from .sweep import SweepResult, run_sweep
from .textio import parse_circuit, serialize

__version__ = "0.1.0"
