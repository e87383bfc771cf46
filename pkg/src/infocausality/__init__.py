"""Simulation of no-signaling boxes and the information-causality protocol."""

from .boxes import (
    ALGEBRAIC_MAX,
    CLASSICAL_BOUND,
    TSIRELSON_BOUND,
    Box,
    BoxError,
    NoSignalingReport,
    anisotropy,
    chsh_value,
    isotropic_box,
    local_deterministic_box,
    mix,
    no_signaling,
    pr_box,
    sample,
    uniform_box,
)
from .icproto import ProtocolConfig, RunSummary, exact_protocol_stats, run_protocol, run_trial
from .metrics import binary_entropy, empirical_mutual_information, merit
from .quantum import (
    MeasurementSettings,
    optimize_settings,
    pdl_gate,
    psi_plus,
    quantum_box,
    rho_sep,
    theory_S,
)
from .twirl import Relabeling, depolarize, relabel, symmetrize_outputs

__version__ = "0.1.0"
