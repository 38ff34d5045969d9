"""Secret-sharing MPC aggregation for federated learning, peer-to-peer and two-phase."""

from ._kernels import backend as kernel_backend
from .cost_model import CostBreakdown, CostInputs, p2p_cost, phase1_cost, phase2_cost, two_phase_cost
from .field import DEFAULT_PARAMS, FieldParams, decode_fixed, encode_fixed
from .orchestrator import ExperimentConfig, Report, run_experiment, run_matrix
from .protocols import (
    Committee,
    ElectionConfig,
    Session,
    Topology,
    elect_committee,
    federated_round,
    p2p_model_aggregate,
    p2p_secure_sum,
    two_phase_aggregate,
)
from .sharing import SchemeKind, ShareVector, SharingScheme
from .simnet import Endpoint, NetworkStats, Phase, SimNetwork

__version__ = "0.1.0"
