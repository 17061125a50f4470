"""Variational entanglement detection and logarithmic-negativity estimation on a statevector simulator."""

from .circuitsim import FIG2_INIT, Ansatz, HypersphericalAnsatz, ShotPolicy, ansatz_fig2, ansatz_layered
from .detect import (
    DetectionReport,
    NegativityReport,
    loss_deterministic,
    loss_sampled,
    sample_budget,
    ved_deterministic,
    ved_probabilistic,
    ved_reduction_direct,
    vlne,
)
from .errors import VarentError
from .optimize import OptimizerConfig, minimize, param_shift_grad
from .posmaps import QuasiDecomposition, apply_map, decomposition_by_name, gamma, sampling_dist
from .states import DensityMatrix

__version__ = "0.1.0"

__all__ = [
    "FIG2_INIT",
    "Ansatz",
    "DensityMatrix",
    "DetectionReport",
    "HypersphericalAnsatz",
    "NegativityReport",
    "OptimizerConfig",
    "QuasiDecomposition",
    "ShotPolicy",
    "VarentError",
    "ansatz_fig2",
    "ansatz_layered",
    "apply_map",
    "decomposition_by_name",
    "gamma",
    "loss_deterministic",
    "loss_sampled",
    "minimize",
    "param_shift_grad",
    "sample_budget",
    "sampling_dist",
    "ved_deterministic",
    "ved_probabilistic",
    "ved_reduction_direct",
    "vlne",
]
