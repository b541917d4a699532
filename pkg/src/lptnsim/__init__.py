"""lptnsim: positivity-preserving simulation of 1D open quantum systems.

Mixed states are kept in locally purified form ``rho = X X^dag`` at all
times, Lindblad dynamics is applied through Trotterized gate and Kraus
layers, and every compression feeds a discarded-weight ledger from which a
rigorous trace-norm error certificate is reported alongside each run.
"""

from .errors import (
    CapacityError,
    CompletePositivityError,
    ConfigError,
    ContractViolationError,
    LptnError,
    NumericError,
    ShapeError,
    ValidationError,
)
from .evolution import (
    CertificateInputs,
    EvolutionResult,
    ObservableSpec,
    TrotterSchedule,
    TruncationControls,
    build_schedule,
    certificate,
    evolve,
    evolve_to_stationarity,
    local_diamond_bound,
    step,
    trotter_defect,
)
from .lptn_state import ErrorLedger, LptnState
from .models import (
    LindbladModel,
    kitaev_wire,
    parse_model_spec,
    spin_cavity_model,
    xxz_boundary_driven,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "CompletePositivityError", "ConfigError",
    "ContractViolationError", "LptnError", "NumericError", "ShapeError",
    "ValidationError", "CertificateInputs", "EvolutionResult",
    "ObservableSpec", "TrotterSchedule", "TruncationControls",
    "build_schedule", "certificate", "evolve", "evolve_to_stationarity",
    "local_diamond_bound", "step", "trotter_defect", "ErrorLedger",
    "LptnState", "LindbladModel", "kitaev_wire", "parse_model_spec",
    "spin_cavity_model", "xxz_boundary_driven", "__version__",
]
