"""Geometric phase and non-adiabatic dephasing of a driven oscillator
dispersively coupled to a qubit."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConfigError,
    ContractError,
    GeomPhaseError,
    NumericError,
    Orientation,
    PathSpec,
    Shape,
    SystemParams,
    ValidationError,
    Waveform,
    to_angular,
    to_mhz,
)
from .config import load_config, params_from_config  # noqa: E402
from .paths import ClosedContour, drive_spectrum, make_path, signed_area, straight_reference  # noqa: E402
from .dynamics import (  # noqa: E402
    BranchTrajectory,
    CoherenceResult,
    adiabatic_phases,
    coherence,
    evolve_branch,
    evolve_joint,
    lorentzian_response,
    mean_photon_number,
)
from .oracle import FockState, OracleError, coherent_vector, evolve_fock, oracle_compare  # noqa: E402
from .analysis import (  # noqa: E402
    FitResult,
    SweepTable,
    find_R_extrema,
    fit_gaussian_R,
    fit_inverse_T,
    geometric_phase_measured,
    measured_phase,
    unwrap_phase,
)
