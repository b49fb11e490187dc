"""Taylor-series integration of softened and Newtonian N-body gravity, with
checks of the time-reflection symmetries of solutions started from rest or
from total coincidence."""

from .errors import (
    CollisionError,
    EvaluationError,
    InvalidModelError,
    InvalidRadiusParameterError,
    NearSingularSeriesError,
    OrderMismatchError,
    OutOfRangeError,
)
from .forces import BodySystem, ForceModel, State, accel, accel_bound, total_energy
from .series import PowerSeries
from .symmetry import (
    ParityVerdict,
    SymmetryReport,
    lemma5_check,
    parity_probe,
    verify_even,
    verify_odd,
)
from .taylor import (
    SeriesState,
    Trajectory,
    dense_eval,
    integrate,
    radius_estimate,
    step_size,
    taylor_coefficients,
)

__all__ = [
    "BodySystem", "CollisionError", "EvaluationError", "ForceModel",
    "InvalidModelError", "InvalidRadiusParameterError", "NearSingularSeriesError",
    "OrderMismatchError", "OutOfRangeError", "ParityVerdict", "PowerSeries",
    "SeriesState", "State", "SymmetryReport", "Trajectory", "accel", "accel_bound",
    "dense_eval", "integrate", "lemma5_check", "parity_probe", "radius_estimate",
    "step_size", "taylor_coefficients", "total_energy", "verify_even", "verify_odd",
]
