"""Mode-(n, m) option pricing: simulation, finite differences, closed forms."""
from .model import (
    ModeIndex,
    ModelParams,
    NumericalError,
    PayoffKind,
    PayoffSpec,
    RiskNeutralParams,
    ValidationError,
    to_risk_neutral,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "ModeIndex",
    "ModelParams",
    "NumericalError",
    "PayoffKind",
    "PayoffSpec",
    "RiskNeutralParams",
    "ValidationError",
    "to_risk_neutral",
    "validate_params",
    "__version__",
]
