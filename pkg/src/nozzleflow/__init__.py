"""Viscous approximations of compressible nozzle flow and checks of their uniform bounds."""

__version__ = "0.1.0"

from nozzleflow.gas import GasModel, Mode
from nozzleflow.geometry import (
    Constant,
    ExpMonotone,
    LavalBump,
    Tabulated,
    NozzleGeometry,
    derive_a,
    check_admissible,
)

__all__ = [
    "__version__",
    "GasModel",
    "Mode",
    "Constant",
    "ExpMonotone",
    "LavalBump",
    "Tabulated",
    "NozzleGeometry",
    "derive_a",
    "check_admissible",
]
