"""Charge transition levels, E x e Jahn-Teller surfaces and vibronic emission lineshapes of point defects."""

__version__ = "0.1.0"

from .core import AtomicStructure, ChargeStateRecord, HostParams, PhononModeSet
from .errors import DefectPhotonicsError, InputError, PhysicsError

__all__ = [
    "AtomicStructure",
    "ChargeStateRecord",
    "DefectPhotonicsError",
    "HostParams",
    "InputError",
    "PhononModeSet",
    "PhysicsError",
    "__version__",
]
