"""Recursive two-way entanglement purification over the dephasing channel."""
from .core import (
    BranchTag,
    ConsistencyError,
    DephasingParams,
    DomainError,
    Spectrum,
    SpectrumEntry,
    branch_spectrum,
    capacity,
    round1_spectrum,
    round2_spectrum,
)
from .purify_map import iterate_map, map_derivative, map_step
from .rates import rci_round1, rci_round2, round_ledger

__all__ = [
    "BranchTag",
    "ConsistencyError",
    "DephasingParams",
    "DomainError",
    "Spectrum",
    "SpectrumEntry",
    "branch_spectrum",
    "capacity",
    "iterate_map",
    "map_derivative",
    "map_step",
    "rci_round1",
    "rci_round2",
    "round1_spectrum",
    "round2_spectrum",
    "round_ledger",
]
