"""S-arithmetic side: places, walk matrices, adjoint action and growth laws."""
from carpetdyn.sadic.places import PlacePartition, derive_places
from carpetdyn.sadic.walk import (CheckResult, IdentityFailure, IndexingError, Walk, WalkElement, build_walk,
                                  prefix_swap_gamma, verify_crucial_identity, verify_k_hbar)
from carpetdyn.sadic.lie import AdOperator, adjoint, centralizer, op_norm, subalgebra_suite
from carpetdyn.sadic.growth import growth_audit
from carpetdyn.sadic.exterior import exterior_power_suite

__all__ = [
    "PlacePartition", "derive_places", "CheckResult", "IdentityFailure", "IndexingError", "Walk", "WalkElement",
    "build_walk", "prefix_swap_gamma", "verify_crucial_identity", "verify_k_hbar", "AdOperator", "adjoint",
    "centralizer", "op_norm", "subalgebra_suite", "growth_audit", "exterior_power_suite",
]
