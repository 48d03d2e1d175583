"""Magic angles of the chiral model of twisted bilayer graphene.

Spectral computations for ``D(alpha)``: resonant sets and magic parameters,
Bloch bands, theta-function constructions, trace identities and
a-posteriori certification.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BadN, BadTau, BadTruncation, CertificationFailed, DegenerateKernel, EigenvalueNotIsolated,
    FlatObjective, InsufficientData, InvalidPotential, MagicAnglesError, NotConverged, PoleAtLattice,
    PoleOnGrid, SingularDk, SingularShift, ValidationError, ZeroGamma,
)
from .lattice import K_STAR, OMEGA, Z_S, KPoint, kpoint_from_complex, kpoint_from_coords  # noqa: E402
from .potential import STANDARD, PotentialSpec, mu_potential, parse_potential  # noqa: E402

__all__ = [
    "__version__",
    "BadN", "BadTau", "BadTruncation", "CertificationFailed", "DegenerateKernel",
    "EigenvalueNotIsolated", "FlatObjective", "InsufficientData", "InvalidPotential",
    "MagicAnglesError", "NotConverged", "PoleAtLattice", "PoleOnGrid", "SingularDk",
    "SingularShift", "ValidationError", "ZeroGamma",
    "K_STAR", "OMEGA", "Z_S", "KPoint", "kpoint_from_complex", "kpoint_from_coords",
    "STANDARD", "PotentialSpec", "mu_potential", "parse_potential",
]
