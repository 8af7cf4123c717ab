"""Dyadic models of fractional integrals, their commutators and two-weight characteristics."""
from .errors import ConfigError, GeometryError, OutsideRootError, ResolutionError, UnsupportedDimensionError
from .grid import DyadicCube, DyadicGrid, GridFunction, ResolvedLattice, Tails, build_lattice
from .haar import HaarCoefficients, haar_forward, haar_function, haar_inverse
from .operators import (commutator_continuum, commutator_dyadic, continuum_frac_integral, decomposition_terms,
                        dyadic_frac_integral, frac_maximal, square_function)
from .weights import (Weight, WeightPair, ap_characteristic, apq_characteristic, membership_report, power_weight,
                      weighted_bmo_norm)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GeometryError", "OutsideRootError", "ResolutionError", "UnsupportedDimensionError",
    "DyadicCube", "DyadicGrid", "GridFunction", "ResolvedLattice", "Tails", "build_lattice",
    "HaarCoefficients", "haar_forward", "haar_function", "haar_inverse",
    "commutator_continuum", "commutator_dyadic", "continuum_frac_integral", "decomposition_terms",
    "dyadic_frac_integral", "frac_maximal", "square_function",
    "Weight", "WeightPair", "ap_characteristic", "apq_characteristic", "membership_report", "power_weight",
    "weighted_bmo_norm",
]
