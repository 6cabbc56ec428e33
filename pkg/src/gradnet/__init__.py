"""Admissible gradient systems on coupled cell networks."""

__version__ = "0.1.0"

from .graph import CellGraph, GraphError, load_graph  # noqa: E402
from .coupling import (  # noqa: E402
    CouplingFunction,
    PhaseCoupling,
    builtin_phase_family,
    check_C1_C4,
    polynomial_coupling,
    quadratic_coupling,
)
from .admissible import AdmissibleFunction, assemble, validate_admissibility  # noqa: E402
from .spectra import inertia, inertia_bounds, laplacian_spectrum, weighted_laplacian  # noqa: E402
from .synchrony import classify_synchronous, classify_two_colour, wedge_region  # noqa: E402
from .ring import RingFunction, enumerate_equilibria, ground_state  # noqa: E402
from .flow import FlowConfig, integrate, multistart_minimize  # noqa: E402

__all__ = [
    "AdmissibleFunction",
    "CellGraph",
    "CouplingFunction",
    "FlowConfig",
    "GraphError",
    "PhaseCoupling",
    "RingFunction",
    "assemble",
    "builtin_phase_family",
    "check_C1_C4",
    "classify_synchronous",
    "classify_two_colour",
    "enumerate_equilibria",
    "ground_state",
    "inertia",
    "inertia_bounds",
    "integrate",
    "laplacian_spectrum",
    "load_graph",
    "multistart_minimize",
    "polynomial_coupling",
    "quadratic_coupling",
    "validate_admissibility",
    "weighted_laplacian",
    "wedge_region",
]
