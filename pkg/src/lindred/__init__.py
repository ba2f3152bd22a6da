"""Model reduction of finite-dimensional Lindblad dynamics."""
from .operator_core import (
    HilbertSpace, LindbladModel, choi_matrix, cptp_report, devectorize, liouvillian, vectorize,
)
from .spectral import center_manifold, eig_superoperator, spectral_projector
from .algebra import WedderburnStructure, decompose_projector, wedderburn_decompose
from .reduction import (
    ReductionMaps, build_reduction_maps, extract_hamiltonian_jumps, lindblad_check,
    reduced_generator,
)
from .perturbation import PerturbedGenerator, error_bounds
from .adiabatic import Gauge, first_order_AE, make_gauge
from .models import DephasingSpec, XXZSpec, build_dephasing, build_xxz, xxz_liouvillian
from .dynamics import propagate, trace_norm
from .pipeline import center_reduction

__version__ = "0.1.0"
