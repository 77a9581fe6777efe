"""Coulombian renormalized energy of planar lattices and torus configurations.

The package computes the renormalized interaction energy of 2D lattices and
periodic point configurations through three mutually validating routes
(modular eta product, regularized Fourier limit, theta/zeta integral
differences), optimizes the energy over lattice shapes and over n-point
torus configurations, and solves the companion constant-obstacle problem
with its verification suite.  Hot kernels are JIT-compiled when numba is
available; set ABRIKOSOV_NO_NUMBA=1 to force the pure-numpy fallback.
"""
from ._version import __version__
from . import backend, errors
from .modular import (
    LatticeBasis,
    LatticeModulus,
    SeriesControl,
    dedekind_eta,
    eisenstein,
    epstein_zeta_mellin,
    kronecker_f,
    theta_lattice,
    zeta_difference_limit,
)
from .lattice import (
    EnergyReport,
    ModuliGrid,
    ScanReport,
    ThetaProbeReport,
    TRIANGULAR_TAU,
    lattice_to_tau,
    moduli_scan,
    reduce_fundamental,
    shape_basis,
    theta_minimality_probe,
    w_eta,
    w_fourier,
    w_zeta_diff,
)
from .torus import (
    Conjecture1Report,
    ElkiesReport,
    GreenEvaluator,
    MinimizeControl,
    MinimizeOutcome,
    TorusConfig,
    TorusSpec,
    config_energy,
    config_grad,
    conjecture1_probe,
    elkies_experiment,
    green,
    green_grad,
    minimize_config,
    triangular_embedding,
)
from .obstacle import (
    AsymptoticsReport,
    BarrierCheck,
    ConvexPolygon,
    DomainGrid,
    Ellipse,
    EllipseLimitReport,
    GradientBoundReport,
    H0Field,
    ObstacleField,
    UnitDisk,
    barrier_check,
    coincidence_metrics,
    quadratic_excess_potential,
    solve_h0,
    solve_obstacle,
    sup_gradient,
    verify_ellipse_limit,
    verify_gradient_bound,
    verify_scale_law,
)

__all__ = [
    "__version__",
    "backend",
    "errors",
    # modular forms layer
    "LatticeBasis",
    "LatticeModulus",
    "SeriesControl",
    "dedekind_eta",
    "eisenstein",
    "epstein_zeta_mellin",
    "kronecker_f",
    "theta_lattice",
    "zeta_difference_limit",
    # lattice energies
    "EnergyReport",
    "ModuliGrid",
    "ScanReport",
    "ThetaProbeReport",
    "TRIANGULAR_TAU",
    "lattice_to_tau",
    "moduli_scan",
    "reduce_fundamental",
    "shape_basis",
    "theta_minimality_probe",
    "w_eta",
    "w_fourier",
    "w_zeta_diff",
    # torus configurations
    "Conjecture1Report",
    "ElkiesReport",
    "GreenEvaluator",
    "MinimizeControl",
    "MinimizeOutcome",
    "TorusConfig",
    "TorusSpec",
    "config_energy",
    "config_grad",
    "conjecture1_probe",
    "elkies_experiment",
    "green",
    "green_grad",
    "minimize_config",
    "triangular_embedding",
    # obstacle problem
    "AsymptoticsReport",
    "BarrierCheck",
    "ConvexPolygon",
    "DomainGrid",
    "Ellipse",
    "EllipseLimitReport",
    "GradientBoundReport",
    "H0Field",
    "ObstacleField",
    "UnitDisk",
    "barrier_check",
    "coincidence_metrics",
    "quadratic_excess_potential",
    "solve_h0",
    "solve_obstacle",
    "sup_gradient",
    "verify_ellipse_limit",
    "verify_gradient_bound",
    "verify_scale_law",
]
