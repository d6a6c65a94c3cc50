"""Separable two-center quantum eigenproblems in prolate spheroidal and
elliptic coordinates: coordinate charts, separable potential families,
the symmetry operator, the bi-spectral (E, lambda) solver and the
exactly/quasi-exactly solvable one-dimensional sectors."""

from .geometry import (
    Cartesian,
    Elliptic,
    FocalRadii,
    Geometry,
    Prolate,
    cartesian_to_prolate,
    elliptic_from_prolate,
    focal_radii,
    metric_factor,
    prolate_from_elliptic,
    prolate_to_cartesian,
)
from .potentials import (
    CoulombParams,
    EvaluationDomainError,
    PT1DParams,
    Potential1D,
    QESParams,
    SWParams,
    SeparableSpec,
    assemble_V,
    azimuthal_term,
    coulomb_two_center,
    effective_1d,
    from_r1r2,
    pt_exactly_solvable_2d,
    pt_hyperbolic,
    pt_trigonometric,
    qes_potential,
    sw_spec,
    verify_periodicity,
)
from .separation import (
    BracketError,
    EigenSolution,
    ModeLabels,
    SeparationConstants,
    SolverSettings,
    angular_eigenvalues,
    bispectral_solve,
    formulation_equivalence,
    potential_curve,
    radial_lambda,
)
from .solvable import (
    AnsatzExponents,
    PolynomialSector,
    Spectrum1D,
    exactly_solvable_2d_solution,
    pt_exponents,
    pt_spectrum_algebraic,
    qes_sector,
    solve_1d_spectrum,
    sw_degeneration_check,
    verify_solution,
)

__version__ = "0.1.0"
