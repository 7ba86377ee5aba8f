"""nodalab: nodal domains of toral eigenfunctions and Gaussian monochromatic waves.

Subpackages map onto the pipeline stages: `lattice` (sums of two squares and
vanishing-sum counts), `measures` (circle measures, binning, Prokhorov metric),
`eigenfunctions` (deterministic waves and their arc-gathered surrogates),
`nodal` (grid censuses and localized counts), `gaussian` (random wave sampling
and density estimates), `moments` (quasi-random vs Gaussian moments) and
`reporting`/`cli` (experiment orchestration).
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    DegenerateSamplingError,
    EmptyDataError,
    NodalabError,
    PreconditionError,
    UnresolvedCensusError,
)
from .lattice import (
    CorrelationReport,
    LatticePointSet,
    condition_I_report,
    lattice_points,
    minimally_vanishing_count,
    sum_two_squares_sieve,
)
from .measures import (
    ArcBinning,
    SpectralMeasure,
    antipodal_pair,
    atomize,
    bin_measure,
    cilleruelo,
    fourier_coefficient,
    measure_from_coefficients,
    prokhorov_distance,
    tilted_cilleruelo,
    uniform_measure,
)
from .fields import CallableField, Domain, PlanarField, TORUS, TrigField, c1_norm, square
from .eigenfunctions import (
    CoefficientVector,
    LocalDecomposition,
    blow_up_field,
    build_coefficients,
    class_A_check,
    evaluate_f,
    gather_local,
    residual_statistics,
    toral_field,
)
from .nodal import (
    NodalCensus,
    count_nodal_domains,
    localized_count_integral,
    nodal_set_length,
)
from .gaussian import (
    CnsEstimate,
    barrier_statistic,
    degeneracy_det,
    estimate_cns,
    kac_rice_line_intensity,
    perturbation_stability,
    sample_field,
)
from .moments import (
    MomentSpec,
    arc_jacobian_det,
    arc_moment_exact,
    arc_moment_quadrature,
    cube_probability_gap,
    gaussian_joint_moment,
    moment_gap_sweep,
)
from .reporting import ExperimentConfig, run_comparison
