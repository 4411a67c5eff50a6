"""Lifted convex solver for variational problems with Laplacian regularization.

The package turns a pointwise non-convex problem over a bounded range into a
convex saddle-point problem over per-pixel probability rows on a triangulated
label range, solves it with an adaptive primal-dual iteration, and maps the
solution back by averaging, thresholding, or mode extraction.
"""

from .energies import (
    DataTermSamples,
    Regularizer,
    epigraph_project,
    reg_conj,
    reg_grad,
    reg_value,
    sample_absdiff_squared,
    sample_registration,
)
from .errors import (
    ConfigError,
    DegenerateSimplexError,
    DivergenceError,
    LapliftError,
    OutOfRangeError,
    PgmFormatError,
)
from .grid import Grid, laplacian_apply, laplacian_opnorm_bound
from .images import Image, bilinear_sample, load_pgm, save_pgm, synth_rotation, warp
from .labelspace import (
    Triangulation,
    barycentric,
    build_disk,
    build_interval,
    embed_dirac,
    evaluate_pl,
    locate,
    pl_gradient,
)
from .lifting import (
    DualVars,
    KSetSpec,
    LiftedField,
    SaddleProblem,
    assemble,
    check_dual_feasibility,
    kset_membership,
    kset_sampled_check,
    lift_dirac,
    lifted_energy_at,
    make_certificate,
    original_energy,
)
from .registration import RegistrationConfig, endpoint_error, run_registration
from .rounding import RoundedField, extract_modes, round_mean, round_threshold
from .solver import (
    SolveReport,
    SolverConfig,
    estimate_opnorm,
    pdhg_solve,
    project_simplex,
    residuals,
)
from .toy import ToyConfig, run_toy1d

__version__ = "0.1.0"
