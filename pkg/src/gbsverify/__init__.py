"""Phase-space Monte Carlo verification of lossless Gaussian boson sampling.

Squeezed-vacuum trajectories are sampled in the positive-P or the
parity-projected matrix-P representation, sent through a linear network and
turned into total-count distributions with sub-ensemble error bars, which are
then checked against the exact negative-binomial count law.
"""

from .core import (
    ConfigError,
    CountDistribution,
    DensityHistogram,
    NumericalAbort,
    OmegaMatrix,
    Representation,
    RunConfig,
    SingularEvaluationError,
    SqueezerBank,
    Stage,
    TrajectoryBatch,
    Weighting,
    derive_subensemble_seed,
    default_m_max,
)
from .engine import run_counts, trajectory_observables
from .exact import exact_total_count_distribution
from .network import haar_unitary, transform
from .stats import compare, combine_subensembles, histogram_density

__version__ = "0.1.0"
