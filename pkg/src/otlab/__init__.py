"""otlab: neural optimal-transport maps, adversarial baselines, and the
exact oracles and metrics needed to measure distribution-matching bias."""

from .autodiff import Tape, Tensor
from .costs import (
    CompositeUpsample,
    CostFn,
    Dynamic,
    Lp,
    Mae,
    Mse,
    Quadratic,
    RandomFeatureCost,
    Upsampler,
    eval_cost,
    refresh_dynamic,
    scale_cost,
)
from .distributions import (
    Degradation,
    DegradedField,
    DiscreteAtoms,
    Distribution,
    Gaussian,
    Mixture,
    SmoothField,
    make_sr_pair,
)
from .exceptions import (
    ConfigError,
    ContractError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    NumericError,
    ShapeError,
)
from .metrics import (
    FvSlope,
    MetricReport,
    RbfKernel,
    discrete_w2,
    fv_slope,
    l2_uvp,
    median_bandwidth,
    mmd2,
    palette_variance,
    palette_variance_spread,
    transport_cost_estimate,
)
from .nn import FrozenMap, Mlp, freeze, input_gradient
from .optim import Adam
from .oracles import (
    DiscretePlan,
    GaussianOTMap,
    MonotoneRearrangement1D,
    bures_wasserstein_cost,
    discrete_ot,
    example1_solution,
    gaussian_ot_map,
    pairwise_cost_matrix,
)
from .solvers import (
    GANSolver,
    GanConfig,
    OTSolver,
    OtsConfig,
    TrainTrace,
    solve_example1,
    train_gan,
    train_ots,
)

__version__ = "0.1.0"

__all__ = [
    "Tape",
    "Tensor",
    "Adam",
    "Mlp",
    "FrozenMap",
    "freeze",
    "input_gradient",
    "Distribution",
    "Gaussian",
    "Mixture",
    "DiscreteAtoms",
    "SmoothField",
    "DegradedField",
    "Degradation",
    "make_sr_pair",
    "CostFn",
    "Quadratic",
    "Mse",
    "Mae",
    "Lp",
    "Upsampler",
    "CompositeUpsample",
    "Dynamic",
    "RandomFeatureCost",
    "eval_cost",
    "scale_cost",
    "refresh_dynamic",
    "GaussianOTMap",
    "gaussian_ot_map",
    "bures_wasserstein_cost",
    "MonotoneRearrangement1D",
    "DiscretePlan",
    "discrete_ot",
    "pairwise_cost_matrix",
    "example1_solution",
    "MetricReport",
    "RbfKernel",
    "median_bandwidth",
    "mmd2",
    "l2_uvp",
    "transport_cost_estimate",
    "palette_variance",
    "palette_variance_spread",
    "discrete_w2",
    "FvSlope",
    "fv_slope",
    "OtsConfig",
    "GanConfig",
    "TrainTrace",
    "train_ots",
    "train_gan",
    "solve_example1",
    "OTSolver",
    "GANSolver",
    "ShapeError",
    "ContractError",
    "NumericError",
    "ConfigError",
    "DomainError",
    "DivergenceError",
    "ConvergenceError",
]
