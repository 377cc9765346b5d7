"""Hausdorff and Minkowski dimensions of multiplicative subshifts."""

__version__ = "0.1.0"

from .config import RunConfig, load_config, load_fixture
from .empirical import RenderSpec, box_count, estimate_local_dimension, render
from .entropy import ly_check, partition_entropy, pmu_dimension_series
from .errors import (
    BudgetExceeded, ConfigError, DepthExceeded, EmptyOmega, InadmissibleWord, MultshiftError,
    NonContracting, NotAProbability, ResolutionTooCoarse,
)
from .fixedpoint import DimValue, TVector, apply_F, hausdorff_dimension, solve_t
from .measures import (
    BallSpec, Bernoulli, Cylinder, Markov, PointMass, optimal_measure, pmu_cylinder_mass, sample_pmu,
    uniform_bernoulli,
)
from .minkowski import CountTable, equality_conditions, minkowski_dimension, prefix_count
from .schedule import ParamSchedule, build_schedule, delta, omega_weights, sigma_permutation
from .system import (
    Carpet, ExplicitTree, Full, Sft, StaircasePrefix, SystemSpec, enumerate_prefixes, follower_key,
    followers, is_admissible,
)
