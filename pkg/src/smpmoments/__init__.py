"""Moments of hitting times and accumulated rewards for semi-Markov processes.

The core algorithm removes non-target states one at a time; the moments of
the hitting time can then be read from the transition moments of the reduced
model. Direct linear solves and Monte Carlo simulation serve as independent
oracles.
"""

from .direct import GreenMatrix, build_free_terms, green_matrix, green_moments, indicator_moments_direct, solve_moments
from .errors import (
    AbsorbingState,
    DuplicateState,
    EmptyTarget,
    HorizonMismatch,
    InactiveState,
    MalformedDocument,
    MissingFinalTarget,
    MissingLowerMoments,
    NegativeMoment,
    OrderOutOfRange,
    OrderZeroMismatch,
    ReachabilityError,
    RowSumViolation,
    SingularMixSystem,
    SingularSystem,
    SmpError,
    TargetExclusion,
    TruncationExceeded,
    UnhittableDomain,
    UnreachableTarget,
    UnreachableTargetSet,
    ValidationError,
    WeightOutOfRange,
)
from .extensions import (
    BivariateModel,
    IndicatorMomentTable,
    PairEmbedding,
    TimeEmbedding,
    embed_place_dependent,
    embed_time_dependent,
    indicator_moments,
    load_bivariate,
    load_time_dependent,
    merge_targets,
    mixed_moments,
    place_dependent_moments,
    reassemble,
    scalarize,
    time_dependent_moments,
)
from .mc import (
    DistributionSpec,
    Exponential,
    Mixture,
    Point,
    SimulationResult,
    simulate_hitting,
    simulate_place_dependent,
    simulate_time_dependent,
    verify_consistency,
)
from .model import MomentTable, SmpModel, check_reachability, dump_model, load_model, to_document
from .reduction import ReducedModel, ReductionTrace, exclude_state, hitting_moments, reduce_sequence, reduce_to
from .scalar import FLOAT, RATIONAL

__version__ = "0.1.0"


def example_path():
    """Path of the bundled four-state example model."""
    from importlib import resources

    return resources.files(__name__).joinpath("data/four_state.json")
