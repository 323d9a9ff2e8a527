"""Measurement-only steering of a known qubit state toward a known pure target."""

__version__ = "0.1.0"

from .chain import (
    ChainResult,
    GainCheck,
    MeasurementChain,
    OptimizerConfig,
    chain_bruteforce,
    chain_value,
    check_gain_conditions,
    delta_gain,
    greedy_chain,
    optimize_chain,
    run_chain,
)
from .estimator import MeasurementSteering
from .qubit import (
    BasisAngles,
    DensityMatrix,
    FrameCoefficients,
    InvalidStateError,
    MeasurementBasis,
    PureState,
    TargetFrame,
    dephase,
    expectation,
    frame_coefficients,
    gamma_of,
    hs_distance,
    overlap,
    random_density,
    random_pure,
)
from .single_step import (
    SingleStepReport,
    TargetReachedError,
    haar_average_pmax,
    optimal_basis,
    optimal_overlap_closed,
    p_direct,
    p_max_closed,
    p_one_step,
    p_one_step_expanded,
    pure_optimal_overlap,
    r_coefficient,
    single_step_report,
)
from .stochastic import (
    PolarizerCascade,
    TrajectoryEstimate,
    cascade_as_chain,
    cascade_flux,
    equal_spacing_cascade,
    simulate_trajectories,
)
