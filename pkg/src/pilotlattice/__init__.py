"""Stochastic pilot-wave dynamics on a discrete space-time lattice.

Particle motion is a probability-conserving Markov chain over 1D lattice
lines whose per-step stochastic matrices minimize the ensemble-average
classical action.  The package builds double-slit wavefields from Fresnel
integrals, couples consecutive |field|^2 lines by the minimal (monotone)
optimal-transport matrix, samples reproducible trajectory ensembles, and
checks the structural consequences: no crossing transitions, minimal
stochasticity, and Wasserstein-distance identities.
"""

__version__ = "0.1.0"

from .lattice import (
    Grid1D,
    ProbabilityDistribution,
    TimeParameters,
    make_grid,
    normalize,
)
from .wavefield import (
    SlitGeometry,
    aperture_mask,
    boundary_weight_ratio,
    double_slit_amplitude,
    fresnel_c,
    fresnel_s,
    line_distribution,
    single_slit_amplitude,
)
from .transport import (
    CostMatrix,
    StochasticMatrix,
    TransportReport,
    average_action,
    brute_force_optimal,
    global_jump_matrix,
    minimal_stochastic_matrix,
    msd_report,
    quadratic_cost,
    relativistic_cost,
    wasserstein,
)
from .markov import (
    MarkovChain,
    Trajectory,
    TrajectoryEnsemble,
    build_chain,
    path_probability,
    run_ensemble,
    sample_trajectory,
)
from .analysis import (
    CrossingPair,
    TransitionNet,
    backward_reachable,
    find_crossing_pairs,
    rebin_distribution,
    screen_histogram,
    transition_net,
    tv_distance,
    uncross,
)
from .config import ExperimentConfig, load_config, load_preset, preset_names
from .cli import run_experiment, verify_config

__all__ = [
    "Grid1D", "ProbabilityDistribution", "TimeParameters", "make_grid",
    "normalize",
    "SlitGeometry", "aperture_mask", "boundary_weight_ratio",
    "double_slit_amplitude", "fresnel_c", "fresnel_s", "line_distribution",
    "single_slit_amplitude",
    "CostMatrix", "StochasticMatrix", "TransportReport", "average_action",
    "brute_force_optimal", "global_jump_matrix", "minimal_stochastic_matrix",
    "msd_report", "quadratic_cost", "relativistic_cost", "wasserstein",
    "MarkovChain", "Trajectory", "TrajectoryEnsemble", "build_chain",
    "path_probability", "run_ensemble", "sample_trajectory",
    "CrossingPair", "TransitionNet", "backward_reachable",
    "find_crossing_pairs", "rebin_distribution", "screen_histogram",
    "transition_net", "tv_distance", "uncross",
    "ExperimentConfig", "load_config", "load_preset", "preset_names",
    "run_experiment", "verify_config",
]
