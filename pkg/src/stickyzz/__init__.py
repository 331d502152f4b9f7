"""Original, latent and Hamiltonian sticky zig-zag samplers for spike-and-slab regression."""
from .diagnostics import (
    EssReport,
    Trajectory,
    ess,
    ess_report,
    extract_samples,
    regenerative_variance,
    statistic_set,
    time_average,
)
from .events import EventKind, EventTime, boundary_hit, first_arrival_linear, momentum_zero_time
from .experiments import ExperimentConfig, compare, generate_data, run_experiment
from .hamiltonian import HzzState, integrate, run_chain, run_hzz
from .latent import LatentState, run_latent, simulate_latent, simulate_scaled, sticking_time_distribution
from .model import (
    LatentGeometry,
    SpikeSlabModel,
    build_model,
    collapse,
    expand,
    potential,
    potential_gradient,
    ray_slope,
)
from .sticky import StickyState, run_sticky, simulate_sticky, stationary_check

__version__ = "0.1.0"
