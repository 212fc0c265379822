from .experiment import SimResult, default_config, match_population, run_paradox_experiment
from .population import (
    InvalidConfig,
    Population,
    SimConfig,
    SingularSystem,
    apportion,
    calibrate_rates,
    generate_population,
    load_sim_config,
)
from .rng import SplitMix64

__all__ = [
    "InvalidConfig", "Population", "SimConfig", "SimResult", "SingularSystem", "SplitMix64",
    "apportion", "calibrate_rates", "default_config", "generate_population", "load_sim_config",
    "match_population", "run_paradox_experiment",
]
