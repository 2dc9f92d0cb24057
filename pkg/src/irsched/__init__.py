"""Joint IRS configuration and OFDMA resource-block scheduling under a reconfiguration budget."""
from .channel import ChannelSet, InvalidGeometryError, UeDrop, drop_ues, los_probability, synthesize_channels, ula_steering
from .config import GaParams, ScenarioConfig
from .irs import (Codebook, InsufficientTrainingDataError, IrsConfiguration, build_codebook, circular_distance,
                  map_to_codebook, optimal_continuous_config, quantize_config)
from .rate import RateTable, achievable_rate, build_rate_table
from .sched import (AssignmentGrid, TooLargeError, configuration_assignment, da, exhaustive, ga, gmax,
                    sum_rate, uoscbc, validate)

__version__ = "0.1.0"
