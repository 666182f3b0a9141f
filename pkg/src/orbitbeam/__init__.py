"""Fixed-beam multibeam GEO downlink with massive planar arrays.

Analytic ergodic rates, Monte Carlo link simulation, MRT/ZF baselines and
scaling-law experiments.
"""
__version__ = "0.1.0"

from .analytic import (QuadratureConfig, ergodic_rate_multibeam_user1, ergodic_rate_single,
                       ideal_rate_multibeam, ideal_rate_single)
from .beams import Beam, BeamGrid, build_grid
from .fading import SR_SCENARIOS, ShadowedRicianParams
from .geometry import GroundPoint, SystemParams
from .link import MonteCarloConfig, RateEstimate, monte_carlo_rate

__all__ = [
    "Beam", "BeamGrid", "GroundPoint", "MonteCarloConfig", "QuadratureConfig", "RateEstimate",
    "SR_SCENARIOS", "ShadowedRicianParams", "SystemParams", "build_grid",
    "ergodic_rate_multibeam_user1", "ergodic_rate_single", "ideal_rate_multibeam",
    "ideal_rate_single", "monte_carlo_rate",
]
