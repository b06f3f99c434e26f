"""Independent brute-force and Monte-Carlo verifiers.

Nothing in this package reuses the closed forms it checks, beyond comparing
against them in the emitted reports.
"""

from .allocation_grid import allocation_grid_oracle
from .ba import ba_rate_distortion, fit_rate_distortion
from .frontier import gw_frontier_estimate
from .mc import mc_scaled_sum, mc_shared_component
from .quantize import QuantizedInstance, quantize_gaussian
from .report import OracleReport

__all__ = [
    "OracleReport",
    "QuantizedInstance",
    "allocation_grid_oracle",
    "ba_rate_distortion",
    "fit_rate_distortion",
    "gw_frontier_estimate",
    "mc_scaled_sum",
    "mc_shared_component",
    "quantize_gaussian",
]
