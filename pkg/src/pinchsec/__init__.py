"""Secure multicast beamforming for pinching-antenna systems: channel models,
transmit and pinching beamforming optimizers, fixed-array baselines, and a
Monte-Carlo experiment harness."""

__version__ = "0.1.0"

from .config import (PinchingLayout, Scenario, SystemConfig, dbm_to_watt, make_config,
                     random_feasible_layout, validate_layout, watt_to_dbm)
from .channel import ChannelSet, effective_channel, scenario_channels
from .metrics import SecrecyReport, covariance_min_rate, min_rate, secrecy_report
from .txbf_single import DinkelbachParams, dinkelbach_admm, sdr_single_group
from .pinch_single import ao_single_group
from .multigroup import ao_multigroup, mm_pinch_update, mm_sdr_txbf_update, socp_txbf_update
from .baselines import baseline_optimize, make_ula, ula_channels

__all__ = [
    "PinchingLayout", "Scenario", "SystemConfig", "dbm_to_watt", "watt_to_dbm",
    "make_config", "random_feasible_layout", "validate_layout",
    "ChannelSet", "effective_channel", "scenario_channels",
    "SecrecyReport", "covariance_min_rate", "min_rate", "secrecy_report",
    "DinkelbachParams", "dinkelbach_admm", "sdr_single_group",
    "ao_single_group", "ao_multigroup", "mm_pinch_update",
    "mm_sdr_txbf_update", "socp_txbf_update",
    "baseline_optimize", "make_ula", "ula_channels",
    "__version__",
]
