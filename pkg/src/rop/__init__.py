"""Capacity solvers for a backscatter tag sharing spectrum with a primary link."""

from .errors import DegenerateChannel, Infeasible, NonConvergence, NoSignChange, RopError
from .model import (BlockDecision, ChannelSample, ChannelState, EnergyModel, Profile,
                    SystemParams)

__version__ = "0.1.0"

__all__ = [
    "BlockDecision",
    "ChannelSample",
    "ChannelState",
    "DegenerateChannel",
    "EnergyModel",
    "Infeasible",
    "NoSignChange",
    "NonConvergence",
    "Profile",
    "RopError",
    "SystemParams",
]
