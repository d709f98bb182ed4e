"""Behavioral simulator and reconfiguration planner for a three-way
load-modulated balanced amplifier (control amplifier plus two sequentially
activated balanced peaking amplifiers on a quadrature coupler)."""
from .devices import DeviceProfile, Region, RegionBoundaries, Role
from .engine import ArchitectureConfig, Mode, SweepResult, build_config, sweep
from .network import build_ideal_coupler, solve
from .phasefit import tl_phase_fit
from .reconfig import LoadCondition, ReconfigPlan, evaluate_plan, plan, vswr_circle

__all__ = [
    "ArchitectureConfig", "DeviceProfile", "LoadCondition", "Mode", "ReconfigPlan",
    "Region", "RegionBoundaries", "Role", "SweepResult", "build_config",
    "build_ideal_coupler", "evaluate_plan", "plan", "solve", "sweep",
    "tl_phase_fit", "vswr_circle",
]
__version__ = "0.1.0"
