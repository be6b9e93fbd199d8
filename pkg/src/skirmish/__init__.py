"""Deterministic 2D micro-combat environment for cooperative multi-agent RL."""

from .env import RewardConfig, SkirmishEnv, obs_layout_size, state_layout_size
from .engine import Command, CommandKind, EngineConfig
from .scenario import (
    Faction,
    Scenario,
    builtin_scenario_names,
    collapse_terrain,
    load_scenario,
    make_unit_loader,
    parse_scenario,
    place_groups,
    serialize_scenario,
)
from .units import (
    CombatType,
    Plane,
    TargeterKind,
    UnitType,
    builtin_unit_names,
    load_builtin_unit,
    parse_unit_type,
    serialize_unit_type,
)

__version__ = "0.1.0"

__all__ = [
    "Command",
    "CommandKind",
    "CombatType",
    "EngineConfig",
    "Faction",
    "Plane",
    "RewardConfig",
    "Scenario",
    "SkirmishEnv",
    "TargeterKind",
    "UnitType",
    "builtin_scenario_names",
    "builtin_unit_names",
    "collapse_terrain",
    "load_builtin_unit",
    "load_scenario",
    "make_unit_loader",
    "obs_layout_size",
    "parse_scenario",
    "parse_unit_type",
    "place_groups",
    "serialize_scenario",
    "serialize_unit_type",
    "state_layout_size",
    "__version__",
]
