"""Shared builders for unit types and miniature scenarios."""

from __future__ import annotations

import json

import pytest

from skirmish.scenario import Scenario, scenario_from_mapping
from skirmish.units import UnitType, unit_type_from_mapping


def unit_doc(**overrides) -> dict:
    """A plain single-target ground fighter; override what the test needs."""
    doc = {
        "hp": 50.0,
        "damage": 5.0,
        "cooldown": 1.0,
        "speed": 2.0,
        "size": 1.0,
        "attack_range": 3.0,
        "minimum_scan_range": 100.0,
        "valid_targets": ["GROUND", "AIR"],
    }
    doc.update(overrides)
    return doc


def make_unit(**overrides) -> UnitType:
    return unit_type_from_mapping(unit_doc(**overrides))


def scenario_doc(groups, *, width=32, height=32, attack_point=(8.0, 16.0),
                 terrain=None, **overrides) -> dict:
    n_ally = sum(sum(g["units"].values()) for g in groups if g["faction"] == "ALLY")
    n_enemy = sum(sum(g["units"].values()) for g in groups if g["faction"] == "ENEMY")
    doc = {
        "name": "test_scenario",
        "num_allied_units": n_ally,
        "num_enemy_units": n_enemy,
        "groups": groups,
        "attack_point": list(attack_point),
        "terrain": terrain if terrain is not None else ["_" * width] * height,
        "width": width,
        "height": height,
        "num_unit_types": 0,
        "unit_type_ids": {},
        "ally_has_shields": False,
        "enemy_has_shields": False,
    }
    doc.update(overrides)
    return doc


def group(x, y, faction, units) -> dict:
    return {"x": x, "y": y, "faction": faction, "units": units}


def build_scenario(doc: dict, unit_docs: dict[str, dict]) -> Scenario:
    """Assemble a scenario whose unit references resolve from a dict."""

    def loader(ref: str) -> UnitType:
        key = ref[:-5] if ref.endswith(".json") else ref
        return unit_type_from_mapping(unit_docs[key])

    return scenario_from_mapping(doc, loader)


# The example custom scenario and unit documents used across parse tests.
EXAMPLE_SCENARIO_TEXT = json.dumps({
    "name": "10m_vs_11m",
    "custom_unit_path": "units/custom",
    "num_allied_units": 10,
    "num_enemy_units": 11,
    "groups": [
        {"x": 9, "y": 16, "faction": "ALLY", "units": {"example_custom_unit": 10}},
        {"x": 23, "y": 16, "faction": "ENEMY", "units": {"example_custom_unit": 11}},
    ],
    "attack_point": [9, 16],
    "terrain_preset": "NARROW",
    "width": 32,
    "height": 32,
    "num_unit_types": 0,
    "ally_has_shields": False,
    "enemy_has_shields": False,
})

EXAMPLE_UNIT_TEXT = json.dumps({
    "hp": 45,
    "armor": 0,
    "damage": 6,
    "cooldown": 3,
    "speed": 3.15,
    "attack_range": 3,
    "size": 3,
    "attributes": ["LIGHT", "BIOLOGICAL"],
    "minimum_scan_range": 100,
    "valid_targets": ["GROUND", "AIR"],
})


@pytest.fixture
def example_unit_loader():
    from skirmish.units import parse_unit_type

    def loader(ref: str):
        assert ref == "example_custom_unit"
        return parse_unit_type(EXAMPLE_UNIT_TEXT)

    return loader
