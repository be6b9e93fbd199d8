"""Unit type definitions and the JSON codec for them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Any, Mapping

from .errors import InvalidEnum, InvariantViolation, MalformedDocument, MissingField

# Boundary-to-boundary range assigned to the MELEE sentinel, in grid units.
MELEE_RANGE = 0.1


class Plane(Enum):
    GROUND = "GROUND"
    AIR = "AIR"
    COLOSSUS = "COLOSSUS"


class CombatType(Enum):
    DAMAGE = "DAMAGE"
    HEALING = "HEALING"


class TargeterKind(Enum):
    STANDARD = "STANDARD"
    KAMIKAZE = "KAMIKAZE"
    LASER_BEAM = "LASER_BEAM"
    HEAL = "HEAL"


@dataclass(frozen=True)
class UnitType:
    """Static per-type combat attributes.

    Distances are in grid-square side lengths, times in seconds, and
    ``size`` is a diameter.  ``attack_range`` is measured boundary to
    boundary.
    """

    hp: float
    damage: float
    cooldown: float
    speed: float
    size: float
    hp_regen: float = 0.0
    shield: float = 0.0
    energy: float = 0.0
    initial_energy: float = 0.0
    combat_type: CombatType = CombatType.DAMAGE
    armor: float = 0.0
    attack_range: float = MELEE_RANGE
    melee: bool = False
    attacks: int = 1
    minimum_scan_range: float = 0.0
    plane: Plane = Plane.GROUND
    valid_targets: frozenset[Plane] = frozenset({Plane.GROUND, Plane.AIR})
    attributes: frozenset[str] = frozenset()
    bonuses: dict[str, float] = field(default_factory=dict)
    targeter: TargeterKind = TargeterKind.STANDARD
    targeter_kwargs: dict[str, float] = field(default_factory=dict)

    @property
    def radius(self) -> float:
        return self.size / 2.0

    def can_target(self, plane: Plane) -> bool:
        # All units may target the COLOSSUS plane regardless of valid_targets.
        return plane is Plane.COLOSSUS or plane in self.valid_targets


_REQUIRED_FIELDS = ("hp", "damage", "cooldown", "speed", "size")

_NON_NEGATIVE = (
    "hp", "hp_regen", "shield", "energy", "damage", "armor",
    "cooldown", "speed", "minimum_scan_range",
)


def _enum_value(enum_cls, raw, field_name: str):
    try:
        return enum_cls(raw)
    except ValueError:
        raise InvalidEnum(f"{field_name}: unknown value {raw!r}") from None


def unit_type_from_mapping(doc: Mapping[str, Any]) -> UnitType:
    for name in _REQUIRED_FIELDS:
        if name not in doc:
            raise MissingField(f"unit type requires field {name!r}")

    raw_range = doc.get("attack_range", "MELEE")
    melee = raw_range == "MELEE"
    attack_range = MELEE_RANGE if melee else float(raw_range)

    valid_targets = frozenset(
        _enum_value(Plane, p, "valid_targets") for p in doc.get("valid_targets", ["GROUND", "AIR"])
    )

    ut = UnitType(
        hp=float(doc["hp"]),
        damage=float(doc["damage"]),
        cooldown=float(doc["cooldown"]),
        speed=float(doc["speed"]),
        size=float(doc["size"]),
        hp_regen=float(doc.get("hp_regen", 0.0)),
        shield=float(doc.get("shield", 0.0)),
        energy=float(doc.get("energy", 0.0)),
        initial_energy=float(doc.get("initial_energy", 0.0)),
        combat_type=_enum_value(CombatType, doc.get("combat_type", "DAMAGE"), "combat_type"),
        armor=float(doc.get("armor", 0.0)),
        attack_range=attack_range,
        melee=melee,
        attacks=int(doc.get("attacks", 1)),
        minimum_scan_range=float(doc.get("minimum_scan_range", 0.0)),
        plane=_enum_value(Plane, doc.get("plane", "GROUND"), "plane"),
        valid_targets=valid_targets,
        attributes=frozenset(str(a) for a in doc.get("attributes", [])),
        bonuses={str(k): float(v) for k, v in doc.get("bonuses", {}).items()},
        targeter=_enum_value(TargeterKind, doc.get("targeter", "STANDARD"), "targeter"),
        targeter_kwargs={str(k): float(v) for k, v in doc.get("targeter_kwargs", {}).items()},
    )
    _check_invariants(ut)
    return ut


def _check_invariants(ut: UnitType) -> None:
    for name in _NON_NEGATIVE:
        if getattr(ut, name) < 0:
            raise InvariantViolation(f"{name} must be >= 0")
    if ut.size <= 0:
        raise InvariantViolation("size must be > 0")
    if ut.attacks < 1:
        raise InvariantViolation("attacks must be >= 1")
    if not ut.melee and ut.attack_range < 0:
        raise InvariantViolation("attack_range must be >= 0")
    if ut.initial_energy > ut.energy:
        raise InvariantViolation("initial_energy must not exceed energy")
    if ut.targeter is TargeterKind.KAMIKAZE and ut.targeter_kwargs.get("radius", 0.0) <= 0:
        raise InvariantViolation("KAMIKAZE targeter requires targeter_kwargs.radius > 0")
    if ut.targeter is TargeterKind.LASER_BEAM:
        if ut.targeter_kwargs.get("width", 0.0) <= 0 or ut.targeter_kwargs.get("height", 0.0) <= 0:
            raise InvariantViolation("LASER_BEAM targeter requires width > 0 and height > 0")
    if ut.combat_type is CombatType.HEALING and ut.targeter is not TargeterKind.HEAL:
        raise InvariantViolation("HEALING combat type requires the HEAL targeter")


def parse_unit_type(text: str) -> UnitType:
    """Parse a unit type JSON document.

    Raises MalformedDocument, MissingField, InvalidEnum, or
    InvariantViolation on bad input.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"unit type is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("unit type document must be a JSON object")
    return unit_type_from_mapping(doc)


def serialize_unit_type(ut: UnitType) -> dict[str, Any]:
    """Emit the exact JSON field layout accepted by parse_unit_type."""
    doc: dict[str, Any] = {
        "hp": ut.hp,
        "hp_regen": ut.hp_regen,
        "shield": ut.shield,
        "energy": ut.energy,
        "initial_energy": ut.initial_energy,
        "size": ut.size,
        "speed": ut.speed,
        "combat_type": ut.combat_type.value,
        "damage": ut.damage,
        "armor": ut.armor,
        "attack_range": "MELEE" if ut.melee else ut.attack_range,
        "attacks": ut.attacks,
        "cooldown": ut.cooldown,
        "minimum_scan_range": ut.minimum_scan_range,
        "plane": ut.plane.value,
        "valid_targets": sorted(p.value for p in ut.valid_targets),
        "attributes": sorted(ut.attributes),
        "bonuses": dict(sorted(ut.bonuses.items())),
        "targeter": ut.targeter.value,
        "targeter_kwargs": dict(sorted(ut.targeter_kwargs.items())),
    }
    return doc


def builtin_unit_names() -> list[str]:
    """Names of the unit types shipped as data files, in uppercase."""
    pkg = resources.files("skirmish.data.units")
    return sorted(p.name[:-5].upper() for p in pkg.iterdir() if p.name.endswith(".json"))


def load_builtin_unit(name: str) -> UnitType:
    pkg = resources.files("skirmish.data.units")
    try:
        text = (pkg / f"{name.lower()}.json").read_text()
    except (FileNotFoundError, KeyError):
        raise MissingField(f"no built-in unit type named {name!r}") from None
    return parse_unit_type(text)
