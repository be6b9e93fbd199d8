"""Scenario parsing, terrain handling, and initial unit placement."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import (
    BadTypeIdMap,
    GroupCountMismatch,
    InvalidEnum,
    InvariantViolation,
    MalformedDocument,
    MissingField,
    PlacementOverflow,
    TerrainDimensionMismatch,
    UnresolvableUnitType,
)
from .units import UnitType, load_builtin_unit, parse_unit_type, serialize_unit_type

DEFAULT_EPISODE_LIMIT = 150

UnitLoader = Callable[[str], UnitType]


class Faction(Enum):
    ALLY = "ALLY"
    ENEMY = "ENEMY"


class Rect(NamedTuple):
    """Axis-aligned rectangle in grid cells: x is the column, y the row."""

    x: int
    y: int
    w: int
    h: int

    @property
    def xmax(self) -> int:
        return self.x + self.w

    @property
    def ymax(self) -> int:
        return self.y + self.h


@dataclass(frozen=True)
class UnitGroup:
    x: float
    y: float
    faction: Faction
    # Ordered (reference, count) pairs; declaration order is meaningful.
    units: tuple[tuple[str, int], ...]

    def total(self) -> int:
        return sum(c for _, c in self.units)


@dataclass
class Scenario:
    name: str
    num_allied_units: int
    num_enemy_units: int
    groups: list[UnitGroup]
    attack_point: tuple[float, float]
    width: int
    height: int
    terrain_walkable: np.ndarray  # bool[height][width], True = walkable
    obstacles: list[Rect]
    ally_has_shields: bool
    enemy_has_shields: bool
    num_unit_types: int
    unit_type_ids: dict[str, int]
    unit_types: dict[str, UnitType]  # canonical reference -> parsed type
    custom_unit_path: str | None = None
    episode_limit: int = DEFAULT_EPISODE_LIMIT

    def has_shields(self, faction: Faction) -> bool:
        return self.ally_has_shields if faction is Faction.ALLY else self.enemy_has_shields

    def type_id(self, reference: str) -> int:
        return self.unit_type_ids[canonical_reference(reference)]

    def walkable_at(self, x: float, y: float) -> bool:
        if not (0.0 <= x < self.width and 0.0 <= y < self.height):
            return False
        return bool(self.terrain_walkable[int(y), int(x)])


class Placement(NamedTuple):
    faction: Faction
    reference: str
    unit_type: UnitType
    position: tuple[float, float]


def canonical_reference(reference: str) -> str:
    """Identity key for a unit type reference; `x` and `x.json` are the same."""
    return reference[:-5] if reference.endswith(".json") else reference


def _is_builtin_name(reference: str) -> bool:
    return reference == reference.upper() and "/" not in reference and "." not in reference


def make_unit_loader(custom_unit_path: str | None = None,
                     base_dir: str | Path | None = None) -> UnitLoader:
    """Loader resolving uppercase built-in names and JSON file paths.

    For file references the custom unit path is prepended and the .json
    extension reattached when missing.
    """

    def load(reference: str) -> UnitType:
        if _is_builtin_name(reference):
            return load_builtin_unit(reference)
        rel = canonical_reference(reference) + ".json"
        if custom_unit_path:
            rel = os.path.join(custom_unit_path, rel)
        path = Path(base_dir) / rel if base_dir is not None else Path(rel)
        try:
            text = path.read_text()
        except OSError as exc:
            raise UnresolvableUnitType(f"cannot read unit type file {path}: {exc}") from None
        return parse_unit_type(text)

    return load


def parse_terrain_rows(rows: list[str], width: int, height: int) -> np.ndarray:
    if len(rows) != height or any(len(r) != width for r in rows):
        raise TerrainDimensionMismatch(
            f"terrain must be {height} rows of {width} characters"
        )
    walkable = np.empty((height, width), dtype=bool)
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            if ch == "_":
                walkable[r, c] = True
            elif ch == "X":
                walkable[r, c] = False
            else:
                raise InvalidEnum(f"terrain cell {ch!r} at row {r} col {c} (expected _ or X)")
    return walkable


def load_terrain_preset(name: str) -> list[str]:
    pkg = resources.files("skirmish.data.terrain")
    try:
        text = (pkg / f"{name.lower()}.json").read_text()
    except (FileNotFoundError, KeyError):
        raise InvalidEnum(f"unknown terrain preset {name!r}") from None
    return json.loads(text)["rows"]


def collapse_terrain(blocked) -> list[Rect]:
    """Collapse blocked grid cells into disjoint axis-aligned rectangles.

    Row-major horizontal strips are merged vertically when consecutive rows
    carry a strip with the same column span, which makes the output
    deterministic.  The rectangle union equals the blocked cell set exactly.
    """
    grid = np.asarray(blocked, dtype=bool)
    if grid.size == 0:
        return []
    height, width = grid.shape
    out: list[Rect] = []
    # open strips from the previous row: (x_start, x_end) -> y_start
    open_strips: dict[tuple[int, int], int] = {}
    for r in range(height):
        runs = []
        c = 0
        row = grid[r]
        while c < width:
            if row[c]:
                start = c
                while c < width and row[c]:
                    c += 1
                runs.append((start, c))
            else:
                c += 1
        next_open: dict[tuple[int, int], int] = {}
        for span in runs:
            if span in open_strips:
                next_open[span] = open_strips.pop(span)
            else:
                next_open[span] = r
        for (x0, x1), y0 in open_strips.items():
            out.append(Rect(x0, y0, x1 - x0, r - y0))
        open_strips = next_open
    for (x0, x1), y0 in open_strips.items():
        out.append(Rect(x0, y0, x1 - x0, height - y0))
    out.sort(key=lambda rect: (rect.y, rect.x))
    return out


def parse_scenario(text: str, unit_loader: UnitLoader) -> Scenario:
    """Parse a scenario JSON document, resolving unit types via the loader."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("scenario document must be a JSON object")
    return scenario_from_mapping(doc, unit_loader)


def scenario_from_mapping(doc: dict[str, Any], unit_loader: UnitLoader) -> Scenario:
    for name in ("name", "num_allied_units", "num_enemy_units", "groups",
                 "attack_point", "width", "height"):
        if name not in doc:
            raise MissingField(f"scenario requires field {name!r}")
    if "terrain" not in doc and "terrain_preset" not in doc:
        raise MissingField("scenario requires terrain or terrain_preset")

    width = int(doc["width"])
    height = int(doc["height"])
    if width <= 0 or height <= 0:
        raise InvariantViolation("width and height must be positive")

    rows = doc["terrain"] if "terrain" in doc else load_terrain_preset(str(doc["terrain_preset"]))
    walkable = parse_terrain_rows(list(rows), width, height)

    groups: list[UnitGroup] = []
    for gi, g in enumerate(doc["groups"]):
        for key in ("x", "y", "faction", "units"):
            if key not in g:
                raise MissingField(f"group {gi} requires field {key!r}")
        try:
            faction = Faction(g["faction"])
        except ValueError:
            raise InvalidEnum(f"group {gi}: unknown faction {g['faction']!r}") from None
        units = tuple((str(ref), int(count)) for ref, count in g["units"].items())
        if any(count < 1 for _, count in units) or not units:
            raise InvariantViolation(f"group {gi}: unit counts must be >= 1")
        gx, gy = float(g["x"]), float(g["y"])
        if not (0 <= gx <= width and 0 <= gy <= height):
            raise InvariantViolation(f"group {gi}: center outside map bounds")
        groups.append(UnitGroup(gx, gy, faction, units))

    declared = {Faction.ALLY: int(doc["num_allied_units"]),
                Faction.ENEMY: int(doc["num_enemy_units"])}
    if declared[Faction.ALLY] < 1 or declared[Faction.ENEMY] < 1:
        raise InvariantViolation("unit counts must be >= 1")
    for faction in Faction:
        total = sum(g.total() for g in groups if g.faction is faction)
        if total != declared[faction]:
            raise GroupCountMismatch(
                f"{faction.value} groups sum to {total}, declared {declared[faction]}"
            )

    unit_types: dict[str, UnitType] = {}
    for g in groups:
        for ref, _ in g.units:
            key = canonical_reference(ref)
            if key in unit_types:
                continue
            try:
                unit_types[key] = unit_loader(ref)
            except UnresolvableUnitType:
                raise
            except Exception as exc:
                raise UnresolvableUnitType(f"cannot resolve unit type {ref!r}: {exc}") from None

    num_unit_types = int(doc.get("num_unit_types", 0))
    raw_ids = doc.get("unit_type_ids", {})
    unit_type_ids = {canonical_reference(str(k)): int(v) for k, v in raw_ids.items()}
    if len(unit_type_ids) != len(raw_ids):
        raise BadTypeIdMap("unit_type_ids contains duplicate references")
    if len(unit_type_ids) != num_unit_types:
        raise BadTypeIdMap(
            f"unit_type_ids has {len(unit_type_ids)} entries, num_unit_types is {num_unit_types}"
        )
    if num_unit_types > 0:
        if set(unit_type_ids.values()) != set(range(num_unit_types)):
            raise BadTypeIdMap("unit type ids must be exactly 0..num_unit_types-1")
        missing = [k for k in unit_types if k not in unit_type_ids]
        if missing:
            raise BadTypeIdMap(f"participating unit types missing from unit_type_ids: {missing}")

    ap = doc["attack_point"]
    if not (isinstance(ap, (list, tuple)) and len(ap) == 2):
        raise MalformedDocument("attack_point must be [x, y]")

    return Scenario(
        name=str(doc["name"]),
        num_allied_units=declared[Faction.ALLY],
        num_enemy_units=declared[Faction.ENEMY],
        groups=groups,
        attack_point=(float(ap[0]), float(ap[1])),
        width=width,
        height=height,
        terrain_walkable=walkable,
        obstacles=collapse_terrain(~walkable),
        ally_has_shields=bool(doc.get("ally_has_shields", False)),
        enemy_has_shields=bool(doc.get("enemy_has_shields", False)),
        num_unit_types=num_unit_types,
        unit_type_ids=unit_type_ids,
        unit_types=unit_types,
        custom_unit_path=doc.get("custom_unit_path"),
        episode_limit=int(doc.get("episode_limit", DEFAULT_EPISODE_LIMIT)),
    )


def serialize_scenario(s: Scenario) -> dict[str, Any]:
    rows = ["".join("_" if s.terrain_walkable[r, c] else "X" for c in range(s.width))
            for r in range(s.height)]
    doc: dict[str, Any] = {
        "name": s.name,
        "num_allied_units": s.num_allied_units,
        "num_enemy_units": s.num_enemy_units,
        "groups": [
            {"x": g.x, "y": g.y, "faction": g.faction.value,
             "units": {ref: count for ref, count in g.units}}
            for g in s.groups
        ],
        "attack_point": list(s.attack_point),
        "terrain": rows,
        "width": s.width,
        "height": s.height,
        "num_unit_types": s.num_unit_types,
        "unit_type_ids": dict(s.unit_type_ids),
        "ally_has_shields": s.ally_has_shields,
        "enemy_has_shields": s.enemy_has_shields,
        "episode_limit": s.episode_limit,
    }
    if s.custom_unit_path is not None:
        doc["custom_unit_path"] = s.custom_unit_path
    return doc


def place_groups(scenario: Scenario) -> list[Placement]:
    """Lay each group out on a square lattice centered on the group position.

    The lattice pitch is the largest unit diameter in the group and fills
    row-major from the northwest corner.  Positions are clamped inside the
    map; any resulting overlap raises PlacementOverflow.
    """
    placements: list[Placement] = []
    for g in scenario.groups:
        refs: list[str] = []
        for ref, count in g.units:
            refs.extend([ref] * count)
        n = len(refs)
        pitch = max(scenario.unit_types[canonical_reference(ref)].size for ref, _ in g.units)
        side = math.isqrt(n)
        if side * side < n:
            side += 1
        x0 = g.x - (side - 1) / 2.0 * pitch
        y0 = g.y - (side - 1) / 2.0 * pitch
        for k, ref in enumerate(refs):
            ut = scenario.unit_types[canonical_reference(ref)]
            row, col = divmod(k, side)
            x = x0 + col * pitch
            y = y0 + row * pitch
            r = ut.radius
            if scenario.width < 2 * r or scenario.height < 2 * r:
                raise PlacementOverflow(f"unit of size {ut.size} cannot fit inside the map")
            x = min(max(x, r), scenario.width - r)
            y = min(max(y, r), scenario.height - r)
            placements.append(Placement(g.faction, canonical_reference(ref), ut, (x, y)))

    for i in range(len(placements)):
        xi, yi = placements[i].position
        ri = placements[i].unit_type.radius
        for j in range(i + 1, len(placements)):
            xj, yj = placements[j].position
            rj = placements[j].unit_type.radius
            if math.hypot(xi - xj, yi - yj) < ri + rj - 1e-9:
                raise PlacementOverflow(
                    f"initial positions {i} and {j} overlap after clamping"
                )
    return placements


def builtin_scenario_names() -> list[str]:
    pkg = resources.files("skirmish.data.scenarios")
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_scenario(source: str | Path, unit_loader: UnitLoader | None = None) -> Scenario:
    """Load a scenario by shipped name or filesystem path."""
    path = Path(source)
    base_dir: Path | None = None
    if path.suffix == ".json" or path.exists():
        text = path.read_text()
        base_dir = path.parent
    else:
        pkg = resources.files("skirmish.data.scenarios")
        try:
            text = (pkg / f"{source}.json").read_text()
        except (FileNotFoundError, KeyError):
            raise MissingField(f"no shipped scenario named {source!r}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"scenario is not valid JSON: {exc}") from None
    if unit_loader is None:
        unit_loader = make_unit_loader(doc.get("custom_unit_path"), base_dir)
    return scenario_from_mapping(doc, unit_loader)
