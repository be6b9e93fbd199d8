"""Deterministic fixed-timestep battle simulator.

One environment step runs eight game steps; each game step lasts 1/16 s
for velocity, cooldown, and regeneration purposes and consists of four
phases run to completion for all units before the next begins: target
cleanup, preferred-velocity declaration, collision-avoidance adjustment,
and execution in a per-step shuffled order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .collision import CollisionState, Disc, step_velocities
from .scenario import Faction, Scenario, place_groups
from .spatial import build_point_index, query_points
from .units import CombatType, Plane, TargeterKind, UnitType

GAME_STEP_SECONDS = 1.0 / 16.0
GAME_STEPS_PER_ENV_STEP = 8
COLLISION_HORIZON = 1.0


@dataclass(frozen=True)
class EngineConfig:
    """Combat constants not fixed by the scenario format."""

    shield_regen_delay: float = 10.0   # seconds without damage before shields regrow
    shield_regen_rate: float = 2.0     # shield points per second
    energy_regen_rate: float = 0.5625  # energy points per second
    heal_rate: float = 9.0             # health points per second
    energy_per_heal: float = 1.0 / 3.0  # energy spent per health healed
    move_step: float = 2.0             # grid units per cardinal move order


class CommandKind(Enum):
    NOOP = "noop"
    STOP = "stop"
    MOVE = "move"
    TARGET = "target"
    ATTACK_MOVE = "attack_move"


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    point: tuple[float, float] | None = None
    target_id: int | None = None

    @staticmethod
    def noop() -> "Command":
        return Command(CommandKind.NOOP)

    @staticmethod
    def stop() -> "Command":
        return Command(CommandKind.STOP)

    @staticmethod
    def move(point: tuple[float, float]) -> "Command":
        return Command(CommandKind.MOVE, point=point)

    @staticmethod
    def target(unit_id: int) -> "Command":
        return Command(CommandKind.TARGET, target_id=unit_id)

    @staticmethod
    def attack_move(point: tuple[float, float]) -> "Command":
        return Command(CommandKind.ATTACK_MOVE, point=point)


class Unit:
    __slots__ = (
        "id", "team_id", "faction", "type", "type_ref", "x", "y", "vx", "vy",
        "pvx", "pvy", "health", "shield", "max_shield", "energy",
        "cooldown_remaining", "command", "target", "attacking_declared",
        "was_attacking", "last_damaged_at", "attackers_last_step",
        "attackers_this_step", "alive", "effective_max_speed",
    )

    def __init__(self, uid: int, team_id: int, faction: Faction, type_ref: str,
                 unit_type: UnitType, position: tuple[float, float], has_shields: bool):
        self.id = uid
        self.team_id = team_id
        self.faction = faction
        self.type = unit_type
        self.type_ref = type_ref
        self.x, self.y = position
        self.vx = 0.0
        self.vy = 0.0
        self.pvx = 0.0
        self.pvy = 0.0
        self.health = unit_type.hp
        self.max_shield = unit_type.shield if has_shields else 0.0
        self.shield = self.max_shield
        self.energy = unit_type.initial_energy
        self.cooldown_remaining = 0.0
        self.command = Command.stop()
        self.target: int | None = None
        self.attacking_declared = False
        self.was_attacking = False
        self.last_damaged_at = -(10 ** 9)
        self.attackers_last_step: set[int] = set()
        self.attackers_this_step: set[int] = set()
        self.alive = True
        self.effective_max_speed = unit_type.speed

    @property
    def radius(self) -> float:
        return self.type.radius


@dataclass
class LedgerEntry:
    attacker: int
    target: int
    target_faction: Faction
    shield_damage: float
    health_damage: float
    kill: bool


@dataclass
class StepEvents:
    """Aggregate of the damage ledger and deaths across one env step."""

    ledger: list[LedgerEntry] = field(default_factory=list)
    ally_deaths: int = 0
    enemy_deaths: int = 0


class GameState:
    def __init__(self, scenario: Scenario, seed: int, config: EngineConfig | None = None):
        self.scenario = scenario
        self.config = config or EngineConfig()
        self.rng = random.Random(seed)
        self.seed = seed
        self.step_counter = 0
        self.units: list[Unit] = []
        self.by_id: dict[int, Unit] = {}
        self.recorder: Callable[["GameState", list[LedgerEntry]], None] | None = None

        placements = place_groups(scenario)
        allies = [p for p in placements if p.faction is Faction.ALLY]
        enemies = [p for p in placements if p.faction is Faction.ENEMY]
        uid = 0
        for group, faction in ((allies, Faction.ALLY), (enemies, Faction.ENEMY)):
            for team_id, placement in enumerate(group):
                unit = Unit(uid, team_id, faction, placement.reference,
                            placement.unit_type, placement.position,
                            scenario.has_shields(faction))
                self.units.append(unit)
                self.by_id[uid] = unit
                uid += 1

        self.r_max = max(u.radius for u in self.units)
        rects = [(float(r.x), float(r.y), float(r.xmax), float(r.ymax))
                 for r in scenario.obstacles]
        self.collision = CollisionState(rects, tau=COLLISION_HORIZON,
                                        dt=GAME_STEP_SECONDS, r_max=self.r_max)
        for u in self.units:
            self.collision.add(Disc(u.id, u.x, u.y, u.radius, u.type.speed, u.type.plane))

        # The opponent's single standing order, never changed afterwards.
        for u in self.units:
            if u.faction is Faction.ENEMY:
                u.command = Command.attack_move(scenario.attack_point)

    def allies(self) -> list[Unit]:
        return [u for u in self.units if u.faction is Faction.ALLY]

    def enemies(self) -> list[Unit]:
        return [u for u in self.units if u.faction is Faction.ENEMY]

    def living(self) -> list[Unit]:
        return [u for u in self.units if u.alive]


def reset(scenario: Scenario, seed: int, config: EngineConfig | None = None) -> GameState:
    """Fresh episode state: allies stopped, enemies attack-moving."""
    return GameState(scenario, seed, config)


def env_step(state: GameState, commands: list[Command]) -> StepEvents:
    """Assign one command per ally team slot, then run eight game steps."""
    allies = state.allies()
    assert len(commands) == len(allies)
    for unit, command in zip(allies, commands):
        if unit.alive:
            unit.command = command
    events = StepEvents()
    for _ in range(GAME_STEPS_PER_ENV_STEP):
        game_step(state, events)
    return events


def game_step(state: GameState, events: StepEvents) -> None:
    state.step_counter += 1
    living = state.living()
    for u in living:
        u.was_attacking = u.attacking_declared
        u.attacking_declared = False

    phase_target_cleanup(state, living)
    point_index = build_point_index((u.id, u.x, u.y) for u in living)
    phase_velocity_preparation(state, living, point_index)
    phase_velocity_adjustment(state, living, point_index)
    step_ledger_start = len(events.ledger)
    phase_execute(state, living, events)

    for u in living:
        u.attackers_last_step = u.attackers_this_step
        u.attackers_this_step = set()
    if state.recorder is not None:
        state.recorder(state, events.ledger[step_ledger_start:])


def _boundary_distance(a: Unit, b: Unit) -> float:
    return math.hypot(b.x - a.x, b.y - a.y) - a.radius - b.radius


def _in_attack_range(a: Unit, b: Unit) -> bool:
    # Boundary-to-boundary; the boundary itself counts as in range.
    return math.hypot(b.x - a.x, b.y - a.y) <= a.radius + a.type.attack_range + b.radius


def phase_target_cleanup(state: GameState, living: list[Unit]) -> None:
    """Drop or retain targets before anyone declares a velocity."""
    for u in living:
        kind = u.command.kind
        if kind in (CommandKind.NOOP, CommandKind.STOP, CommandKind.MOVE):
            u.target = None
        elif kind is CommandKind.TARGET:
            commanded = state.by_id[u.command.target_id]
            u.target = commanded.id if commanded.alive else None
        elif kind is CommandKind.ATTACK_MOVE and u.target is not None:
            target = state.by_id[u.target]
            if not target.alive:
                u.target = None
            elif target.id in u.attackers_last_step:
                pass  # never dropped while it fought back last step
            elif not _in_attack_range(u, target):
                u.target = None


def phase_velocity_preparation(state: GameState, living: list[Unit], point_index) -> None:
    """Each unit declares its preferred velocity for this game step."""
    for u in living:
        u.effective_max_speed = u.type.speed
        kind = u.command.kind
        if kind in (CommandKind.NOOP, CommandKind.STOP):
            u.pvx = u.pvy = 0.0
        elif kind is CommandKind.MOVE:
            _prefer_move(u, u.command.point)
        elif kind is CommandKind.TARGET:
            if u.target is None:
                u.pvx = u.pvy = 0.0
            else:
                _prefer_engage(u, state.by_id[u.target])
        elif kind is CommandKind.ATTACK_MOVE:
            _select_attack_move_target(state, u, living, point_index)
            if u.target is not None:
                _prefer_engage(u, state.by_id[u.target])
            else:
                _prefer_move(u, u.command.point)


def _prefer_move(u: Unit, point: tuple[float, float]) -> None:
    dx = point[0] - u.x
    dy = point[1] - u.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        u.pvx = u.pvy = 0.0
    else:
        speed = u.effective_max_speed
        u.pvx = dx * speed / dist
        u.pvy = dy * speed / dist


def _prefer_engage(u: Unit, target: Unit) -> None:
    if _in_attack_range(u, target):
        u.attacking_declared = True
        u.pvx = u.pvy = 0.0
    else:
        _prefer_move(u, (target.x, target.y))


def _select_attack_move_target(state: GameState, u: Unit, living: list[Unit],
                               point_index) -> None:
    scan = u.type.minimum_scan_range
    near_ids = query_points(point_index, (u.x, u.y), scan)
    if u.type.combat_type is CombatType.HEALING:
        # Healers re-pick the neediest ally each step and pace themselves
        # to the slowest ally in scan range.
        best: Unit | None = None
        slowest = u.type.speed
        for nid in near_ids:
            v = state.by_id[int(nid)]
            if v.faction is not u.faction or not v.alive:
                continue
            if v.id != u.id and v.type.speed < slowest:
                slowest = v.type.speed
            if v.id == u.id or v.type.combat_type is CombatType.HEALING:
                continue
            if not u.type.can_target(v.type.plane):
                continue
            if v.health < v.type.hp or v.was_attacking:
                if best is None or v.health < best.health:
                    best = v
        u.effective_max_speed = slowest
        u.target = best.id if best is not None else None
        return

    current = state.by_id[u.target] if u.target is not None else None
    current_is_priority = (current is not None
                           and current.type.combat_type is CombatType.HEALING)
    if current is not None and current_is_priority:
        return
    best = None
    best_d = math.inf
    best_priority = False
    for nid in near_ids:
        v = state.by_id[int(nid)]
        if v.faction is u.faction or not v.alive:
            continue
        if not u.type.can_target(v.type.plane):
            continue
        priority = v.type.combat_type is CombatType.HEALING
        d = math.hypot(v.x - u.x, v.y - u.y)
        if (priority, -d) > (best_priority, -best_d):
            best, best_d, best_priority = v, d, priority
    if current is not None:
        # Keep the current target unless a priority target is in reach.
        if best is not None and best_priority:
            u.target = best.id
        return
    u.target = best.id if best is not None else None


def phase_velocity_adjustment(state: GameState, living: list[Unit], point_index) -> None:
    """Resolve preferred velocities into collision-free actual velocities."""
    discs = []
    for u in living:
        disc = state.collision.disc(u.id)
        disc.x = u.x
        disc.y = u.y
        disc.vx = u.vx
        disc.vy = u.vy
        disc.pvx = u.pvx
        disc.pvy = u.pvy
        disc.max_speed = u.effective_max_speed
        disc.is_static = u.pvx == 0.0 and u.pvy == 0.0
        discs.append(disc)
    velocities = step_velocities(discs, state.collision.obstacles, point_index,
                                 COLLISION_HORIZON, GAME_STEP_SECONDS, state.r_max)
    for u, (vx, vy) in zip(living, velocities):
        u.vx = vx
        u.vy = vy


def phase_execute(state: GameState, living: list[Unit], events: StepEvents) -> None:
    """Move, tick timers, regenerate, and resolve attacks in random order."""
    order = list(living)
    state.rng.shuffle(order)
    cfg = state.config
    delay_steps = int(round(cfg.shield_regen_delay / GAME_STEP_SECONDS))
    for u in order:
        if not u.alive:
            continue  # eliminated earlier in this pass
        u.x += u.vx * GAME_STEP_SECONDS
        u.y += u.vy * GAME_STEP_SECONDS
        if u.cooldown_remaining > 0.0:
            u.cooldown_remaining = max(0.0, u.cooldown_remaining - GAME_STEP_SECONDS)
        if u.type.hp_regen > 0.0 and u.health < u.type.hp:
            u.health = min(u.type.hp, u.health + u.type.hp_regen * GAME_STEP_SECONDS)
        if u.type.energy > 0.0 and u.energy < u.type.energy:
            u.energy = min(u.type.energy, u.energy + cfg.energy_regen_rate * GAME_STEP_SECONDS)
        if (u.max_shield > 0.0 and u.shield < u.max_shield
                and state.step_counter - u.last_damaged_at >= delay_steps):
            u.shield = min(u.max_shield, u.shield + cfg.shield_regen_rate * GAME_STEP_SECONDS)

        kind = u.command.kind
        actionable = (kind is CommandKind.TARGET
                      or (kind is CommandKind.ATTACK_MOVE and u.target is not None))
        if actionable and u.attacking_declared and u.cooldown_remaining == 0.0 \
                and u.target is not None:
            target = state.by_id[u.target]
            if target.alive:
                execute_targeter(state, u, target, events)
            # A target killed earlier in the pass fizzles the attack and
            # spends no cooldown.


def execute_targeter(state: GameState, attacker: Unit, target: Unit,
                     events: StepEvents) -> None:
    kind = attacker.type.targeter
    if kind is TargeterKind.STANDARD:
        apply_attack(state, attacker, target, events)
    elif kind is TargeterKind.HEAL:
        apply_heal(state, attacker, target)
    elif kind is TargeterKind.KAMIKAZE:
        blast = attacker.type.targeter_kwargs["radius"]
        victims = [v for v in state.units
                   if v.alive and v.faction is not attacker.faction
                   and math.hypot(v.x - attacker.x, v.y - attacker.y)
                   <= blast + attacker.radius + v.radius]
        for v in sorted(victims, key=lambda v: v.id):
            apply_attack(state, attacker, v, events)
        _kill(state, attacker, events)
    elif kind is TargeterKind.LASER_BEAM:
        width = attacker.type.targeter_kwargs["width"]
        height = attacker.type.targeter_kwargs["height"]
        ax = target.x - attacker.x
        ay = target.y - attacker.y
        norm = math.hypot(ax, ay)
        if norm < 1e-12:
            ax, ay = 1.0, 0.0
        else:
            ax, ay = ax / norm, ay / norm
        # Beam rectangle centered on the target, long side perpendicular
        # to the attacker-target axis.
        px, py = -ay, ax
        for v in sorted(state.units, key=lambda v: v.id):
            if not v.alive or v.faction is attacker.faction:
                continue
            qx = v.x - target.x
            qy = v.y - target.y
            du = qx * px + qy * py
            dv = qx * ax + qy * ay
            cu = min(max(du, -width / 2.0), width / 2.0)
            cv = min(max(dv, -height / 2.0), height / 2.0)
            if math.hypot(du - cu, dv - cv) <= v.radius:
                apply_attack(state, attacker, v, events)


def apply_attack(state: GameState, attacker: Unit, target: Unit,
                 events: StepEvents) -> None:
    """One volley: shields absorb first, armor reduces the health portion."""
    for _ in range(attacker.type.attacks):
        if not target.alive:
            break
        raw = attacker.type.damage
        for attr, bonus in attacker.type.bonuses.items():
            if attr in target.type.attributes:
                raw += bonus
        shield_damage = min(target.shield, raw)
        target.shield -= shield_damage
        remainder = raw - shield_damage
        health_damage = 0.0
        if remainder > 0.0:
            health_damage = min(target.health, max(0.0, remainder - target.type.armor))
            target.health -= health_damage
        kill = target.health <= 0.0
        events.ledger.append(LedgerEntry(attacker.id, target.id, target.faction,
                                         shield_damage, health_damage, kill))
        target.last_damaged_at = state.step_counter
        target.attackers_this_step.add(attacker.id)
        if kill:
            _kill(state, target, events)
    attacker.cooldown_remaining = attacker.type.cooldown


def apply_heal(state: GameState, healer: Unit, target: Unit) -> None:
    """Heal up to the per-step rate, limited by the deficit and energy."""
    cfg = state.config
    healed = min(cfg.heal_rate * GAME_STEP_SECONDS,
                 target.type.hp - target.health,
                 healer.energy / cfg.energy_per_heal)
    if healed > 0.0:
        target.health += healed
        healer.energy -= healed * cfg.energy_per_heal


def _kill(state: GameState, unit: Unit, events: StepEvents) -> None:
    if not unit.alive:
        return
    unit.alive = False
    unit.health = 0.0
    unit.vx = 0.0
    unit.vy = 0.0
    unit.command = Command.noop()
    unit.target = None
    unit.attacking_declared = False
    state.collision.remove(unit.id)
    if unit.faction is Faction.ALLY:
        events.ally_deaths += 1
    else:
        events.enemy_deaths += 1


def replay_header(state: GameState) -> dict:
    s = state.scenario
    return {
        "kind": "header",
        "scenario": s.name,
        "seed": state.seed,
        "width": s.width,
        "height": s.height,
        "obstacles": [[r.x, r.y, r.w, r.h] for r in s.obstacles],
        "units": [[u.id, u.radius, u.faction.value, u.type.hp] for u in state.units],
    }


def replay_record(state: GameState, ledger: list[LedgerEntry]) -> dict:
    return {
        "kind": "frame",
        "t": state.step_counter,
        "units": [[u.id, u.x, u.y, u.health, u.shield, u.energy,
                   u.cooldown_remaining, 1 if u.alive else 0]
                  for u in state.units],
        "ledger": [[e.attacker, e.target, e.shield_damage, e.health_damage,
                    1 if e.kill else 0] for e in ledger],
    }
