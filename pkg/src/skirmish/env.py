"""Cooperative multi-agent control surface over the battle engine.

Each agent owns one allied unit.  The discrete action set is
[noop, stop, moveN, moveE, moveS, moveW, target1..targetK] with
K = number of enemies; target slots address enemies for damage dealers
and allied team ids for healers.  Movement uses screen-style axes:
north is -y, south is +y, east is +x, west is -x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine
from .engine import Command, EngineConfig, GameState, StepEvents
from .errors import InvariantViolation, UnavailableAction, WrongActionCount
from .scenario import Faction, Scenario, canonical_reference, load_scenario
from .units import CombatType

DEFAULT_SIGHT_RANGE = 9.0
DEFAULT_TARGETING_RANGE = 6.0

N_FIXED_ACTIONS = 6  # noop, stop, and the four cardinal moves

# (dx, dy) per cardinal move, in N/E/S/W action order.
_DIRECTIONS = ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0))


@dataclass(frozen=True)
class RewardConfig:
    kill_bonus: float = 10.0
    win_bonus: float = 200.0
    scale: float = 20.0

    def denominator(self, scenario: Scenario) -> float:
        total = 0.0
        for g in scenario.groups:
            if g.faction is not Faction.ENEMY:
                continue
            for ref, count in g.units:
                ut = scenario.unit_types[canonical_reference(ref)]
                shield = ut.shield if scenario.enemy_has_shields else 0.0
                total += count * (ut.hp + shield)
        return total + self.kill_bonus * scenario.num_enemy_units + self.win_bonus

    def compute(self, damage_dealt: float, kills: int, won: bool, denominator: float) -> float:
        bonus = self.kill_bonus * kills + (self.win_bonus if won else 0.0)
        return (damage_dealt + bonus) / denominator * self.scale


def obs_layout_size(n_allies: int, n_enemies: int, ally_shields: bool,
                    enemy_shields: bool, num_unit_types: int) -> int:
    se = 1 if enemy_shields else 0
    sa = 1 if ally_shields else 0
    t = num_unit_types
    return 4 + n_enemies * (4 + se + t) + (n_allies - 1) * (5 + sa + t) + (1 + sa + t)


def state_layout_size(n_allies: int, n_enemies: int, ally_shields: bool,
                      enemy_shields: bool, num_unit_types: int) -> int:
    se = 1 if enemy_shields else 0
    sa = 1 if ally_shields else 0
    t = num_unit_types
    n_actions = N_FIXED_ACTIONS + n_enemies
    return (n_allies * (4 + sa + t) + n_enemies * (3 + se + t)
            + n_allies * n_actions)


class SkirmishEnv:
    """The environment facade with the standard multi-agent calling surface."""

    def __init__(self, scenario: Scenario | str | Path, seed: int | None = None,
                 sight_range: float = DEFAULT_SIGHT_RANGE,
                 targeting_range: float = DEFAULT_TARGETING_RANGE,
                 engine_config: EngineConfig | None = None,
                 reward_config: RewardConfig | None = None):
        if not isinstance(scenario, Scenario):
            scenario = load_scenario(scenario)
        self.scenario = scenario
        self.sight_range = sight_range
        self.targeting_range = targeting_range
        self.engine_config = engine_config or EngineConfig()
        self.reward_config = reward_config or RewardConfig()

        self.n_agents = scenario.num_allied_units
        self.n_enemies = scenario.num_enemy_units
        self.n_actions = N_FIXED_ACTIONS + self.n_enemies
        self.episode_limit = scenario.episode_limit

        ally_healer = any(
            scenario.unit_types[ref].combat_type is CombatType.HEALING
            for g in scenario.groups if g.faction is Faction.ALLY
            for ref, _ in g.units
        )
        if ally_healer and self.n_agents > self.n_enemies:
            raise InvariantViolation(
                "healer target actions cannot address all allies: "
                "n_allies exceeds n_enemies"
            )

        self._denominator = self.reward_config.denominator(scenario)
        self._seed = seed if seed is not None else 0
        self._state: GameState | None = None
        self._allies: list = []
        self._enemies: list = []
        self._steps = 0
        self._terminated = False
        self._last_actions: np.ndarray = np.zeros(self.n_agents, dtype=np.int64)
        self._closed = False

    # -- lifecycle ---------------------------------------------------------

    def reset(self, seed: int | None = None):
        """Start a fresh episode; returns (per-agent observations, state)."""
        if seed is not None:
            self._seed = seed
        self._state = engine.reset(self.scenario, self._seed, self.engine_config)
        self._allies = self._state.allies()
        self._enemies = self._state.enemies()
        self._steps = 0
        self._terminated = False
        self._last_actions = np.zeros(self.n_agents, dtype=np.int64)
        return self.get_obs(), self.get_state()

    def close(self) -> None:
        self._closed = True
        self._state = None

    @property
    def game_state(self) -> GameState:
        if self._state is None:
            raise InvariantViolation("environment must be reset before use")
        return self._state

    # -- acting ------------------------------------------------------------

    def step(self, actions) -> tuple[float, bool, dict]:
        """Run one environment step; returns (reward, terminated, info)."""
        state = self.game_state
        actions = [int(a) for a in actions]
        if len(actions) != self.n_agents:
            raise WrongActionCount(
                f"expected {self.n_agents} actions, got {len(actions)}"
            )
        masks = self.get_avail_actions()
        commands = []
        for agent_id, action in enumerate(actions):
            if action < 0 or action >= self.n_actions or not masks[agent_id][action]:
                raise UnavailableAction(
                    f"agent {agent_id} chose unavailable action {action}"
                )
            commands.append(self._decode_action(agent_id, action))

        events = engine.env_step(state, commands)
        self._steps += 1
        self._last_actions = np.asarray(actions, dtype=np.int64)

        reward = self._compute_reward(events)
        enemies_alive = sum(1 for u in self._enemies if u.alive)
        allies_alive = sum(1 for u in self._allies if u.alive)
        won = enemies_alive == 0
        timeout = self._steps >= self.episode_limit
        terminated = won or allies_alive == 0 or timeout
        self._terminated = terminated
        info = {
            "battle_won": won,
            "dead_allies": self.n_agents - allies_alive,
            "dead_enemies": self.n_enemies - enemies_alive,
            "timeout": timeout and not won and allies_alive > 0,
        }
        return reward, terminated, info

    def _decode_action(self, agent_id: int, action: int) -> Command:
        unit = self._allies[agent_id]
        if action == 0:
            return Command.noop()
        if action == 1:
            return Command.stop()
        if action < N_FIXED_ACTIONS:
            dx, dy = _DIRECTIONS[action - 2]
            step = self.engine_config.move_step
            return Command.move((unit.x + dx * step, unit.y + dy * step))
        slot = action - N_FIXED_ACTIONS
        if unit.type.combat_type is CombatType.HEALING:
            target = self._allies[slot]
        else:
            target = self._enemies[slot]
        return Command.target(target.id)

    def _compute_reward(self, events: StepEvents) -> float:
        dealt = 0.0
        kills = 0
        for entry in events.ledger:
            if entry.target_faction is Faction.ENEMY:
                dealt += entry.shield_damage + entry.health_damage
                if entry.kill:
                    kills += 1
        # Enemy deaths not caused by an attack (self-destructs) still pay
        # the elimination bonus.
        kills = max(kills, events.enemy_deaths)
        won = all(not u.alive for u in self._enemies)
        return self.reward_config.compute(dealt, kills, won, self._denominator)

    # -- availability masks --------------------------------------------------

    def get_avail_actions(self) -> list[list[int]]:
        return [self.get_avail_agent_actions(i) for i in range(self.n_agents)]

    def get_avail_agent_actions(self, agent_id: int) -> list[int]:
        state = self.game_state
        unit = self._allies[agent_id]
        mask = [0] * self.n_actions
        if not unit.alive:
            mask[0] = 1
            return mask
        mask[1] = 1
        step = self.engine_config.move_step
        for j, (dx, dy) in enumerate(_DIRECTIONS):
            if self.scenario.walkable_at(unit.x + dx * step, unit.y + dy * step):
                mask[2 + j] = 1
        healer = unit.type.combat_type is CombatType.HEALING
        if healer:
            candidates = self._allies
        else:
            candidates = self._enemies
        for slot in range(self.n_enemies):
            if slot >= len(candidates):
                break
            v = candidates[slot]
            if not v.alive:
                continue
            if healer and (v.id == unit.id
                           or v.type.combat_type is CombatType.HEALING):
                continue
            if not unit.type.can_target(v.type.plane):
                continue
            if math.hypot(v.x - unit.x, v.y - unit.y) <= self.targeting_range:
                mask[N_FIXED_ACTIONS + slot] = 1
        return mask

    # -- observations --------------------------------------------------------

    def get_obs_size(self) -> int:
        return obs_layout_size(self.n_agents, self.n_enemies,
                               self.scenario.ally_has_shields,
                               self.scenario.enemy_has_shields,
                               self.scenario.num_unit_types)

    def get_state_size(self) -> int:
        return state_layout_size(self.n_agents, self.n_enemies,
                                 self.scenario.ally_has_shields,
                                 self.scenario.enemy_has_shields,
                                 self.scenario.num_unit_types)

    def get_obs(self) -> list[np.ndarray]:
        return [self.get_obs_agent(i) for i in range(self.n_agents)]

    def _type_onehot(self, unit) -> np.ndarray | None:
        t = self.scenario.num_unit_types
        if t == 0:
            return None
        onehot = np.zeros(t)
        onehot[self.scenario.unit_type_ids[unit.type_ref]] = 1.0
        return onehot

    def get_obs_agent(self, agent_id: int) -> np.ndarray:
        state = self.game_state
        vec = np.zeros(self.get_obs_size(), dtype=np.float64)
        me = self._allies[agent_id]
        if not me.alive:
            return vec
        sight = self.sight_range
        t = self.scenario.num_unit_types
        se = 1 if self.scenario.enemy_has_shields else 0
        sa = 1 if self.scenario.ally_has_shields else 0

        step = self.engine_config.move_step
        for j, (dx, dy) in enumerate(_DIRECTIONS):
            if self.scenario.walkable_at(me.x + dx * step, me.y + dy * step):
                vec[j] = 1.0

        offset = 4
        enemy_block = 4 + se + t
        for slot, v in enumerate(self._enemies):
            base = offset + slot * enemy_block
            dist = math.hypot(v.x - me.x, v.y - me.y)
            if not v.alive or dist > sight:
                continue
            attackable = (me.type.can_target(v.type.plane)
                          and dist <= self.targeting_range
                          and me.type.combat_type is not CombatType.HEALING)
            vec[base] = 1.0 if attackable else 0.0
            vec[base + 1] = dist / sight
            vec[base + 2] = (v.x - me.x) / sight
            vec[base + 3] = (v.y - me.y) / sight
            pos = base + 4
            if se:
                vec[pos] = v.shield / v.max_shield if v.max_shield else 0.0
                pos += 1
            if t:
                vec[pos + self.scenario.unit_type_ids[v.type_ref]] = 1.0
        offset += self.n_enemies * enemy_block

        ally_block = 5 + sa + t
        slot = 0
        for v in self._allies:
            if v.id == me.id:
                continue
            base = offset + slot * ally_block
            slot += 1
            dist = math.hypot(v.x - me.x, v.y - me.y)
            if not v.alive or dist > sight:
                continue
            vec[base] = 1.0
            vec[base + 1] = dist / sight
            vec[base + 2] = (v.x - me.x) / sight
            vec[base + 3] = (v.y - me.y) / sight
            vec[base + 4] = v.health / v.type.hp
            pos = base + 5
            if sa:
                vec[pos] = v.shield / v.max_shield if v.max_shield else 0.0
                pos += 1
            if t:
                vec[pos + self.scenario.unit_type_ids[v.type_ref]] = 1.0
        offset += (self.n_agents - 1) * ally_block

        vec[offset] = me.health / me.type.hp
        pos = offset + 1
        if sa:
            vec[pos] = me.shield / me.max_shield if me.max_shield else 0.0
            pos += 1
        if t:
            vec[pos + self.scenario.unit_type_ids[me.type_ref]] = 1.0
        return vec

    def get_state(self) -> np.ndarray:
        state = self.game_state
        vec = np.zeros(self.get_state_size(), dtype=np.float64)
        t = self.scenario.num_unit_types
        se = 1 if self.scenario.enemy_has_shields else 0
        sa = 1 if self.scenario.ally_has_shields else 0
        half_w = self.scenario.width / 2.0
        half_h = self.scenario.height / 2.0

        offset = 0
        ally_block = 4 + sa + t
        for v in self._allies:
            base = offset
            offset += ally_block
            if not v.alive:
                continue
            vec[base] = v.health / v.type.hp
            max_cd = v.type.cooldown
            vec[base + 1] = v.cooldown_remaining / max_cd if max_cd > 0 else 0.0
            vec[base + 2] = (v.x - half_w) / half_w
            vec[base + 3] = (v.y - half_h) / half_h
            pos = base + 4
            if sa:
                vec[pos] = v.shield / v.max_shield if v.max_shield else 0.0
                pos += 1
            if t:
                vec[pos + self.scenario.unit_type_ids[v.type_ref]] = 1.0

        enemy_block = 3 + se + t
        for v in self._enemies:
            base = offset
            offset += enemy_block
            if not v.alive:
                continue
            vec[base] = v.health / v.type.hp
            vec[base + 1] = (v.x - half_w) / half_w
            vec[base + 2] = (v.y - half_h) / half_h
            pos = base + 3
            if se:
                vec[pos] = v.shield / v.max_shield if v.max_shield else 0.0
                pos += 1
            if t:
                vec[pos + self.scenario.unit_type_ids[v.type_ref]] = 1.0

        for agent_id in range(self.n_agents):
            vec[offset + int(self._last_actions[agent_id])] = 1.0
            offset += self.n_actions
        return vec

    # -- metadata -------------------------------------------------------------

    def get_env_info(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "n_actions": self.n_actions,
            "obs_shape": self.get_obs_size(),
            "state_shape": self.get_state_size(),
            "episode_limit": self.episode_limit,
        }
