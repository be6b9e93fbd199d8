import math

import numpy as np
import pytest

from conftest import build_scenario, group, scenario_doc, unit_doc
from skirmish.env import RewardConfig, SkirmishEnv, obs_layout_size, state_layout_size
from skirmish.errors import InvariantViolation, UnavailableAction, WrongActionCount


def pacifist(**over):
    base = unit_doc(damage=0.0, minimum_scan_range=0.0, speed=0.0)
    base.update(over)
    return base


def micro_env(**env_over):
    """2v2 with exactly known positions: allies (10,10),(10,14);
    enemies (13,10),(10,24)."""
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"u": 1}), group(10, 14, "ALLY", {"u": 1}),
         group(13, 10, "ENEMY", {"u": 1}), group(10, 24, "ENEMY", {"u": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"u": unit_doc(hp=10.0, damage=2.0, speed=2.0,
                                           size=1.0, cooldown=1.0)})
    env = SkirmishEnv(s, seed=0, **env_over)
    env.reset(0)
    return env


def test_layout_formulas_against_hand_computed():
    assert obs_layout_size(10, 11, False, False, 0) == 94
    assert state_layout_size(10, 11, False, False, 0) == 243
    assert obs_layout_size(8, 8, True, True, 2) == 120
    assert state_layout_size(8, 8, True, True, 2) == 216


def test_micro_env_shapes_and_info():
    env = micro_env()
    info = env.get_env_info()
    assert info == {"n_agents": 2, "n_actions": 8, "obs_shape": 18,
                    "state_shape": 30, "episode_limit": 150}


def test_golden_observation_vector():
    env = micro_env()
    obs = env.get_obs_agent(0)
    expected = np.zeros(18)
    expected[0:4] = 1.0                      # all four moves open
    expected[4] = 1.0                        # enemy 0 attackable
    expected[5] = 3.0 / 9.0                  # distance / sight
    expected[6] = 3.0 / 9.0                  # rel x / sight
    expected[7] = 0.0                        # rel y / sight
    # enemy 1 out of sight: indices 8..11 stay zero
    expected[12] = 1.0                       # ally visible
    expected[13] = 4.0 / 9.0
    expected[14] = 0.0
    expected[15] = 4.0 / 9.0
    expected[16] = 1.0                       # ally health
    expected[17] = 1.0                       # own health
    assert np.array_equal(obs, expected)


def test_golden_state_vector():
    env = micro_env()
    state = env.get_state()
    expected = np.zeros(30)
    expected[0:4] = [1.0, 0.0, -0.375, -0.375]       # ally 0
    expected[4:8] = [1.0, 0.0, -0.375, -0.125]       # ally 1
    expected[8:11] = [1.0, -0.1875, -0.375]          # enemy 0
    expected[11:14] = [1.0, -0.375, 0.5]             # enemy 1
    expected[14] = 1.0                               # agent 0 last action noop
    expected[22] = 1.0                               # agent 1 last action noop
    assert np.array_equal(state, expected)


def test_mask_golden():
    env = micro_env()
    # Agent 0 at (10,10): enemy 0 at distance 3, enemy 1 at 14.
    assert env.get_avail_agent_actions(0) == [0, 1, 1, 1, 1, 1, 1, 0]
    # Agent 1 at (10,14): enemy 0 at distance 5, enemy 1 at 10.
    assert env.get_avail_agent_actions(1) == [0, 1, 1, 1, 1, 1, 1, 0]


def test_mask_near_map_edge():
    doc = scenario_doc(
        [group(1, 1, "ALLY", {"u": 1}), group(20, 20, "ENEMY", {"u": 1})],
        attack_point=(1, 1),
    )
    s = build_scenario(doc, {"u": unit_doc(size=1.0)})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    # moveN and moveW leave the map from (1,1); moveE and moveS stay in.
    assert env.get_avail_agent_actions(0)[:6] == [0, 1, 0, 1, 1, 0]


def test_mask_blocked_by_wall():
    terrain = ["_" * 32] * 32
    terrain[10] = "_" * 12 + "X" + "_" * 19  # cell (12, 10) blocked
    doc = scenario_doc(
        [group(10, 10.5, "ALLY", {"u": 1}), group(20, 20, "ENEMY", {"u": 1})],
        attack_point=(10, 10.5), terrain=terrain,
    )
    s = build_scenario(doc, {"u": unit_doc(size=1.0)})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    # moveE destination (12, 10.5) falls in the blocked cell.
    assert env.get_avail_agent_actions(0)[:6] == [0, 1, 1, 0, 1, 1]


def test_dead_agent_noop_only_and_zero_obs():
    sniper = unit_doc(damage=100.0, attack_range=10.0, minimum_scan_range=100.0)
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"v": 1}), group(13, 10, "ENEMY", {"s": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"v": pacifist(hp=20.0), "s": sniper})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    reward, terminated, info = env.step([1])
    assert terminated  # the enemy sniper killed the lone pacifist ally
    assert not info["battle_won"]
    assert env.get_avail_agent_actions(0) == [1, 0, 0, 0, 0, 0, 0]
    assert not env.get_obs_agent(0).any()


def test_unavailable_action_raises():
    env = micro_env()
    with pytest.raises(UnavailableAction):
        env.step([0, 1])  # noop is unavailable while alive
    with pytest.raises(UnavailableAction):
        env.step([1, 7])  # enemy 1 is out of targeting range
    with pytest.raises(WrongActionCount):
        env.step([1])


def test_healer_scenario_rejected_when_allies_exceed_enemies():
    medic = pacifist(combat_type="HEALING", targeter="HEAL", energy=10,
                     initial_energy=10)
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"m": 1}), group(12, 10, "ALLY", {"u": 2}),
         group(20, 20, "ENEMY", {"u": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"m": medic, "u": unit_doc()})
    with pytest.raises(InvariantViolation):
        SkirmishEnv(s, seed=0)


# -- rewards -------------------------------------------------------------------


def two_enemy_sniper_env():
    sniper = unit_doc(damage=45.0, attack_range=5.0, cooldown=1.0, speed=0.0,
                      minimum_scan_range=0.0)
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"s": 1}),
         group(13, 10, "ENEMY", {"d": 1}),
         group(26, 10, "ENEMY", {"d": 1})],
        attack_point=(10, 10), episode_limit=400,
    )
    s = build_scenario(doc, {"s": sniper, "d": pacifist(hp=45.0, speed=1.0)})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    return env


def test_reward_denominator_310_example():
    env = two_enemy_sniper_env()
    assert env.reward_config.denominator(env.scenario) == 310.0
    reward, terminated, info = env.step([6])  # kill enemy 0 with exactly 45
    assert reward == pytest.approx((45.0 + 10.0) / 310.0 * 20.0, abs=1e-9)
    assert not terminated


def test_full_sweep_returns_exactly_twenty():
    env = two_enemy_sniper_env()
    total = 0.0
    terminated = False
    steps = 0
    while not terminated:
        steps += 1
        assert steps < 400
        mask = env.get_avail_agent_actions(0)
        if mask[6]:
            action = 6
        elif mask[7]:
            action = 7
        else:
            action = 1  # wait for the marching enemy to come into range
        reward, terminated, info = env.step([action])
        total += reward
    assert info["battle_won"]
    assert total == pytest.approx(20.0, abs=1e-9)


def test_healing_pushes_return_above_twenty():
    sniper = unit_doc(hp=500.0, damage=10.0, attack_range=10.0, cooldown=2.0,
                      speed=0.0, minimum_scan_range=0.0)
    medic = pacifist(hp=20.0, combat_type="HEALING", targeter="HEAL",
                     energy=200.0, initial_energy=200.0, attack_range=5.0,
                     minimum_scan_range=100.0)
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"s": 1}),
         group(14, 10, "ENEMY", {"d": 1}),
         group(15, 10, "ENEMY", {"m": 1})],
        attack_point=(10, 10), episode_limit=300,
    )
    s = build_scenario(doc, {"s": sniper, "d": pacifist(hp=50.0), "m": medic})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    denominator = (50.0 + 20.0) + 2 * 10.0 + 200.0
    assert env.reward_config.denominator(env.scenario) == denominator

    dealt = 0.0
    total = 0.0
    # Whittle the dummy while the enemy medic heals it back, then clean up.
    for _ in range(24):
        reward, terminated, _ = env.step([6])
        total += reward
    d = env.game_state.enemies()[0]
    assert d.alive and d.health > 0.0
    terminated = False
    while not terminated:
        mask = env.get_avail_agent_actions(0)
        action = 7 if mask[7] else 6
        reward, terminated, info = env.step([action])
        total += reward
    assert info["battle_won"]
    ledger_total = 20.0 + 10.0 * 2 + 200.0  # pools + bonuses, before healing
    assert total > 20.0
    # The excess over 20 is exactly the healed amount scaled by the reward.
    healed = total / 20.0 * denominator - (70.0 + 20.0 + 200.0)
    assert healed > 1.0


def test_reward_formula_arithmetic():
    rc = RewardConfig()
    assert rc.compute(45.0 + 0.0, 1, False, 310.0) == pytest.approx(
        55.0 / 310.0 * 20.0, abs=1e-12)
    # Healed 30 then killed both: return exceeds 20 by 30/310*20.
    assert rc.compute(120.0, 2, True, 310.0) == pytest.approx(
        340.0 / 310.0 * 20.0, abs=1e-12)
    assert rc.compute(120.0, 2, True, 310.0) - 20.0 == pytest.approx(
        30.0 / 310.0 * 20.0, abs=1e-9)


def test_no_contact_step_rewards_zero():
    env = micro_env()
    before = [(u.x, u.y) for u in env.game_state.allies()]
    reward, terminated, info = env.step([1, 1])
    assert reward == 0.0 and not terminated
    # Stopped allies hold position; only the enemies drift on their order.
    assert [(u.x, u.y) for u in env.game_state.allies()] == before


def test_move_action_advances_two_grid_units_per_order():
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"u": 1}), group(28, 28, "ENEMY", {"u": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"u": unit_doc(speed=2.0, size=1.0)})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    unit = env.game_state.allies()[0]
    env.step([3])  # moveE: destination x + 2, half a second of travel
    assert unit.x == pytest.approx(11.0, abs=1e-9)
    assert unit.y == pytest.approx(10.0, abs=1e-9)
    env.step([2])  # moveN from the new position
    assert unit.x == pytest.approx(11.0, abs=1e-9)
    assert unit.y == pytest.approx(9.0, abs=1e-9)


def test_healer_target_action_heals_the_indexed_ally():
    medic = pacifist(combat_type="HEALING", targeter="HEAL", energy=200.0,
                     initial_energy=200.0, attack_range=4.0,
                     minimum_scan_range=0.0)
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"m": 1}), group(12, 10, "ALLY", {"a": 1}),
         group(24, 24, "ENEMY", {"e": 1}), group(26, 24, "ENEMY", {"e": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"m": medic, "a": pacifist(hp=50.0),
                             "e": pacifist()})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    healer, patient = env.game_state.allies()
    patient.health = 20.0
    mask = env.get_avail_agent_actions(0)
    # Slot 1 addresses ally team id 1; the healer itself (slot 0) is illegal.
    assert mask[6] == 0 and mask[7] == 1
    env.step([7, 1])
    # Healing runs every game step of the env step at 9 hp/s; energy refills
    # at the regen rate once below the cap (7 of the 8 steps here).
    assert patient.health == pytest.approx(20.0 + 8 * 9.0 / 16.0, abs=1e-9)
    spent = 8 * (9.0 / 16.0) / 3.0
    regen = 7 * 0.5625 / 16.0
    assert healer.energy == pytest.approx(200.0 - spent + regen, abs=1e-9)


# -- zeroing and ranges ---------------------------------------------------------


def test_out_of_sight_perturbation_leaves_obs_identical():
    def build(enemy1_pos):
        doc = scenario_doc(
            [group(10, 10, "ALLY", {"u": 1}), group(10, 14, "ALLY", {"u": 1}),
             group(13, 10, "ENEMY", {"u": 1}),
             group(enemy1_pos[0], enemy1_pos[1], "ENEMY", {"u": 1})],
            attack_point=(10, 10),
        )
        s = build_scenario(doc, {"u": unit_doc(hp=10.0, speed=2.0, size=1.0)})
        env = SkirmishEnv(s, seed=0)
        env.reset(0)
        return env

    a = build((10, 24))
    b = build((24, 26))
    assert np.array_equal(a.get_obs_agent(0), b.get_obs_agent(0))


def test_enemy_exactly_at_sight_range_is_visible():
    doc = scenario_doc(
        [group(10, 10, "ALLY", {"u": 1}), group(19, 10, "ENEMY", {"u": 1})],
        attack_point=(10, 10),
    )
    s = build_scenario(doc, {"u": unit_doc(size=1.0)})
    env = SkirmishEnv(s, seed=0)
    env.reset(0)
    obs = env.get_obs_agent(0)
    assert obs[5] == 1.0  # distance exactly sight_range, normalized
    assert obs[4] == 0.0  # but beyond targeting range


def test_observation_and_state_ranges():
    env = micro_env()
    rng = np.random.default_rng(4)
    for _ in range(40):
        masks = env.get_avail_actions()
        actions = [int(rng.choice(np.nonzero(m)[0])) for m in masks]
        _, terminated, _ = env.step(actions)
        for vec in env.get_obs():
            assert (vec >= -1.0 - 1e-12).all() and (vec <= 1.0 + 1e-12).all()
        state = env.get_state()
        assert (state >= -1.0 - 1e-12).all() and (state <= 1.0 + 1e-12).all()
        if terminated:
            env.reset(0)


def test_previous_action_one_hot_in_state():
    env = micro_env()
    env.step([3, 1])
    state = env.get_state()
    base = 2 * 4 + 2 * 3
    agent0 = state[base:base + 8]
    agent1 = state[base + 8:base + 16]
    assert list(np.nonzero(agent0)[0]) == [3]
    assert list(np.nonzero(agent1)[0]) == [1]


def test_env_determinism_same_seed():
    def rollout():
        env = micro_env()
        rng = np.random.default_rng(12)
        out = []
        for _ in range(30):
            masks = env.get_avail_actions()
            actions = [int(rng.choice(np.nonzero(m)[0])) for m in masks]
            reward, terminated, _ = env.step(actions)
            out.append((reward, terminated, env.get_state().tobytes(),
                        b"".join(o.tobytes() for o in env.get_obs())))
            if terminated:
                break
        return out

    assert rollout() == rollout()


def test_masked_random_rollouts_never_raise_and_cap_return():
    doc = scenario_doc(
        [group(10, 12, "ALLY", {"m": 3}), group(20, 12, "ENEMY", {"m": 3})],
        attack_point=(10, 12), episode_limit=80,
    )
    s = build_scenario(doc, {"m": unit_doc(hp=45.0, damage=6.0, cooldown=0.61,
                                           speed=3.15, size=0.75,
                                           attack_range=5.0,
                                           minimum_scan_range=5.0)})
    env = SkirmishEnv(s, seed=0)
    rng = np.random.default_rng(99)
    for episode in range(15):
        env.reset(episode)
        total = 0.0
        terminated = False
        while not terminated:
            masks = env.get_avail_actions()
            actions = [int(rng.choice(np.nonzero(m)[0])) for m in masks]
            reward, terminated, _ = env.step(actions)
            total += reward
        assert total <= 20.0 + 1e-6
