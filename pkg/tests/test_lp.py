import math
import random

import numpy as np
import pytest

from skirmish.collision import HalfPlane, solve_velocity

GRID_N = 2001


class GridOracle:
    """Brute-force optimum over a dense velocity grid, reused across cases."""

    def __init__(self, n=GRID_N):
        xs = np.linspace(-1.0, 1.0, n, dtype=np.float32)
        self.n = n
        self.ux, self.uy = np.meshgrid(xs, xs)
        self.unit_disc = self.ux * self.ux + self.uy * self.uy <= 1.0

    def cell(self, max_speed: float) -> float:
        return 2.0 * max_speed / (self.n - 1)

    def optimum(self, pref, max_speed, lines):
        """(velocity, distance) of the best feasible grid cell, or None."""
        feasible = self.unit_disc.copy()
        for line in lines:
            # cross(direction, v - point) >= 0 with v = max_speed * u
            a = np.float32(line.dx * max_speed)
            b = np.float32(-line.dy * max_speed)
            c = np.float32(line.dy * line.px - line.dx * line.py)
            feasible &= a * self.uy + b * self.ux + c >= 0.0
        if not feasible.any():
            return None
        dx = self.ux * max_speed - pref[0]
        dy = self.uy * max_speed - pref[1]
        dist2 = dx * dx + dy * dy
        dist2[~feasible] = np.inf
        k = int(np.argmin(dist2))
        i, j = divmod(k, self.n)
        v = (float(self.ux[i, j]) * max_speed, float(self.uy[i, j]) * max_speed)
        return v, math.dist(v, pref)


@pytest.fixture(scope="module")
def oracle():
    return GridOracle()


def random_instance(rng):
    max_speed = rng.uniform(0.5, 2.0)
    pref = (rng.uniform(-1.5, 1.5) * max_speed, rng.uniform(-1.5, 1.5) * max_speed)
    lines = []
    for _ in range(rng.randint(0, 8)):
        ang = rng.uniform(0, 2 * math.pi)
        rad = rng.uniform(0, 1.2) * max_speed
        pang = rng.uniform(0, 2 * math.pi)
        lines.append(HalfPlane(rad * math.cos(pang), rad * math.sin(pang),
                               math.cos(ang), math.sin(ang)))
    return pref, max_speed, lines


def feasible_margin(v, lines):
    return min((line.dx * (v[1] - line.py) - line.dy * (v[0] - line.px)
                for line in lines), default=0.0)


def test_no_lines_clips_preferred_to_disc():
    assert solve_velocity((0.3, 0.4), 1.0, [], 0) == (0.3, 0.4)
    vx, vy = solve_velocity((3.0, 4.0), 1.0, [], 0)
    assert (vx, vy) == pytest.approx((0.6, 0.8), abs=1e-12)


def test_line_through_preferred_is_not_binding():
    pref = (0.5, 0.0)
    line = HalfPlane(0.5, 0.0, 0.0, 1.0)  # passes through pref, feasible side x <= 0.5
    assert solve_velocity(pref, 1.0, [line], 0) == pref


def test_single_violated_line_projects():
    line = HalfPlane(0.0, 0.2, 1.0, 0.0)  # require vy >= 0.2
    vx, vy = solve_velocity((0.4, -0.5), 1.0, [line], 0)
    assert vy == pytest.approx(0.2, abs=1e-12)
    assert vx == pytest.approx(0.4, abs=1e-12)


def test_infeasible_pair_falls_back_to_least_penetration():
    up = HalfPlane(0.0, 1.0, 1.0, 0.0)    # vy >= 1
    down = HalfPlane(0.0, -1.0, -1.0, 0.0)  # vy <= -1
    vx, vy = solve_velocity((0.0, 0.0), 1.0, [up, down], 0)
    # Equal worst-case violation puts the result on the midline.
    assert vy == pytest.approx(0.0, abs=1e-9)


def test_obstacle_lines_stay_hard_in_fallback():
    wall = HalfPlane(0.0, 0.5, -1.0, 0.0, "OBSTACLE")  # vy <= 0.5, hard
    up = HalfPlane(0.0, 1.0, 1.0, 0.0)    # vy >= 1 (unit, soft)
    up2 = HalfPlane(0.0, 1.2, 1.0, 0.0)   # vy >= 1.2 (unit, soft)
    vx, vy = solve_velocity((0.0, 0.0), 2.0, [wall, up, up2], 1)
    assert vy <= 0.5 + 1e-9


def test_randomized_instances_match_grid_oracle(oracle):
    rng = random.Random(777)
    checked = 0
    while checked < 60:
        pref, max_speed, lines = random_instance(rng)
        best = oracle.optimum(pref, max_speed, lines)
        if best is None:
            continue
        _, grid_dist = best
        v = solve_velocity(pref, max_speed, lines, 0)
        lp_dist = math.dist(v, pref)
        assert feasible_margin(v, lines) >= -1e-9
        assert math.hypot(*v) <= max_speed + 1e-9
        assert lp_dist <= grid_dist + 1e-9
        assert grid_dist - lp_dist <= oracle.cell(max_speed) * math.sqrt(2.0)
        checked += 1
