import math
import random

import pytest

from skirmish.errors import DuplicateId, InvariantViolation
from skirmish.spatial import (
    build_point_index,
    build_rect_index,
    query_points,
    query_rects,
)


def _scan_points(points, center, radius):
    out = []
    for pid, x, y in points:
        dx = x - center[0]
        dy = y - center[1]
        if dx * dx + dy * dy <= radius * radius:
            out.append(pid)
    return sorted(out)


def _scan_rects(rects, center, radius):
    out = []
    for rid, xmin, ymin, xmax, ymax in rects:
        dx = max(xmin - center[0], center[0] - xmax, 0.0)
        dy = max(ymin - center[1], center[1] - ymax, 0.0)
        if dx * dx + dy * dy <= radius * radius:
            out.append(rid)
    return sorted(out)


def test_empty_index():
    idx = build_point_index([])
    assert list(query_points(idx, (0, 0), 10)) == []


def test_radius_zero_inclusive():
    idx = build_point_index([(3, 1.0, 2.0), (4, 1.5, 2.0)])
    assert list(query_points(idx, (1.0, 2.0), 0.0)) == [3]


def test_duplicate_coordinates_distinct_ids():
    idx = build_point_index([(1, 5.0, 5.0), (9, 5.0, 5.0)])
    assert list(query_points(idx, (5.0, 5.0), 1.0)) == [1, 9]


def test_duplicate_ids_rejected():
    with pytest.raises(DuplicateId):
        build_point_index([(1, 0.0, 0.0), (1, 1.0, 1.0)])


def test_negative_radius_rejected():
    idx = build_point_index([(0, 0.0, 0.0)])
    with pytest.raises(InvariantViolation):
        query_points(idx, (0, 0), -1.0)


def test_center_out_of_reach():
    idx = build_point_index([(0, 0.0, 0.0), (1, 1.0, 0.0)])
    assert list(query_points(idx, (100.0, 100.0), 5.0)) == []


def test_rect_contains_center():
    idx = build_rect_index([(7, 0.0, 0.0, 4.0, 4.0)])
    assert list(query_rects(idx, (2.0, 2.0), 0.0)) == [7]


def test_rect_edge_inclusive():
    idx = build_rect_index([(0, 0.0, 0.0, 4.0, 4.0)])
    assert list(query_rects(idx, (4.0, 2.0), 0.0)) == [0]
    assert list(query_rects(idx, (4.0 + 1e-9, 2.0), 0.0)) == []


def test_rect_bad_bounds_rejected():
    with pytest.raises(InvariantViolation):
        build_rect_index([(0, 2.0, 0.0, 1.0, 4.0)])


def test_randomized_queries_match_linear_scan():
    rng = random.Random(991)
    for trial in range(500):
        n = rng.randint(0, 60)
        points = [(i, rng.uniform(-20, 20), rng.uniform(-20, 20)) for i in range(n)]
        idx = build_point_index(points)
        for _ in range(2):
            center = (rng.uniform(-25, 25), rng.uniform(-25, 25))
            radius = rng.uniform(0, 15)
            assert list(query_points(idx, center, radius)) == \
                _scan_points(points, center, radius)


def test_randomized_rect_queries_match_brute_force():
    rng = random.Random(992)
    for trial in range(500):
        n = rng.randint(0, 25)
        rects = []
        for i in range(n):
            x0 = rng.uniform(-20, 20)
            y0 = rng.uniform(-20, 20)
            rects.append((i, x0, y0, x0 + rng.uniform(0, 8), y0 + rng.uniform(0, 8)))
        idx = build_rect_index(rects)
        for _ in range(2):
            center = (rng.uniform(-25, 25), rng.uniform(-25, 25))
            radius = rng.uniform(0, 10)
            assert list(query_rects(idx, center, radius)) == \
                _scan_rects(rects, center, radius)


def test_deterministic_and_ascending():
    rng = random.Random(5)
    points = [(i, rng.uniform(0, 10), rng.uniform(0, 10)) for i in range(40)]
    rng.shuffle(points)
    idx1 = build_point_index(points)
    idx2 = build_point_index(list(reversed(points)))
    got1 = list(query_points(idx1, (5, 5), 4))
    got2 = list(query_points(idx2, (5, 5), 4))
    assert got1 == got2 == sorted(got1)
