"""Reciprocal collision avoidance over moving discs and rectangle obstacles.

Each disc builds one half-plane constraint in velocity space per nearby
disc and up to a few per nearby obstacle segment, then picks the feasible
velocity closest to its preferred velocity with an incremental linear
program.  When the program is infeasible, a fallback program keeps the
obstacle constraints hard and minimizes the worst violation of the disc
constraints.

Static discs (zero preferred velocity, holding position) never move;
their neighbors absorb the full avoidance correction instead of half.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

from .errors import DuplicateId, UnknownId
from .spatial import (
    PointIndex,
    RectIndex,
    build_point_index,
    build_rect_index,
    query_points,
    query_rects,
)
from .units import Plane

# Tolerance for detecting parallel constraint lines inside the LP.
_LP_EPS = 1e-9
# Feasibility slack used when checking whether an existing line already
# covers an obstacle velocity cone.
_COVER_EPS = 1e-9


class Disc:
    """A moving circular body participating in collision avoidance."""

    __slots__ = ("id", "x", "y", "vx", "vy", "pvx", "pvy",
                 "radius", "max_speed", "plane", "is_static")

    def __init__(self, id: int, x: float, y: float, radius: float, max_speed: float,
                 plane: Plane = Plane.GROUND, vx: float = 0.0, vy: float = 0.0,
                 pvx: float = 0.0, pvy: float = 0.0, is_static: bool = False):
        self.id = id
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.pvx = pvx
        self.pvy = pvy
        self.radius = radius
        self.max_speed = max_speed
        self.plane = plane
        self.is_static = is_static


class HalfPlane(NamedTuple):
    """One linear constraint in velocity space.

    Feasible velocities v satisfy cross(direction, v - point) >= 0,
    i.e. they lie on or to the left of the directed line.
    """

    px: float
    py: float
    dx: float
    dy: float
    source: str = "UNIT"

    @property
    def point(self) -> tuple[float, float]:
        return (self.px, self.py)

    @property
    def direction(self) -> tuple[float, float]:
        return (self.dx, self.dy)


class Segment(NamedTuple):
    """One directed obstacle edge with its neighbor edge directions.

    Edges trace each rectangle counterclockwise (interior on the left),
    so constraints push discs toward the exterior side.
    """

    ax: float
    ay: float
    bx: float
    by: float
    convex_a: bool
    convex_b: bool
    prev_dx: float
    prev_dy: float
    dir_x: float
    dir_y: float
    next_dx: float
    next_dy: float

    @property
    def a(self) -> tuple[float, float]:
        return (self.ax, self.ay)

    @property
    def b(self) -> tuple[float, float]:
        return (self.bx, self.by)


def rect_segments(xmin: float, ymin: float, xmax: float, ymax: float) -> list[Segment]:
    corners = ((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax))
    dirs = []
    for i in range(4):
        ax, ay = corners[i]
        bx, by = corners[(i + 1) % 4]
        length = math.hypot(bx - ax, by - ay)
        dirs.append(((bx - ax) / length, (by - ay) / length))
    segs = []
    for i in range(4):
        ax, ay = corners[i]
        bx, by = corners[(i + 1) % 4]
        segs.append(Segment(
            ax, ay, bx, by, True, True,
            dirs[(i - 1) % 4][0], dirs[(i - 1) % 4][1],
            dirs[i][0], dirs[i][1],
            dirs[(i + 1) % 4][0], dirs[(i + 1) % 4][1],
        ))
    return segs


class ObstacleSet:
    """Rectangle obstacles indexed for radius queries, expanded to segments."""

    def __init__(self, rects: Iterable[tuple[float, float, float, float]] = ()):
        rects = list(rects)
        self.index: RectIndex = build_rect_index(
            (i, r[0], r[1], r[2], r[3]) for i, r in enumerate(rects)
        )
        self.segments: list[list[Segment]] = [rect_segments(*r) for r in rects]

    def __len__(self) -> int:
        return len(self.segments)


def _pair_normal(id_a: int, id_b: int) -> tuple[float, float]:
    """Deterministic unit normal for coincident disc centers.

    Antisymmetric in the id pair so both discs push in opposite directions.
    """
    lo, hi = (id_a, id_b) if id_a < id_b else (id_b, id_a)
    h = ((lo * 2654435761) ^ (hi * 2246822519)) & 0xFFFFFFFF
    ang = h * (2.0 * math.pi / 4294967296.0)
    nx, ny = math.cos(ang), math.sin(ang)
    if id_a < id_b:
        return nx, ny
    return -nx, -ny


def unit_halfplane(a: Disc, b: Disc, tau: float, dt: float) -> HalfPlane:
    """Constraint on a's velocity keeping it clear of disc b for tau seconds.

    Discs already in contact are resolved over a single timestep dt
    instead of the full horizon.  If b is static, a absorbs the full
    correction; otherwise the pair splits it evenly.
    """
    rel_px = b.x - a.x
    rel_py = b.y - a.y
    rel_vx = a.vx - b.vx
    rel_vy = a.vy - b.vy
    dist_sq = rel_px * rel_px + rel_py * rel_py
    radius = a.radius + b.radius
    radius_sq = radius * radius

    if dist_sq > radius_sq:
        inv_tau = 1.0 / tau
        wx = rel_vx - inv_tau * rel_px
        wy = rel_vy - inv_tau * rel_py
        w_len_sq = wx * wx + wy * wy
        dot1 = wx * rel_px + wy * rel_py
        if dot1 < 0.0 and dot1 * dot1 > radius_sq * w_len_sq:
            # Relative velocity projects onto the cutoff arc.
            w_len = math.sqrt(w_len_sq)
            uwx = wx / w_len
            uwy = wy / w_len
            dir_x, dir_y = uwy, -uwx
            scale = radius * inv_tau - w_len
            ux = scale * uwx
            uy = scale * uwy
        else:
            # Relative velocity projects onto one of the cone legs.
            leg = math.sqrt(dist_sq - radius_sq)
            if rel_px * wy - rel_py * wx > 0.0:
                dir_x = (rel_px * leg - rel_py * radius) / dist_sq
                dir_y = (rel_px * radius + rel_py * leg) / dist_sq
            else:
                dir_x = -(rel_px * leg + rel_py * radius) / dist_sq
                dir_y = -(-rel_px * radius + rel_py * leg) / dist_sq
            dot2 = rel_vx * dir_x + rel_vy * dir_y
            ux = dot2 * dir_x - rel_vx
            uy = dot2 * dir_y - rel_vy
    else:
        # Already touching or overlapping: push apart within one timestep.
        inv_dt = 1.0 / dt
        wx = rel_vx - inv_dt * rel_px
        wy = rel_vy - inv_dt * rel_py
        w_len = math.hypot(wx, wy)
        if w_len < 1e-12:
            if dist_sq < 1e-24:
                uwx, uwy = _pair_normal(a.id, b.id)
            else:
                d = math.sqrt(dist_sq)
                uwx, uwy = -rel_px / d, -rel_py / d
        else:
            uwx = wx / w_len
            uwy = wy / w_len
        dir_x, dir_y = uwy, -uwx
        scale = radius * inv_dt - w_len
        ux = scale * uwx
        uy = scale * uwy

    share = 1.0 if b.is_static else 0.5
    return HalfPlane(a.vx + share * ux, a.vy + share * uy, dir_x, dir_y, "UNIT")


def obstacle_halfplanes(disc: Disc, seg: Segment, tau: float,
                        existing: Sequence[HalfPlane] = ()) -> list[HalfPlane]:
    """Constraints keeping the disc clear of one obstacle segment for tau.

    The disc takes the full correction (no reciprocity with terrain).
    Segments beyond the disc's reach produce no constraint, and cones
    already excluded by lines in ``existing`` are suppressed.
    """
    out: list[HalfPlane] = []
    _append_obstacle_lines(disc, seg, 1.0 / tau, tau, existing, out)
    return out


def _append_obstacle_lines(disc: Disc, seg: Segment, inv_tau: float, tau: float,
                           prior: Sequence[HalfPlane], out: list[HalfPlane]) -> None:
    px, py = disc.x, disc.y
    radius = disc.radius
    radius_sq = radius * radius

    # Only edges whose exterior side faces the disc constrain it; the
    # interior side of this edge's line is the job of the opposite edge.
    if (seg.bx - seg.ax) * (py - seg.ay) - (seg.by - seg.ay) * (px - seg.ax) >= 0.0:
        return

    # Beyond reach within the horizon: no constraint.
    sx = seg.bx - seg.ax
    sy = seg.by - seg.ay
    seg_len_sq = sx * sx + sy * sy
    s_clamp = max(0.0, min(1.0, ((px - seg.ax) * sx + (py - seg.ay) * sy) / seg_len_sq))
    nearest_dx = seg.ax + s_clamp * sx - px
    nearest_dy = seg.ay + s_clamp * sy - py
    if math.hypot(nearest_dx, nearest_dy) > radius + tau * disc.max_speed:
        return

    rel1x = seg.ax - px
    rel1y = seg.ay - py
    rel2x = seg.bx - px
    rel2y = seg.by - py

    # Skip when an accumulated line already excludes this cone.
    for line in prior:
        if line.source != "OBSTACLE":
            continue
        q1x = inv_tau * rel1x - line.px
        q1y = inv_tau * rel1y - line.py
        q2x = inv_tau * rel2x - line.px
        q2y = inv_tau * rel2y - line.py
        if (q1x * line.dy - q1y * line.dx - inv_tau * radius >= -_COVER_EPS
                and q2x * line.dy - q2y * line.dx - inv_tau * radius >= -_COVER_EPS):
            return
    for line in out:
        q1x = inv_tau * rel1x - line.px
        q1y = inv_tau * rel1y - line.py
        q2x = inv_tau * rel2x - line.px
        q2y = inv_tau * rel2y - line.py
        if (q1x * line.dy - q1y * line.dx - inv_tau * radius >= -_COVER_EPS
                and q2x * line.dy - q2y * line.dx - inv_tau * radius >= -_COVER_EPS):
            return

    dist_sq1 = rel1x * rel1x + rel1y * rel1y
    dist_sq2 = rel2x * rel2x + rel2y * rel2y
    s = -(rel1x * sx + rel1y * sy) / seg_len_sq
    line_dx = -rel1x - s * sx
    line_dy = -rel1y - s * sy
    dist_sq_line = line_dx * line_dx + line_dy * line_dy

    if s < 0.0 and dist_sq1 <= radius_sq:
        # Touching the first vertex.
        if seg.convex_a:
            n = math.hypot(rel1x, rel1y)
            if n > 1e-12:
                out.append(HalfPlane(0.0, 0.0, -rel1y / n, rel1x / n, "OBSTACLE"))
        return
    if s > 1.0 and dist_sq2 <= radius_sq:
        # Touching the second vertex; skip if the next edge will cover it.
        if seg.convex_b and rel2x * seg.next_dy - rel2y * seg.next_dx >= 0.0:
            n = math.hypot(rel2x, rel2y)
            if n > 1e-12:
                out.append(HalfPlane(0.0, 0.0, -rel2y / n, rel2x / n, "OBSTACLE"))
        return
    if 0.0 <= s <= 1.0 and dist_sq_line <= radius_sq:
        # Touching the segment interior.
        out.append(HalfPlane(0.0, 0.0, -seg.dir_x, -seg.dir_y, "OBSTACLE"))
        return

    # Not in contact: build the cone legs.  Oblique views collapse both
    # legs onto a single vertex.
    collapsed_left = False
    collapsed_right = False
    if s < 0.0 and dist_sq_line <= radius_sq:
        if not seg.convex_a:
            return
        collapsed_right = True  # both endpoints become vertex a
        leg1 = math.sqrt(dist_sq1 - radius_sq)
        left_dx = (rel1x * leg1 - rel1y * radius) / dist_sq1
        left_dy = (rel1x * radius + rel1y * leg1) / dist_sq1
        right_dx = (rel1x * leg1 + rel1y * radius) / dist_sq1
        right_dy = (-rel1x * radius + rel1y * leg1) / dist_sq1
        o1x, o1y = rel1x, rel1y
        o2x, o2y = rel1x, rel1y
        left_neighbor_dx, left_neighbor_dy = seg.prev_dx, seg.prev_dy
        o2_dir_x, o2_dir_y = seg.dir_x, seg.dir_y
        cutoff_dir_x, cutoff_dir_y = seg.dir_x, seg.dir_y
    elif s > 1.0 and dist_sq_line <= radius_sq:
        if not seg.convex_b:
            return
        collapsed_left = True  # both endpoints become vertex b
        leg2 = math.sqrt(dist_sq2 - radius_sq)
        left_dx = (rel2x * leg2 - rel2y * radius) / dist_sq2
        left_dy = (rel2x * radius + rel2y * leg2) / dist_sq2
        right_dx = (rel2x * leg2 + rel2y * radius) / dist_sq2
        right_dy = (-rel2x * radius + rel2y * leg2) / dist_sq2
        o1x, o1y = rel2x, rel2y
        o2x, o2y = rel2x, rel2y
        left_neighbor_dx, left_neighbor_dy = seg.dir_x, seg.dir_y
        o2_dir_x, o2_dir_y = seg.next_dx, seg.next_dy
        cutoff_dir_x, cutoff_dir_y = seg.next_dx, seg.next_dy
    else:
        if seg.convex_a:
            leg1 = math.sqrt(dist_sq1 - radius_sq)
            left_dx = (rel1x * leg1 - rel1y * radius) / dist_sq1
            left_dy = (rel1x * radius + rel1y * leg1) / dist_sq1
        else:
            left_dx, left_dy = -seg.dir_x, -seg.dir_y
        if seg.convex_b:
            leg2 = math.sqrt(dist_sq2 - radius_sq)
            right_dx = (rel2x * leg2 + rel2y * radius) / dist_sq2
            right_dy = (-rel2x * radius + rel2y * leg2) / dist_sq2
        else:
            right_dx, right_dy = seg.dir_x, seg.dir_y
        o1x, o1y = rel1x, rel1y
        o2x, o2y = rel2x, rel2y
        left_neighbor_dx, left_neighbor_dy = seg.prev_dx, seg.prev_dy
        o2_dir_x, o2_dir_y = seg.next_dx, seg.next_dy
        cutoff_dir_x, cutoff_dir_y = seg.dir_x, seg.dir_y

    collapsed = collapsed_left or collapsed_right

    # Legs pointing into a neighboring edge are replaced by that edge's
    # direction and add no constraint of their own.
    left_foreign = False
    right_foreign = False
    convex1 = seg.convex_b if collapsed_left else seg.convex_a
    convex2 = seg.convex_a if collapsed_right else seg.convex_b
    if convex1 and left_dx * -left_neighbor_dy - left_dy * -left_neighbor_dx >= 0.0:
        left_dx, left_dy = -left_neighbor_dx, -left_neighbor_dy
        left_foreign = True
    if convex2 and right_dx * o2_dir_y - right_dy * o2_dir_x <= 0.0:
        right_dx, right_dy = o2_dir_x, o2_dir_y
        right_foreign = True

    left_cut_x = inv_tau * o1x
    left_cut_y = inv_tau * o1y
    right_cut_x = inv_tau * o2x
    right_cut_y = inv_tau * o2y
    cut_vx = right_cut_x - left_cut_x
    cut_vy = right_cut_y - left_cut_y

    vx, vy = disc.vx, disc.vy
    if collapsed:
        t = 0.5
    else:
        t = ((vx - left_cut_x) * cut_vx + (vy - left_cut_y) * cut_vy) / (cut_vx * cut_vx + cut_vy * cut_vy)
    t_left = (vx - left_cut_x) * left_dx + (vy - left_cut_y) * left_dy
    t_right = (vx - right_cut_x) * right_dx + (vy - right_cut_y) * right_dy

    if (t < 0.0 and t_left < 0.0) or (collapsed and t_left < 0.0 and t_right < 0.0):
        # Project on the left cutoff circle.
        wlen = math.hypot(vx - left_cut_x, vy - left_cut_y)
        if wlen < 1e-12:
            return
        uwx = (vx - left_cut_x) / wlen
        uwy = (vy - left_cut_y) / wlen
        out.append(HalfPlane(left_cut_x + radius * inv_tau * uwx,
                             left_cut_y + radius * inv_tau * uwy,
                             uwy, -uwx, "OBSTACLE"))
        return
    if t > 1.0 and t_right < 0.0:
        # Project on the right cutoff circle.
        wlen = math.hypot(vx - right_cut_x, vy - right_cut_y)
        if wlen < 1e-12:
            return
        uwx = (vx - right_cut_x) / wlen
        uwy = (vy - right_cut_y) / wlen
        out.append(HalfPlane(right_cut_x + radius * inv_tau * uwx,
                             right_cut_y + radius * inv_tau * uwy,
                             uwy, -uwx, "OBSTACLE"))
        return

    if collapsed or t < 0.0 or t > 1.0:
        d_cut = math.inf
    else:
        cx = vx - (left_cut_x + t * cut_vx)
        cy = vy - (left_cut_y + t * cut_vy)
        d_cut = cx * cx + cy * cy
    if t_left < 0.0:
        d_left = math.inf
    else:
        lx = vx - (left_cut_x + t_left * left_dx)
        ly = vy - (left_cut_y + t_left * left_dy)
        d_left = lx * lx + ly * ly
    if t_right < 0.0:
        d_right = math.inf
    else:
        rx = vx - (right_cut_x + t_right * right_dx)
        ry = vy - (right_cut_y + t_right * right_dy)
        d_right = rx * rx + ry * ry

    if d_cut <= d_left and d_cut <= d_right:
        dir_x, dir_y = -cutoff_dir_x, -cutoff_dir_y
        out.append(HalfPlane(left_cut_x + radius * inv_tau * -dir_y,
                             left_cut_y + radius * inv_tau * dir_x,
                             dir_x, dir_y, "OBSTACLE"))
        return
    if d_left <= d_right:
        if left_foreign:
            return
        out.append(HalfPlane(left_cut_x + radius * inv_tau * -left_dy,
                             left_cut_y + radius * inv_tau * left_dx,
                             left_dx, left_dy, "OBSTACLE"))
        return
    if right_foreign:
        return
    dir_x, dir_y = -right_dx, -right_dy
    out.append(HalfPlane(right_cut_x + radius * inv_tau * -dir_y,
                         right_cut_y + radius * inv_tau * dir_x,
                         dir_x, dir_y, "OBSTACLE"))


def _lp1(lines: Sequence[HalfPlane], line_no: int, radius: float,
         opt_x: float, opt_y: float, direction_opt: bool) -> tuple[float, float] | None:
    line = lines[line_no]
    px, py, dx, dy = line[0], line[1], line[2], line[3]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        # The max-speed circle fully invalidates this line.
        return None
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq

    for i in range(line_no):
        other = lines[i]
        opx, opy, odx, ody = other[0], other[1], other[2], other[3]
        denom = dx * ody - dy * odx
        numer = odx * (py - opy) - ody * (px - opx)
        if -_LP_EPS <= denom <= _LP_EPS:
            if numer < 0.0:
                return None
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return None

    if direction_opt:
        t = t_right if opt_x * dx + opt_y * dy > 0.0 else t_left
    else:
        t = dx * (opt_x - px) + dy * (opt_y - py)
        if t < t_left:
            t = t_left
        elif t > t_right:
            t = t_right
    return (px + t * dx, py + t * dy)


def _lp2(lines: Sequence[HalfPlane], radius: float, opt_x: float, opt_y: float,
         direction_opt: bool) -> tuple[float, float, int]:
    if direction_opt:
        # opt is a unit direction: start at the disc boundary.
        rx = opt_x * radius
        ry = opt_y * radius
    elif opt_x * opt_x + opt_y * opt_y > radius * radius:
        n = math.hypot(opt_x, opt_y)
        rx = opt_x / n * radius
        ry = opt_y / n * radius
    else:
        rx, ry = opt_x, opt_y

    for i, line in enumerate(lines):
        if line[2] * (line[1] - ry) - line[3] * (line[0] - rx) > 0.0:
            res = _lp1(lines, i, radius, opt_x, opt_y, direction_opt)
            if res is None:
                return rx, ry, i
            rx, ry = res
    return rx, ry, len(lines)


def _lp3(lines: Sequence[HalfPlane], num_obstacle: int, begin: int, radius: float,
         rx: float, ry: float) -> tuple[float, float]:
    distance = 0.0
    for i in range(begin, len(lines)):
        line = lines[i]
        if line[2] * (line[1] - ry) - line[3] * (line[0] - rx) <= distance:
            continue
        # Project the constraints processed so far onto line i and
        # optimize along it, keeping obstacle lines hard.
        proj: list[HalfPlane] = list(lines[:num_obstacle])
        pix, piy, dix, diy = line[0], line[1], line[2], line[3]
        for j in range(num_obstacle, i):
            other = lines[j]
            pjx, pjy, djx, djy = other[0], other[1], other[2], other[3]
            determinant = dix * djy - diy * djx
            if -_LP_EPS <= determinant <= _LP_EPS:
                if dix * djx + diy * djy > 0.0:
                    continue
                ptx = 0.5 * (pix + pjx)
                pty = 0.5 * (piy + pjy)
            else:
                t = (djx * (piy - pjy) - djy * (pix - pjx)) / determinant
                ptx = pix + t * dix
                pty = piy + t * diy
            ndx = djx - dix
            ndy = djy - diy
            n = math.hypot(ndx, ndy)
            if n < 1e-12:
                continue
            proj.append(HalfPlane(ptx, pty, ndx / n, ndy / n))
        nrx, nry, fail = _lp2(proj, radius, -diy, dix, True)
        if fail == len(proj):
            rx, ry = nrx, nry
        distance = dix * (piy - ry) - diy * (pix - rx)
    return rx, ry


def solve_velocity(preferred: Sequence[float], max_speed: float,
                   lines: Sequence[HalfPlane], obstacle_count: int) -> tuple[float, float]:
    """Feasible velocity closest to the preferred one, or the best-effort
    fallback that minimizes the worst violation of the disc constraints.

    Obstacle-sourced lines must occupy the first ``obstacle_count``
    positions; they stay hard in the fallback.
    """
    rx, ry, fail = _lp2(lines, max_speed, preferred[0], preferred[1], False)
    if fail < len(lines):
        rx, ry = _lp3(lines, obstacle_count, fail, max_speed, rx, ry)
    return rx, ry


def step_velocities(discs: Sequence[Disc], obstacles: ObstacleSet | None,
                    points: PointIndex, tau: float, dt: float,
                    r_max: float) -> list[tuple[float, float]]:
    """New velocities for all discs, computed from one immutable snapshot.

    Unit neighbors come from the point index within (r_a + r_max) * tau,
    widened by one step of combined travel so that closing pairs are
    constrained before they can first touch.  Obstacle neighbors (ground
    plane only) come from the rectangle index within r_a + tau * v_max.
    """
    by_id = {d.id: d for d in discs}
    v_max_all = 0.0
    for d in discs:
        if d.max_speed > v_max_all:
            v_max_all = d.max_speed
    inv_tau = 1.0 / tau

    out: list[tuple[float, float]] = []
    for a in discs:
        if a.is_static:
            out.append((0.0, 0.0))
            continue
        lines: list[HalfPlane] = []
        if obstacles is not None and len(obstacles) and a.plane is Plane.GROUND:
            reach = a.radius + tau * a.max_speed
            for rid in query_rects(obstacles.index, (a.x, a.y), reach):
                for seg in obstacles.segments[rid]:
                    _append_obstacle_lines(a, seg, inv_tau, tau, (), lines)
        n_obstacle = len(lines)
        neighbor_radius = (a.radius + r_max) * tau + (a.max_speed + v_max_all) * dt
        neighbors: list[Disc] = []
        for nid in query_points(points, (a.x, a.y), neighbor_radius):
            b = by_id[int(nid)]
            if b is a or b.plane is not a.plane:
                continue
            neighbors.append(b)
            lines.append(unit_halfplane(a, b, tau, dt))
        vx, vy = solve_velocity((a.pvx, a.pvy), a.max_speed, lines, n_obstacle)

        # The reciprocal program can go infeasible in a crunch (e.g. a disc
        # sandwiched at near-contact), and its fallback then trades a small
        # penetration.  A second pass caps how much of the remaining gap to
        # each neighbor may be consumed this step; that cap always admits
        # v = 0, so the projection never fails and penetration cannot occur.
        guards: list[HalfPlane] = []
        violated = False
        for b in neighbors:
            dx = b.x - a.x
            dy = b.y - a.y
            dist = math.hypot(dx, dy)
            if dist < 1e-12:
                continue
            allowed = (dist - a.radius - b.radius) / (2.0 * dt)
            if allowed >= a.max_speed + b.max_speed:
                continue
            if allowed < 0.0:
                allowed = 0.0
            nx = dx / dist
            ny = dy / dist
            guards.append(HalfPlane(allowed * nx, allowed * ny, -ny, nx, "UNIT"))
            if vx * nx + vy * ny > allowed:
                violated = True
        if violated:
            vx, vy = solve_velocity((vx, vy), a.max_speed,
                                    lines[:n_obstacle] + guards, n_obstacle)
        out.append((vx, vy))
    return out


class CollisionState:
    """Mutable set of discs stepped together against a fixed obstacle set."""

    def __init__(self, rects: Iterable[tuple[float, float, float, float]] = (),
                 tau: float = 1.0, dt: float = 1.0 / 16.0, r_max: float | None = None):
        self.obstacles = ObstacleSet(rects)
        self.tau = tau
        self.dt = dt
        self.r_max = r_max
        self._discs: dict[int, Disc] = {}

    def add(self, disc: Disc) -> None:
        if disc.id in self._discs:
            raise DuplicateId(f"disc id {disc.id} already present")
        self._discs[disc.id] = disc

    def remove(self, disc_id: int) -> None:
        if disc_id not in self._discs:
            raise UnknownId(f"disc id {disc_id} not present")
        del self._discs[disc_id]

    def remove_all(self) -> None:
        self._discs.clear()

    def __contains__(self, disc_id: int) -> bool:
        return disc_id in self._discs

    def disc(self, disc_id: int) -> Disc:
        if disc_id not in self._discs:
            raise UnknownId(f"disc id {disc_id} not present")
        return self._discs[disc_id]

    def __len__(self) -> int:
        return len(self._discs)

    def discs(self) -> list[Disc]:
        return list(self._discs.values())

    def step(self) -> dict[int, tuple[float, float]]:
        discs = list(self._discs.values())
        points = build_point_index((d.id, d.x, d.y) for d in discs)
        r_max = self.r_max
        if r_max is None:
            r_max = max((d.radius for d in discs), default=0.0)
        vels = step_velocities(discs, self.obstacles, points, self.tau, self.dt, r_max)
        return {d.id: v for d, v in zip(discs, vels)}
