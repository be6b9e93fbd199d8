"""Offline SVG rendering of replay dumps."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import MalformedDocument

_ALLY_COLOR = "#3b6fd4"
_ENEMY_COLOR = "#d43b3b"
_HEALTH_COLOR = "#3bd46f"
_OBSTACLE_COLOR = "#555555"

PIXELS_PER_UNIT = 20


def read_replay(path: str | Path) -> tuple[dict, list[dict]]:
    header = None
    frames = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedDocument(f"bad replay line: {exc}") from None
            kind = record.get("kind")
            if kind == "header":
                header = record
            elif kind == "frame":
                frames.append(record)
    if header is None and frames:
        raise MalformedDocument("replay has frames but no header record")
    return header, frames


def _health_arc(cx: float, cy: float, r: float, frac: float) -> str:
    if frac >= 1.0:
        frac = 0.9999
    ang = 2.0 * math.pi * frac
    x0, y0 = cx, cy - r
    x1 = cx + r * math.sin(ang)
    y1 = cy - r * math.cos(ang)
    large = 1 if ang > math.pi else 0
    return f"M {x0:.2f} {y0:.2f} A {r:.2f} {r:.2f} 0 {large} 1 {x1:.2f} {y1:.2f}"


def render_frame_svg(header: dict, frame: dict) -> str:
    w = header["width"] * PIXELS_PER_UNIT
    h = header["height"] * PIXELS_PER_UNIT
    meta = {u[0]: u for u in header["units"]}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {header["width"]} {header["height"]}">',
        f'<rect x="0" y="0" width="{header["width"]}" height="{header["height"]}" '
        f'fill="#e8e3d8"/>',
    ]
    for x, y, rw, rh in header["obstacles"]:
        parts.append(
            f'<rect x="{x}" y="{y}" width="{rw}" height="{rh}" fill="{_OBSTACLE_COLOR}"/>'
        )
    for uid, x, y, health, shield, energy, cooldown, alive in frame["units"]:
        if not alive:
            continue
        _, radius, faction, max_hp = meta[uid]
        color = _ALLY_COLOR if faction == "ALLY" else _ENEMY_COLOR
        parts.append(
            f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{radius:.3f}" fill="{color}" '
            f'fill-opacity="0.85"/>'
        )
        frac = health / max_hp if max_hp else 0.0
        arc = _health_arc(x, y, radius * 1.15, frac)
        parts.append(
            f'<path d="{arc}" stroke="{_HEALTH_COLOR}" stroke-width="0.12" fill="none"/>'
        )
    parts.append(
        f'<text x="0.5" y="1.2" font-size="1" fill="#333">t={frame["t"]}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


def render_frames(replay_path: str | Path, out_dir: str | Path, every_n: int) -> int:
    """Write one SVG per sampled game step; returns the file count."""
    header, frames = read_replay(replay_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for frame in frames:
        if every_n > 1 and frame["t"] % every_n != 0:
            continue
        svg = render_frame_svg(header, frame)
        (out / f"frame_{frame['t']:06d}.svg").write_text(svg)
        written += 1
    return written
