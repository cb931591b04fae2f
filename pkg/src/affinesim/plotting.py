"""Minimal deterministic SVG rendering of runs: planar trajectories and
the disagreement-norm curve. No plotting dependency; output is plain
markup, one polyline per agent plus one target marker per agent."""

from __future__ import annotations

import math

PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
WIDTH = 640
HEIGHT = 640
MARGIN = 40


def _scaler(xs, ys):
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    span_x = (x1 - x0) or 1.0
    span_y = (y1 - y0) or 1.0
    scale = min((WIDTH - 2 * MARGIN) / span_x, (HEIGHT - 2 * MARGIN) / span_y)

    def to_px(x, y):
        px = MARGIN + (x - x0) * scale
        # SVG y grows downward; flip so the plane reads normally.
        py = HEIGHT - MARGIN - (y - y0) * scale
        return f"{px:.2f},{py:.2f}"

    return to_px


def trajectory_svg(records, partition, d: int) -> str:
    """Planar trajectories: one polyline per agent, a marker per agent.

    Follower markers sit at the final follower targets, leader markers at
    the final leader positions. Only d=2 is drawable.
    """
    if d != 2:
        raise ValueError("trajectory plots are only available for d=2")
    n = partition.n
    states = [rec.x.reshape(n, d) for rec in records]
    final_targets = records[-1].x_f_star.reshape(partition.n_followers, d)
    markers = {i: states[-1][i - 1] for i in partition.leaders}
    for row, i in enumerate(partition.followers):
        markers[i] = final_targets[row]

    xs = [s[i, 0] for s in states for i in range(n)] + [m[0] for m in markers.values()]
    ys = [s[i, 1] for s in states for i in range(n)] + [m[1] for m in markers.values()]
    to_px = _scaler(xs, ys)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    for agent in range(1, n + 1):
        color = PALETTE[(agent - 1) % len(PALETTE)]
        pts = " ".join(to_px(s[agent - 1, 0], s[agent - 1, 1]) for s in states)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
    for agent in range(1, n + 1):
        color = PALETTE[(agent - 1) % len(PALETTE)]
        cx, cy = to_px(markers[agent][0], markers[agent][1]).split(",")
        shape = "3,1" if agent in partition.leaders else None
        dash = f' stroke-dasharray="{shape}"' if shape else ""
        parts.append(
            f'<circle cx="{cx}" cy="{cy}" r="5" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash}/>'
        )
        parts.append(
            f'<text x="{float(cx) + 8:.2f}" y="{float(cy) - 8:.2f}" font-size="12" '
            f'fill="{color}">{agent}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def delta_svg(records) -> str:
    """Disagreement norm against step index, log10-scaled vertically."""
    floor = 1e-16
    ks = [rec.k for rec in records]
    logs = [math.log10(max(float(rec.delta_norm), floor)) for rec in records]
    lo, hi = min(logs), max(logs)
    if hi == lo:
        hi = lo + 1.0
    k_hi = max(ks[-1], 1)

    def to_px(k, v):
        px = MARGIN + k / k_hi * (WIDTH - 2 * MARGIN)
        py = HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)
        return f"{px:.2f},{py:.2f}"

    pts = " ".join(to_px(k, v) for k, v in zip(ks, logs))
    axis = (
        f'<polyline points="{MARGIN},{MARGIN} {MARGIN},{HEIGHT - MARGIN} '
        f'{WIDTH - MARGIN},{HEIGHT - MARGIN}" fill="none" stroke="#333" stroke-width="1"/>'
    )
    labels = (
        f'<text x="4" y="{MARGIN}" font-size="11" fill="#333">1e{hi:.1f}</text>'
        f'<text x="4" y="{HEIGHT - MARGIN}" font-size="11" fill="#333">1e{lo:.1f}</text>'
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - 12}" font-size="11" fill="#333">k={ks[-1]}</text>'
        f'<text x="{MARGIN}" y="{HEIGHT - 12}" font-size="11" fill="#333">k=0</text>'
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        f"{axis}\n"
        f'<polyline points="{pts}" fill="none" stroke="{PALETTE[0]}" stroke-width="1.5"/>\n'
        f"{labels}\n"
        "</svg>\n"
    )
