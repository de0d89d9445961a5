"""Serialization of simulation output: CSV series, a canonical JSON
document, and standalone SVG line charts. All emitters are deterministic:
identical results produce identical bytes."""

from __future__ import annotations

import json
from typing import Sequence

from .metrics import AccuracyPoint, ResultsPoint, SatisfactionPoint, SimulationResult

CSV_HEADERS = {
    "results": ("iteration", "real_qos", "mean_normal_reputation"),
    "accuracy": ("iteration", "active", "interactions", "fraction"),
    "satisfaction": ("iteration", "mean_satisfaction", "mean_satisfaction_normal_users"),
}

# Columns drawn by render_plot: only [0, 1]-valued ones fit the fixed axis.
PLOT_COLUMNS = {
    "results": ("real_qos", "mean_normal_reputation"),
    "accuracy": ("fraction",),
    "satisfaction": ("mean_satisfaction", "mean_satisfaction_normal_users"),
}

_PALETTE = ("#2563eb", "#ef4444", "#059669", "#9333ea")


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _row_values(point, kind: str) -> tuple:
    if kind == "results":
        return (_fmt(point.real_qos), _fmt(point.mean_normal_reputation))
    if kind == "accuracy":
        return (str(point.active), str(point.interactions), _fmt(point.fraction))
    if kind == "satisfaction":
        return (_fmt(point.mean_satisfaction), _fmt(point.mean_satisfaction_normal_users))
    raise ValueError(f"unknown series kind {kind!r}")


def emit_csv(series: Sequence, kind: str) -> str:
    """Render one series as CSV: one row per iteration, absent values as
    empty fields, six fractional digits."""
    if kind not in CSV_HEADERS:
        raise ValueError(f"unknown series kind {kind!r}")
    lines = [",".join(CSV_HEADERS[kind])]
    for t, point in enumerate(series):
        lines.append(",".join((str(t),) + _row_values(point, kind)))
    return "\n".join(lines) + "\n"


def parse_csv(text: str, kind: str) -> list:
    """Inverse of :func:`emit_csv`, mainly for round-trip checking."""
    lines = text.strip("\n").split("\n")
    header = ",".join(CSV_HEADERS[kind])
    if lines[0] != header:
        raise ValueError(f"unexpected header {lines[0]!r} for kind {kind!r}")
    out = []
    for line in lines[1:]:
        cells = line.split(",")

        def num(cell: str) -> float | None:
            return None if cell == "" else float(cell)

        if kind == "results":
            out.append(ResultsPoint(num(cells[1]), num(cells[2])))
        elif kind == "accuracy":
            out.append(AccuracyPoint(int(cells[1]), int(cells[2]), num(cells[3])))
        else:
            out.append(SatisfactionPoint(num(cells[1]), num(cells[2])))
    return out


def emit_json(result: SimulationResult) -> str:
    """Render a whole result as one JSON document with a stable key order
    and explicit nulls for absent values."""
    doc = {
        "fingerprint": result.fingerprint,
        "seed": result.seed,
        "iterations": result.iterations,
        "results": {
            "real_qos": [p.real_qos for p in result.results],
            "mean_normal_reputation": [p.mean_normal_reputation for p in result.results],
        },
        "accuracy": {
            "active": [p.active for p in result.accuracy],
            "interactions": [p.interactions for p in result.accuracy],
            "fraction": [p.fraction for p in result.accuracy],
        },
        "satisfaction": {
            "mean_satisfaction": [p.mean_satisfaction for p in result.satisfaction],
            "mean_satisfaction_normal_users": [
                p.mean_satisfaction_normal_users for p in result.satisfaction
            ],
        },
        "summary": summary_dict(result),
    }
    return json.dumps(doc) + "\n"


def summary_dict(result: SimulationResult) -> dict:
    return {
        "post_warmup_mae": result.summary.post_warmup_mae,
        "mean_satisfaction": result.summary.mean_satisfaction,
        "mean_interaction_rate": result.summary.mean_interaction_rate,
        "warmup": result.summary.warmup,
    }


def _column(series: Sequence, kind: str, name: str) -> list[float | None]:
    if kind == "accuracy" and name == "fraction":
        return [p.fraction for p in series]
    return [getattr(p, name) for p in series]


def render_plot(series: Sequence, kind: str) -> str:
    """Standalone SVG line chart of one series: x is the iteration, y is
    the fixed [0, 1] axis, one polyline per column. Absent values break
    the polyline into separate segments; isolated points get a dot."""
    if kind not in PLOT_COLUMNS:
        raise ValueError(f"unknown series kind {kind!r}")
    n = len(series)
    if n == 0:
        raise ValueError("cannot plot an empty series")

    width, height = 960, 400
    left, right, top, bottom = 60, 20, 20, 60
    pw, ph = width - left - right, height - top - bottom

    def x(i: int) -> float:
        return left + (i / max(1, n - 1)) * pw

    def y(v: float) -> float:
        return top + (1.0 - v) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for tick in range(5):
        v = tick / 4
        yy = y(v)
        parts.append(
            f'<line x1="{left}" y1="{yy:.2f}" x2="{left + pw}" y2="{yy:.2f}" stroke="#e5e7eb"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{yy + 4:.2f}" text-anchor="end" font-size="11" '
            f'fill="#6b7280">{v:.2f}</text>'
        )
    parts.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#6b7280"/>'
    )
    parts.append(
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#6b7280"/>'
    )
    parts.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 24}" text-anchor="middle" '
        f'font-size="12" fill="#374151">iteration</text>'
    )

    for col_index, name in enumerate(PLOT_COLUMNS[kind]):
        color = _PALETTE[col_index % len(_PALETTE)]
        values = _column(series, kind, name)
        segment: list[str] = []
        segments: list[list[str]] = []
        for i, v in enumerate(values):
            if v is None:
                if segment:
                    segments.append(segment)
                    segment = []
                continue
            segment.append(f"{x(i):.2f},{y(v):.2f}")
        if segment:
            segments.append(segment)
        for seg in segments:
            if len(seg) == 1:
                cx, cy = seg[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
            else:
                parts.append(
                    f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                    f'points="{" ".join(seg)}"/>'
                )
        lx = left + pw - 240
        ly = 16 + 16 * col_index
        parts.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" '
            f'stroke-width="2.5"/>'
        )
        parts.append(
            f'<text x="{lx + 26}" y="{ly + 4}" font-size="11" fill="#374151">{name}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
