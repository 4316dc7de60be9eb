"""Report files: one CSV per figure, a standalone SVG drawn from each CSV, and summary.json."""
from __future__ import annotations

from pathlib import Path
from typing import Dict
from typing import List
from typing import Sequence

import numpy as np
import pandas as pd

from mdcsim.schemas.report import ScenarioReport
from mdcsim.schemas.report import SimulationReport
from mdcsim.services.common import dump_json

FLOAT_FORMAT = "%.6f"
WIDTH, HEIGHT = 800, 400
MARGIN = {"top": 40, "right": 120, "bottom": 50, "left": 70}
COLORS = ["#007AFF", "#34C759", "#FF9500", "#AF52DE", "#FF2D55", "#5AC8FA", "#8E8E93", "#FFCC00", "#5856D6"]


def _svg_open(title: str) -> List[str]:
    return [
        f'<svg width="{WIDTH}" height="{HEIGHT}" xmlns="http://www.w3.org/2000/svg">',
        f'  <text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="16" font-weight="bold">{title}</text>',
    ]


def _axes(parts: List[str], x_label: str, y_label: str, y_max: float) -> None:
    left, top = MARGIN["left"], MARGIN["top"]
    bottom = HEIGHT - MARGIN["bottom"]
    right = WIDTH - MARGIN["right"]
    parts.append(f'  <line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#333"/>')
    parts.append(f'  <line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#333"/>')
    parts.append(f'  <text x="{(left + right) / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{x_label}</text>')
    parts.append(f'  <text x="15" y="{(top + bottom) / 2}" font-size="12" '
                 f'transform="rotate(-90 15 {(top + bottom) / 2})" text-anchor="middle">{y_label}</text>')
    parts.append(f'  <text x="{left - 5}" y="{top + 4}" text-anchor="end" font-size="10">{y_max:.3g}</text>')
    parts.append(f'  <text x="{left - 5}" y="{bottom + 4}" text-anchor="end" font-size="10">0</text>')


def line_chart_svg(frame: pd.DataFrame, x: str, ys: Sequence[str], title: str, y_label: str) -> str:
    """One polyline per column in `ys`, one vertex per row of `frame`."""
    parts = _svg_open(title)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    xs = frame[x].to_numpy(dtype=float)
    values = [frame[c].to_numpy(dtype=float) for c in ys]
    x_min = float(xs.min()) if len(xs) else 0.0
    x_span = float(xs.max() - x_min) if len(xs) else 0.0
    y_max = max([float(v.max()) for v in values if len(v)] + [0.0])
    x_span = x_span or 1.0
    y_scale = y_max or 1.0
    _axes(parts, x, y_label, y_max)

    for i, (name, v) in enumerate(zip(ys, values)):
        color = COLORS[i % len(COLORS)]
        px = MARGIN["left"] + (xs - x_min) / x_span * plot_w
        py = MARGIN["top"] + plot_h - v / y_scale * plot_h
        points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts.append(f'  <polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}">')
        parts.append(f'    <title>{name}</title>')
        parts.append('  </polyline>')
        ly = MARGIN["top"] + 15 * i
        parts.append(f'  <text x="{WIDTH - MARGIN["right"] + 10}" y="{ly + 4}" font-size="11" fill="{color}">{name}</text>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def bar_chart_svg(labels: Sequence[str], stacks: Dict[str, Sequence[float]], title: str, y_label: str) -> str:
    """Stacked bars, one per label; stacks are drawn bottom-up in dict order."""
    parts = _svg_open(title)
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    matrix = np.array([list(v) for v in stacks.values()], dtype=float).reshape(len(stacks), len(labels))
    totals = matrix.sum(axis=0) if len(labels) else np.zeros(0)
    y_max = float(totals.max()) if len(totals) else 0.0
    y_scale = y_max or 1.0
    _axes(parts, "MDC", y_label, y_max)

    slot = plot_w / max(len(labels), 1)
    bar_w = slot * 0.6
    for j, label in enumerate(labels):
        x = MARGIN["left"] + j * slot + (slot - bar_w) / 2
        base = 0.0
        for i, name in enumerate(stacks):
            h = matrix[i, j] / y_scale * plot_h
            y = MARGIN["top"] + plot_h - (base + h)
            parts.append(f'  <rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
                         f'fill="{COLORS[i % len(COLORS)]}">')
            parts.append(f'    <title>{label} {name}: {matrix[i, j]:.2f}</title>')
            parts.append('  </rect>')
            base += h
        parts.append(f'  <text x="{x + bar_w / 2:.2f}" y="{HEIGHT - MARGIN["bottom"] + 15}" '
                     f'text-anchor="middle" font-size="11">{label}</text>')
    for i, name in enumerate(stacks):
        color = COLORS[i % len(COLORS)]
        parts.append(f'  <text x="{WIDTH - MARGIN["right"] + 10}" y="{MARGIN["top"] + 15 * i + 4}" '
                     f'font-size="11" fill="{color}">{name}</text>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def render_scenario(scenario: ScenarioReport, out_dir: Path) -> List[Path]:
    tag = scenario.scenario_tag
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(scenario.utilization, out_dir / "utilization.csv"),
        _write_csv(scenario.rejections, out_dir / "rejections.csv"),
        _write_csv(scenario.shares, out_dir / "shares.csv"),
        _write_csv(scenario.power, out_dir / "power.csv"),
    ]
    written.append(_write(out_dir / "utilization.svg", line_chart_svg(
        scenario.utilization, "t", ["mean", "min", "max"], f"{tag}: MDC utilization", "reserved / capacity")))
    mdc_columns = [c for c in scenario.rejections.columns if c != "t"]
    written.append(_write(out_dir / "rejections.svg", line_chart_svg(
        scenario.rejections, "t", mdc_columns, f"{tag}: rejected sessions", "cumulative rejections")))
    written.append(_write(out_dir / "shares.svg", bar_chart_svg(
        [str(m) for m in scenario.shares["mdc_id"]], {"share_pct": scenario.shares["share_pct"].tolist()},
        f"{tag}: served requests per MDC", "% of requests")))
    per_mdc = scenario.power[scenario.power["mdc_id"] != "total"]
    written.append(_write(out_dir / "power.svg", bar_chart_svg(
        [str(m) for m in per_mdc["mdc_id"]],
        {"idle_w": per_mdc["idle_w"].tolist(), "dynamic_w": per_mdc["dynamic_w"].tolist()},
        f"{tag}: mean power after warmup", "W")))
    return written


def render_report(report: SimulationReport, out_dir: Path | str) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for tag, scenario in report.scenarios.items():
        written += render_scenario(scenario, out_dir / tag)
    written.append(_write(out_dir / "summary.json", dump_json(report.summary)))
    return written
