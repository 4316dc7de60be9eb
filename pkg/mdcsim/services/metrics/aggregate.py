from __future__ import annotations

from typing import Any
from typing import Dict
from typing import Mapping
from typing import Optional

import numpy as np
import pandas as pd

from mdcsim.core.exceptions import DurationTooShortError
from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.core.exceptions import ZeroServedError
from mdcsim.schemas.edgesim import SimulationRawResults
from mdcsim.schemas.placement import ScenarioTag
from mdcsim.schemas.report import DEFAULT_WARMUP
from mdcsim.schemas.report import POWER_COLUMNS
from mdcsim.schemas.report import SHARE_COLUMNS
from mdcsim.schemas.report import UTILIZATION_COLUMNS
from mdcsim.schemas.report import ScenarioReport
from mdcsim.schemas.report import SimulationReport
from mdcsim.services.logger import simulation_logger

SECONDS_PER_HOUR = 3600.0
_DIGITS = 9


def step_integral(times: np.ndarray, values: np.ndarray, start: float, end: float) -> float:
    """Integral over [start, end] of a right-continuous step function; the last value holds forever."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    edges = np.append(times, np.inf)
    lo = np.clip(edges[:-1], start, end)
    hi = np.clip(edges[1:], start, end)
    return float(np.sum(values * (hi - lo)))


def utilization_envelope(raw: SimulationRawResults) -> pd.DataFrame:
    """Per sample time: mean/min/max across MDCs of reserved/capacity, the same for busy threads, and live agents."""
    if raw.n_mdcs < 1:
        raise InvalidParameterError("utilization envelope needs at least one MDC")
    s = raw.series
    capacity = float(raw.capacity_threads)
    frame = pd.DataFrame({
        "t": s["t"],
        "u": s["reserved_threads"] / capacity,
        "b": s["busy_threads"] / capacity,
        "live": s["live_agents"],
    })
    g = frame.groupby("t", sort=True)
    envelope = pd.DataFrame({
        "mean": g["u"].mean(),
        "min": g["u"].min(),
        "max": g["u"].max(),
        "busy_mean": g["b"].mean(),
        "busy_min": g["b"].min(),
        "busy_max": g["b"].max(),
        "live_agents": g["live"].first(),
    }).reset_index()
    return envelope[UTILIZATION_COLUMNS]


def rejection_series(raw: SimulationRawResults) -> pd.DataFrame:
    wide = raw.series.pivot(index="t", columns="mdc_id", values="rejections_cum").sort_index()
    wide.columns = [f"mdc_{int(c)}" for c in wide.columns]
    return wide.reset_index()


def task_shares(raw: SimulationRawResults) -> pd.DataFrame:
    """Served-request share per MDC in percent; thread-second share alongside."""
    totals = raw.totals.sort_values("mdc_id")
    served = (totals["served_inference"] + totals["served_training"]).to_numpy(dtype=np.int64)
    total = int(served.sum())
    if total == 0:
        raise ZeroServedError(f"{raw.scenario_tag}: no request was served")
    thread_seconds = (totals["thread_seconds_inference"] + totals["thread_seconds_training"]).to_numpy(dtype=float)
    ts_total = float(thread_seconds.sum())
    return pd.DataFrame({
        "mdc_id": totals["mdc_id"].to_numpy(),
        "served": served,
        "share_pct": served / total * 100.0,
        "thread_seconds": thread_seconds,
        "thread_share_pct": thread_seconds / ts_total * 100.0 if ts_total > 0 else np.zeros(len(served)),
    })[SHARE_COLUMNS]


def power_summary(raw: SimulationRawResults, warmup: float = DEFAULT_WARMUP) -> pd.DataFrame:
    """Time-weighted mean power over [warmup, duration] and energy over the whole run, per MDC and in total."""
    duration = raw.duration
    if warmup >= duration:
        raise DurationTooShortError(f"warmup {warmup:g} s is not shorter than the run ({duration:g} s)")
    idle = raw.idle_power_w
    rows = []
    for mdc_id in range(raw.n_mdcs):
        steps = raw.power_steps[raw.power_steps["mdc_id"] == mdc_id].sort_values("t")
        t, p = steps["t"].to_numpy(), steps["power_w"].to_numpy()
        mean = step_integral(t, p, warmup, duration) / (duration - warmup)
        energy = step_integral(t, p, 0.0, duration) / SECONDS_PER_HOUR
        rows.append((str(mdc_id), mean, idle, mean - idle, energy))

    frame = pd.DataFrame(rows, columns=["mdc_id", "mean_w", "idle_w", "dynamic_w", "energy_wh"])
    total = ("total", frame["mean_w"].sum(), frame["idle_w"].sum(), frame["dynamic_w"].sum(), frame["energy_wh"].sum())
    frame = pd.concat([frame, pd.DataFrame([total], columns=frame.columns)], ignore_index=True)
    frame["idle_share"] = frame["idle_w"] / frame["mean_w"]
    frame["dynamic_share"] = frame["dynamic_w"] / frame["mean_w"]
    return frame[POWER_COLUMNS]


def _warm_mean(frame: pd.DataFrame, column: str, warmup: float) -> float:
    warm = frame[frame["t"] >= warmup]
    return float(warm[column].mean()) if len(warm) else 0.0


def _ratio(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None or b is None or b == 0:
        return None
    return round(a / b, _DIGITS)


def scenario_report(raw: SimulationRawResults, warmup: float = DEFAULT_WARMUP) -> ScenarioReport:
    try:
        shares = task_shares(raw)
    except ZeroServedError as e:
        simulation_logger.warning(f"{e}; shares left empty")
        shares = pd.DataFrame(columns=SHARE_COLUMNS)
    return ScenarioReport(
        scenario_tag=raw.scenario_tag,
        n_mdcs=raw.n_mdcs,
        utilization=utilization_envelope(raw),
        rejections=rejection_series(raw),
        shares=shares,
        power=power_summary(raw, warmup),
    )


def _scenario_summary(raw: SimulationRawResults, report: ScenarioReport, warmup: float) -> Dict[str, Any]:
    total = report.total_power
    shares = report.shares["share_pct"]
    return {
        "n_mdcs": report.n_mdcs,
        "mean_power_w": round(float(total["mean_w"]), _DIGITS),
        "idle_power_w": round(float(total["idle_w"]), _DIGITS),
        "dynamic_power_w": round(float(total["dynamic_w"]), _DIGITS),
        "dynamic_share": round(float(total["dynamic_share"]), _DIGITS),
        "energy_wh": round(float(total["energy_wh"]), _DIGITS),
        "mean_utilization": round(_warm_mean(report.utilization, "mean", warmup), _DIGITS),
        "mean_busy_utilization": round(_warm_mean(report.utilization, "busy_mean", warmup), _DIGITS),
        "rejections": int(raw.totals["rejections"].sum()),
        "served": int((raw.totals["served_inference"] + raw.totals["served_training"]).sum()),
        "share_dispersion_pct": round(float(shares.max() - shares.min()), _DIGITS) if len(shares) else None,
    }


def build_report(raws: Mapping[str, SimulationRawResults], warmup: float = DEFAULT_WARMUP) -> SimulationReport:
    report = SimulationReport(warmup=float(warmup))
    scenarios: Dict[str, Dict[str, Any]] = {}
    for tag, raw in raws.items():
        scenario = scenario_report(raw, warmup)
        report.scenarios[str(tag)] = scenario
        scenarios[str(tag)] = _scenario_summary(raw, scenario, warmup)

    def power(tag: ScenarioTag) -> Optional[float]:
        return scenarios[tag]["mean_power_w"] if tag in scenarios else None

    def dynamic(tag: ScenarioTag) -> Optional[float]:
        return scenarios[tag]["dynamic_power_w"] if tag in scenarios else None

    report.summary = {
        "warmup": float(warmup),
        "scenarios": scenarios,
        "ratios": {
            "H9_over_H3_power": _ratio(power(ScenarioTag.H9), power(ScenarioTag.H3)),
            "H1_over_H3_power": _ratio(power(ScenarioTag.H1), power(ScenarioTag.H3)),
            "C3_over_H3_power": _ratio(power(ScenarioTag.C3), power(ScenarioTag.H3)),
            "H9_over_H3_dynamic_power": _ratio(dynamic(ScenarioTag.H9), dynamic(ScenarioTag.H3)),
        },
    }
    return report
