from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict

import pandas as pd

DEFAULT_WARMUP = 15_000.0

UTILIZATION_COLUMNS = ["t", "mean", "min", "max", "busy_mean", "busy_min", "busy_max", "live_agents"]
SHARE_COLUMNS = ["mdc_id", "served", "share_pct", "thread_seconds", "thread_share_pct"]
POWER_COLUMNS = ["mdc_id", "mean_w", "idle_w", "dynamic_w", "idle_share", "dynamic_share", "energy_wh"]


@dataclass
class ScenarioReport:
    scenario_tag: str
    n_mdcs: int
    utilization: pd.DataFrame
    rejections: pd.DataFrame  # wide: t, mdc_0, mdc_1, ...
    shares: pd.DataFrame
    power: pd.DataFrame  # one row per MDC, then a "total" row

    @property
    def total_power(self) -> pd.Series:
        return self.power[self.power["mdc_id"] == "total"].iloc[0]


@dataclass
class SimulationReport:
    warmup: float
    scenarios: Dict[str, ScenarioReport] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
