"""Post-hoc checks over a finished run. Each returns a list of human-readable violations; empty means clean."""
from __future__ import annotations

from collections import defaultdict
from typing import Dict
from typing import List

import numpy as np

from mdcsim.schemas.edgesim import PUS_PER_MDC
from mdcsim.schemas.edgesim import THREADS_PER_PU
from mdcsim.schemas.edgesim import ServiceName
from mdcsim.schemas.edgesim import SimulationRawResults
from mdcsim.services.engine.event_log import EventLog


def audit_first_fit(log: EventLog, pus_per_mdc: int = PUS_PER_MDC, threads_per_pu: int = THREADS_PER_PU) -> List[str]:
    """Replay reservations: PU k may only be chosen when PUs 0..k-1 could not take the session."""
    reserved: Dict[int, List[int]] = defaultdict(lambda: [0] * pus_per_mdc)
    violations: List[str] = []
    for row in log.of_kind("SessionOpen", "SessionClose", "SessionReject"):
        d = row.details
        pus = reserved[d["mdc"]]
        threads = d.get("threads", 1)
        if row.kind == "SessionOpen":
            k = d["pu"]
            earlier = [j for j in range(k) if pus[j] + threads <= threads_per_pu]
            if earlier:
                violations.append(f"t={row.t:.6f} seq={row.seq}: MDC {d['mdc']} chose PU {k} while PU {earlier[0]} had room")
            if pus[k] + threads > threads_per_pu:
                violations.append(f"t={row.t:.6f} seq={row.seq}: MDC {d['mdc']} over-reserved PU {k}")
            pus[k] += threads
        elif row.kind == "SessionClose":
            pus[d["pu"]] -= threads
        elif any(n + threads <= threads_per_pu for n in pus):
            violations.append(f"t={row.t:.6f} seq={row.seq}: MDC {d['mdc']} rejected with free capacity")
    return violations


def audit_power_law(results: SimulationRawResults) -> List[str]:
    """power = idle * PUs + (active - idle) * busy PUs at every sample, within [idle, active] * PUs."""
    series = results.series
    pm = results.power_model
    expected = results.idle_power_w + pm.delta_w * series["busy_pus"].to_numpy()
    power = series["power_w"].to_numpy()
    violations = [
        f"t={t} mdc={m}: {p} W, expected {e} W"
        for t, m, p, e in zip(series["t"], series["mdc_id"], power, expected)
        if not np.isclose(p, e, rtol=0.0, atol=1e-9)
    ]
    out_of_range = (power < results.idle_power_w - 1e-9) | (power > results.peak_power_w + 1e-9)
    violations += [f"sample {i}: {power[i]} W outside the idle/peak range" for i in np.flatnonzero(out_of_range)]
    return violations


def audit_traffic(results: SimulationRawResults) -> List[str]:
    """Per service, traffic bytes equal message count times message size."""
    sizes = {spec.name: spec.total_bytes for spec in results.services}
    violations = []
    for row in results.totals.itertuples(index=False):
        for name in ServiceName:
            messages = getattr(row, f"messages_{name}")
            traffic = getattr(row, f"traffic_{name}_bytes")
            if traffic != messages * sizes.get(name, 0):
                violations.append(f"MDC {row.mdc_id} {name}: {traffic} B for {messages} messages")
    return violations


def audit_rejections_monotone(results: SimulationRawResults) -> List[str]:
    violations = []
    for mdc_id, group in results.series.groupby("mdc_id", sort=True):
        steps = np.diff(group["rejections_cum"].to_numpy())
        if np.any(steps < 0):
            violations.append(f"MDC {mdc_id}: cumulative rejections decrease")
    return violations
