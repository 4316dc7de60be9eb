from __future__ import annotations

import math
from typing import List
from typing import Optional

import numpy as np

from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.geometry import ScenarioMap
from mdcsim.schemas.mobility import RECORD_DTYPE
from mdcsim.schemas.mobility import AgentItinerary
from mdcsim.schemas.mobility import MobilityConfig
from mdcsim.schemas.mobility import MobilityTrace
from mdcsim.services.geometry.map_data import as_xy
from mdcsim.services.geometry.map_data import nearest_index
from mdcsim.services.logger import mobility_logger
from mdcsim.services.rng import Stage
from mdcsim.services.rng import substream

# Trace files keep 3 decimals; values are rounded at the source so I/O is lossless.
DECIMALS = 3


def _r(value: float) -> float:
    return round(float(value), DECIMALS)


def _leg_table(it: AgentItinerary):
    times = (it.t_enter, it.t_arrive, it.t_depart, it.t_exit)
    xs = (it.entry.x, it.destination.x, it.destination.x, it.exit.x)
    ys = (it.entry.y, it.destination.y, it.destination.y, it.exit.y)
    return times, xs, ys


def position_at(it: AgentItinerary, t: float) -> Optional[GeoPoint]:
    """Point on the piecewise-linear path, or None outside [t_enter, t_exit]."""
    if t < it.t_enter or t > it.t_exit:
        return None
    times, xs, ys = _leg_table(it)
    return GeoPoint(float(np.interp(t, times, xs)), float(np.interp(t, times, ys)))


def positions_at(it: AgentItinerary, ts: np.ndarray) -> np.ndarray:
    """Vectorized position_at for times known to lie inside the itinerary."""
    times, xs, ys = _leg_table(it)
    return np.column_stack((np.interp(ts, times, xs), np.interp(ts, times, ys)))


def sample_times(it: AgentItinerary, step: float, t_end: Optional[float] = None) -> np.ndarray:
    """Sample grid k*step covering [t_enter, min(t_exit, t_end)]."""
    last = it.t_exit if t_end is None else min(it.t_exit, t_end)
    k0 = math.ceil(it.t_enter / step - 1e-9)
    k1 = math.floor(last / step + 1e-9)
    if k1 < k0:
        return np.empty(0, dtype=float)
    return np.round(np.arange(k0, k1 + 1, dtype=np.int64) * step, DECIMALS)


def make_itinerary(agent_id: int, t_enter: float, entry: GeoPoint, destination: GeoPoint, dwell: float,
                   exit_point: GeoPoint, walk_speed: float) -> AgentItinerary:
    entry = GeoPoint(_r(entry.x), _r(entry.y))
    destination = GeoPoint(_r(destination.x), _r(destination.y))
    exit_point = GeoPoint(_r(exit_point.x), _r(exit_point.y))
    t_arrive = _r(t_enter + entry.distance_to(destination) / walk_speed)
    t_depart = _r(t_arrive + dwell)
    t_exit = _r(t_depart + destination.distance_to(exit_point) / walk_speed)
    return AgentItinerary(
        agent_id=agent_id,
        t_enter=_r(t_enter),
        entry=entry,
        destination=destination,
        t_arrive=t_arrive,
        t_depart=t_depart,
        exit=exit_point,
        t_exit=t_exit,
    )


def _draw_itinerary(scenario_map: ScenarioMap, cfg: MobilityConfig, seed: int, agent_id: int,
                    t_enter: float, entries_xy: np.ndarray) -> AgentItinerary:
    rng = substream(seed, Stage.TRACE, agent_id)
    entry = scenario_map.entry_points[int(rng.integers(len(scenario_map.entry_points)))]
    area = scenario_map.activity_areas[int(rng.integers(len(scenario_map.activity_areas)))]
    u = rng.uniform(0.0, 1.0, size=2)
    destination = GeoPoint(_r(area.x + u[0] * area.w), _r(area.y + u[1] * area.h))
    dwell = float(rng.uniform(cfg.dwell_min, cfg.dwell_max))
    exit_point = scenario_map.entry_points[nearest_index(destination, entries_xy)]
    return make_itinerary(agent_id, t_enter, entry, destination, dwell, exit_point, cfg.walk_speed)


def records_for(itineraries, sample_step: float, t_end: Optional[float] = None) -> np.ndarray:
    chunks: List[np.ndarray] = []
    for it in itineraries:
        ts = sample_times(it, sample_step, t_end)
        if len(ts) == 0:
            continue
        chunk = np.empty(len(ts), dtype=RECORD_DTYPE)
        chunk["t"] = ts
        chunk["agent_id"] = it.agent_id
        xy = np.round(positions_at(it, ts), DECIMALS)
        chunk["x"] = xy[:, 0]
        chunk["y"] = xy[:, 1]
        chunks.append(chunk)
    if not chunks:
        return np.empty(0, dtype=RECORD_DTYPE)
    records = np.concatenate(chunks)
    order = np.lexsort((records["agent_id"], records["t"]))
    return records[order]


def generate_trace(scenario_map: ScenarioMap, cfg: MobilityConfig, seed: int) -> MobilityTrace:
    """Spawn waves at entry points, walk to an activity spot, dwell, leave by the nearest entry."""
    entries_xy = as_xy(scenario_map.entry_points)
    itineraries: List[AgentItinerary] = []
    agent_id = 0
    for wave in range(cfg.n_waves):
        t_wave = wave * cfg.wave_period
        for _ in range(cfg.wave_size):
            itineraries.append(_draw_itinerary(scenario_map, cfg, seed, agent_id, t_wave, entries_xy))
            agent_id += 1

    records = records_for(itineraries, cfg.sample_step, cfg.duration)
    mobility_logger.info(f"trace: {cfg.n_waves} waves, {len(itineraries)} agents, {len(records)} records")
    return MobilityTrace(records=records, itineraries=tuple(itineraries))


def live_agents(itineraries, times: np.ndarray) -> np.ndarray:
    """|{i : t_enter <= t <= t_exit}| for every t."""
    times = np.asarray(times, dtype=float)
    enters = np.sort(np.array([it.t_enter for it in itineraries], dtype=float))
    exits = np.sort(np.array([it.t_exit for it in itineraries], dtype=float))
    entered = np.searchsorted(enters, times, side="right")
    left = np.searchsorted(exits, times, side="left")
    return (entered - left).astype(np.int64)
