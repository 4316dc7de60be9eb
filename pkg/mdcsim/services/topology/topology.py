from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np

from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.mobility import AgentItinerary
from mdcsim.schemas.placement import Placement
from mdcsim.services.geometry.map_data import PointsLike
from mdcsim.services.geometry.map_data import as_xy
from mdcsim.services.geometry.map_data import nearest_indices
from mdcsim.services.mobility.trace_generator import positions_at
from mdcsim.services.mobility.trace_generator import sample_times


@dataclass(frozen=True, slots=True)
class HandoverEvent:
    t: float
    agent_id: int
    old_mdc: int
    new_mdc: int


class Topology:
    """Nearest AP, then that AP's MDC."""

    def __init__(self, placement: Placement):
        self.placement = placement
        self._aps = as_xy(placement.aps)
        self._ap_to_mdc = np.asarray(placement.ap_to_mdc, dtype=np.int64)

    @property
    def n_mdcs(self) -> int:
        return self.placement.n_mdcs

    def serving_mdcs(self, points: PointsLike) -> np.ndarray:
        return self._ap_to_mdc[nearest_indices(points, self._aps)]

    def serving_mdc(self, p: GeoPoint) -> int:
        return int(self.serving_mdcs(np.array([[p.x, p.y]], dtype=float))[0])

    def handover_schedule(self, it: AgentItinerary, sample_step: float,
                          t_end: Optional[float] = None) -> List[Tuple[float, int, int]]:
        """(t, old, new) at every sample where the serving MDC differs from the previous sample.

        The entry instant is the reference for the first sample, matching initial_mdc.
        """
        ts = sample_times(it, sample_step, t_end)
        if len(ts) == 0 or ts[0] > it.t_enter:
            ts = np.concatenate(([it.t_enter], ts))
        if len(ts) < 2:
            return []
        mdcs = self.serving_mdcs(positions_at(it, ts))
        changes = np.flatnonzero(mdcs[1:] != mdcs[:-1]) + 1
        return [(float(ts[i]), int(mdcs[i - 1]), int(mdcs[i])) for i in changes]

    def initial_mdc(self, it: AgentItinerary) -> int:
        return self.serving_mdc(it.entry)

    def merged_schedule(self, itineraries: Iterable[AgentItinerary], sample_step: float,
                        t_end: Optional[float] = None) -> List[HandoverEvent]:
        """All agents' handovers ordered by (t, agent_id)."""
        events = [
            HandoverEvent(t, it.agent_id, old, new)
            for it in itineraries
            for t, old, new in self.handover_schedule(it, sample_step, t_end)
        ]
        events.sort(key=lambda e: (e.t, e.agent_id))
        return events


def serving_mdc(p: GeoPoint, placement: Placement) -> int:
    return Topology(placement).serving_mdc(p)


def handover_schedule(it: AgentItinerary, placement: Placement, sample_step: float) -> List[Tuple[float, int, int]]:
    return Topology(placement).handover_schedule(it, sample_step)
