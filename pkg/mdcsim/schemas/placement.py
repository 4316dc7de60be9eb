from __future__ import annotations

import enum
from dataclasses import dataclass
from dataclasses import field
from typing import List
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict

from mdcsim.schemas.geometry import Bounds
from mdcsim.schemas.geometry import GeoPoint


class ScenarioTag(enum.StrEnum):
    C3 = "C3"  # clustering-placed MDCs
    H1 = "H1"  # single MDC at the hospital nearest the centre
    H3 = "H3"  # C3 MDCs snapped to their nearest hospitals
    H9 = "H9"  # one MDC per hospital


HOSPITAL_TAGS = (ScenarioTag.H1, ScenarioTag.H3, ScenarioTag.H9)


@dataclass(frozen=True, eq=False)
class PresenceGrid:
    """cells[iy, ix] = max over windows of distinct agents seen in the cell."""
    resolution: int
    window: float
    bounds: Bounds
    cells: np.ndarray

    @property
    def cell_size(self) -> Tuple[float, float]:
        return self.bounds.width / self.resolution, self.bounds.height / self.resolution

    def cell_centers(self) -> np.ndarray:
        """(resolution*resolution, 2) centres in the same row-major order as cells.ravel()."""
        cw, ch = self.cell_size
        iy, ix = np.indices((self.resolution, self.resolution))
        return np.column_stack(((ix.ravel() + 0.5) * cw, (iy.ravel() + 0.5) * ch))

    def __eq__(self, other):
        if not isinstance(other, PresenceGrid):
            return NotImplemented
        return (self.resolution == other.resolution and self.window == other.window
                and self.bounds == other.bounds and np.array_equal(self.cells, other.cells))


@dataclass(frozen=True)
class Placement:
    aps: Tuple[GeoPoint, ...]
    mdcs: Tuple[GeoPoint, ...]
    ap_to_mdc: Tuple[int, ...]
    scenario_tag: ScenarioTag

    @property
    def n_mdcs(self) -> int:
        return len(self.mdcs)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia_history: List[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else 0.0


class PlacementFile(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario_tag: ScenarioTag
    aps: List[Tuple[float, float]]
    mdcs: List[Tuple[float, float]]
    ap_to_mdc: List[int]
