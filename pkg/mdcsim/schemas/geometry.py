from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List
from typing import Literal
from typing import Tuple

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from shapely.geometry import box

MAP_SCHEMA_VERSION = 1


@dataclass(frozen=True, slots=True)
class GeoPoint:
    x: float  # meters east
    y: float  # meters north

    def distance_to(self, other: GeoPoint) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_tuple(self) -> Tuple[float, float]:
        return self.x, self.y


@dataclass(frozen=True, slots=True)
class Bounds:
    width: float
    height: float

    @property
    def center(self) -> GeoPoint:
        return GeoPoint(self.width / 2.0, self.height / 2.0)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def polygon(self):
        return box(0.0, 0.0, self.width, self.height)

    def contains(self, p: GeoPoint) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height


@dataclass(frozen=True, slots=True)
class ActivityArea:
    """Axis-aligned rectangle; (x, y) is the south-west corner."""
    x: float
    y: float
    w: float
    h: float

    def polygon(self):
        return box(self.x, self.y, self.x + self.w, self.y + self.h)


@dataclass(frozen=True)
class ScenarioMap:
    bounds: Bounds
    entry_points: Tuple[GeoPoint, ...]
    activity_areas: Tuple[ActivityArea, ...]
    hospitals: Tuple[GeoPoint, ...]

    @property
    def counts(self) -> Tuple[int, int, int]:
        return len(self.entry_points), len(self.activity_areas), len(self.hospitals)


class BoundsIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    width: float = Field(..., gt=0, allow_inf_nan=False)
    height: float = Field(..., gt=0, allow_inf_nan=False)


class ActivityAreaIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    x: float = Field(..., allow_inf_nan=False)
    y: float = Field(..., allow_inf_nan=False)
    w: float = Field(..., gt=0, allow_inf_nan=False)
    h: float = Field(..., gt=0, allow_inf_nan=False)


class MapFile(BaseModel):
    """On-disk map document (UTF-8 JSON)."""
    model_config = ConfigDict(extra="forbid")
    schema_: Literal[1] = Field(..., alias="schema")
    bounds: BoundsIn
    entry_points: List[Tuple[float, float]]
    activity_areas: List[ActivityAreaIn]
    hospitals: List[Tuple[float, float]]
