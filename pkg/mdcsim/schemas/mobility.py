from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from mdcsim.schemas.geometry import GeoPoint

RECORD_DTYPE = np.dtype([("t", "f8"), ("agent_id", "i8"), ("x", "f8"), ("y", "f8")])


class MobilityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    wave_period: float = Field(180.0, gt=0)  # seconds between spawn waves
    wave_size: int = Field(200, gt=0)
    walk_speed: float = Field(1.4, gt=0)  # m/s
    dwell_min: float = Field(5.0, gt=0)
    dwell_max: float = Field(30.0, gt=0)
    duration: float = Field(36_000.0, gt=0)
    sample_step: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def check_dwell(self):
        if self.dwell_min > self.dwell_max:
            raise ValueError("dwell_min must not exceed dwell_max")
        return self

    @property
    def n_waves(self) -> int:
        return int(np.ceil(self.duration / self.wave_period))


@dataclass(frozen=True, slots=True)
class AgentItinerary:
    agent_id: int
    t_enter: float
    entry: GeoPoint
    destination: GeoPoint
    t_arrive: float
    t_depart: float
    exit: GeoPoint
    t_exit: float


@dataclass(frozen=True, eq=False)
class MobilityTrace:
    """records: structured array (t, agent_id, x, y) sorted by (t, agent_id)."""
    records: np.ndarray
    itineraries: Tuple[AgentItinerary, ...]

    def __post_init__(self):
        if self.records.dtype != RECORD_DTYPE:
            raise TypeError(f"records must use {RECORD_DTYPE}")

    def __eq__(self, other):
        if not isinstance(other, MobilityTrace):
            return NotImplemented
        return self.itineraries == other.itineraries and np.array_equal(self.records, other.records)

    def __len__(self):
        return len(self.records)

    @classmethod
    def empty(cls) -> MobilityTrace:
        return cls(records=np.empty(0, dtype=RECORD_DTYPE), itineraries=())
