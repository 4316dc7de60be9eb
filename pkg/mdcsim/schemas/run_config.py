from __future__ import annotations

from typing import List
from typing import Optional

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from mdcsim.schemas.edgesim import INFERENCE
from mdcsim.schemas.edgesim import PUS_PER_MDC
from mdcsim.schemas.edgesim import THREADS_PER_PU
from mdcsim.schemas.edgesim import TRAINING
from mdcsim.schemas.edgesim import PowerModel
from mdcsim.schemas.edgesim import ServiceName
from mdcsim.schemas.edgesim import ServiceSpec
from mdcsim.schemas.edgesim import SimulationConfig
from mdcsim.schemas.mobility import MobilityConfig
from mdcsim.schemas.placement import ScenarioTag
from mdcsim.schemas.report import DEFAULT_WARMUP


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MapSection(_Section):
    """Either a map file or the parameters of a synthetic city."""
    path: Optional[str] = None
    width: float = Field(3000.0, gt=0)
    height: float = Field(3000.0, gt=0)
    n_entries: int = Field(20, gt=0)
    n_areas: int = Field(12, gt=0)
    n_hospitals: int = Field(9, gt=0)


class PlacementSection(_Section):
    resolution: int = Field(40, gt=0)
    window: float = Field(60.0, gt=0)
    n_aps: int = Field(30, gt=0)
    n_mdcs: int = Field(3, gt=0)


class ServicesSection(_Section):
    enabled: List[ServiceName] = [ServiceName.INFERENCE, ServiceName.TRAINING]
    inference: ServiceSpec = INFERENCE
    training: ServiceSpec = TRAINING

    @field_validator("inference", "training", mode="before")
    @classmethod
    def merge_defaults(cls, value, info):
        # partial tables override the built-in service
        if isinstance(value, dict):
            base = INFERENCE if info.field_name == "inference" else TRAINING
            return {**base.model_dump(), **value}
        return value

    @field_validator("enabled")
    @classmethod
    def check_enabled(cls, value):
        if not value:
            raise ValueError("at least one service must be enabled")
        if len(set(value)) != len(value):
            raise ValueError("services listed twice")
        return value

    def specs(self) -> tuple:
        table = {ServiceName.INFERENCE: self.inference, ServiceName.TRAINING: self.training}
        return tuple(table[name] for name in self.enabled)


class SimulationSection(_Section):
    sample_interval: float = Field(60.0, gt=0)
    retry_interval: float = Field(1.0, gt=0)
    handover_step: float = Field(1.0, gt=0)
    pus_per_mdc: int = Field(PUS_PER_MDC, gt=0)
    threads_per_pu: int = Field(THREADS_PER_PU, gt=0)


class ReportSection(_Section):
    warmup: float = Field(DEFAULT_WARMUP, ge=0)


class RunConfig(_Section):
    """One experiment: every stage reads its parameters from here."""
    seed: int = Field(0, ge=0)
    scenarios: List[ScenarioTag] = list(ScenarioTag)
    out_dir: str = "out"
    jobs: int = Field(1, gt=0)
    map: MapSection = MapSection()
    mobility: MobilityConfig = MobilityConfig()
    placement: PlacementSection = PlacementSection()
    services: ServicesSection = ServicesSection()
    power: PowerModel = PowerModel()
    simulation: SimulationSection = SimulationSection()
    report: ReportSection = ReportSection()

    @field_validator("scenarios")
    @classmethod
    def dedupe_scenarios(cls, value):
        if not value:
            raise ValueError("at least one scenario tag is required")
        return list(dict.fromkeys(value))

    @model_validator(mode="after")
    def check_capacity(self):
        for spec in self.services.specs():
            if spec.threads_per_request > self.simulation.threads_per_pu:
                raise ValueError(f"{spec.name} needs more threads than a PU has")
        return self

    def simulation_config(self, record_events: bool = False) -> SimulationConfig:
        return SimulationConfig(
            duration=self.mobility.duration,
            record_events=record_events,
            **self.simulation.model_dump(),
        )
