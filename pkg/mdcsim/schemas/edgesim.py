from __future__ import annotations

import enum
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import Literal
from typing import Optional
from typing import Set
from typing import Tuple

import pandas as pd
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

PUS_PER_MDC = 10
THREADS_PER_PU = 16
TCP_HEADER_BYTES = 54


class ServiceName(enum.StrEnum):
    INFERENCE = "inference"
    TRAINING = "training"


class ServiceSpec(BaseModel):
    """One monitoring service: how often it asks, how long an op runs, how big its messages are."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: ServiceName
    schedule: Literal["periodic", "uniform_gap"]
    period: Optional[float] = Field(None, gt=0)  # periodic: seconds between op starts
    gap_min: Optional[float] = Field(None, gt=0)  # uniform_gap: bounds of the gap after completion
    gap_max: Optional[float] = Field(None, gt=0)
    threads_per_request: int = Field(1, ge=1, le=THREADS_PER_PU)
    op_time: float = Field(..., gt=0)
    payload_bytes: int = Field(..., ge=0)
    header_bytes: int = Field(TCP_HEADER_BYTES, ge=0)
    total_bytes: int = Field(..., gt=0)

    @model_validator(mode="after")
    def check_consistency(self):
        if self.total_bytes != self.payload_bytes + self.header_bytes:
            raise ValueError(
                f"total_bytes {self.total_bytes} != payload {self.payload_bytes} + header {self.header_bytes}"
            )
        if self.schedule == "periodic":
            if self.period is None:
                raise ValueError("periodic services need a period")
            if self.op_time >= self.period:
                raise ValueError("op_time must be shorter than the period")
        else:
            if self.gap_min is None or self.gap_max is None:
                raise ValueError("uniform_gap services need gap_min and gap_max")
            if self.gap_min > self.gap_max:
                raise ValueError("gap_min must not exceed gap_max")
        return self

    def utilization_fraction(self, threads_per_pu: int = THREADS_PER_PU) -> float:
        return self.threads_per_request / threads_per_pu


INFERENCE = ServiceSpec(
    name=ServiceName.INFERENCE, schedule="periodic", period=60.0,
    op_time=1.17, payload_bytes=65, total_bytes=119,
)
TRAINING = ServiceSpec(
    name=ServiceName.TRAINING, schedule="uniform_gap", gap_min=1.0, gap_max=86_400.0,
    op_time=18.0, payload_bytes=20, total_bytes=74,
)
DEFAULT_SERVICES: Tuple[ServiceSpec, ...] = (INFERENCE, TRAINING)


class PowerModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    idle_w: float = Field(47.0, gt=0)
    active_w: float = Field(95.0, gt=0)

    @model_validator(mode="after")
    def check_order(self):
        if self.active_w < self.idle_w:
            raise ValueError("active_w must be >= idle_w")
        return self

    @property
    def delta_w(self) -> float:
        return self.active_w - self.idle_w


class SessionState(enum.StrEnum):
    OPEN = "open"
    REJECTED = "rejected"
    CLOSED = "closed"


@dataclass
class Session:
    session_id: int
    agent_id: int
    service: ServiceName
    mdc_id: int
    opened_t: float
    state: SessionState
    pu_index: Optional[int] = None
    threads: int = 1
    closed_t: Optional[float] = None

    @property
    def is_open(self) -> bool:
        return self.state == SessionState.OPEN


@dataclass
class Operation:
    """One executing request. Keeps running on its PU even if its session is closed under it."""
    op_id: int
    session_id: int
    agent_id: int
    service: ServiceName
    mdc_id: int
    pu_index: int
    threads: int
    start_t: float


@dataclass
class ProcessingUnit:
    index: int
    thread_slots: int = THREADS_PER_PU
    reserved: Dict[int, int] = field(default_factory=dict)  # session_id -> threads
    busy_ops: Set[int] = field(default_factory=set)

    @property
    def reserved_threads(self) -> int:
        return sum(self.reserved.values())

    @property
    def free_threads(self) -> int:
        return self.thread_slots - self.reserved_threads

    @property
    def is_busy(self) -> bool:
        return bool(self.busy_ops)


@dataclass
class ServiceCounters:
    served: int = 0
    cancelled: int = 0
    messages: int = 0
    traffic_bytes: int = 0
    thread_seconds: float = 0.0


@dataclass
class MdcState:
    mdc_id: int
    pus: list
    power_model: PowerModel
    open_sessions: Dict[Tuple[int, ServiceName], Session] = field(default_factory=dict)
    rejected_count: int = 0
    sessions_opened: int = 0
    counters: Dict[ServiceName, ServiceCounters] = field(default_factory=dict)
    busy_threads: int = 0

    @classmethod
    def create(cls, mdc_id: int, power_model: PowerModel, n_pus: int = PUS_PER_MDC,
               threads_per_pu: int = THREADS_PER_PU) -> MdcState:
        return cls(
            mdc_id=mdc_id,
            pus=[ProcessingUnit(index=i, thread_slots=threads_per_pu) for i in range(n_pus)],
            power_model=power_model,
            counters={name: ServiceCounters() for name in ServiceName},
        )

    @property
    def capacity(self) -> int:
        return sum(pu.thread_slots for pu in self.pus)

    @property
    def reserved_threads(self) -> int:
        return sum(pu.reserved_threads for pu in self.pus)

    @property
    def busy_pus(self) -> int:
        return sum(1 for pu in self.pus if pu.is_busy)


class SimulationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    duration: float = Field(36_000.0, gt=0)
    sample_interval: float = Field(60.0, gt=0)
    retry_interval: float = Field(1.0, gt=0)  # rejected sessions ask again after this long
    handover_step: float = Field(1.0, gt=0)
    pus_per_mdc: int = Field(PUS_PER_MDC, gt=0)
    threads_per_pu: int = Field(THREADS_PER_PU, gt=0)
    record_events: bool = False


SERIES_COLUMNS = [
    "t", "mdc_id", "reserved_threads", "busy_pus", "power_w", "rejections_cum",
    "served_inference_cum", "served_training_cum", "traffic_bytes_cum", "busy_threads", "live_agents",
]
POWER_STEP_COLUMNS = ["t", "mdc_id", "power_w"]
TOTALS_COLUMNS = [
    "mdc_id", "sessions_opened", "rejections",
    "served_inference", "served_training", "cancelled_inference", "cancelled_training",
    "messages_inference", "messages_training", "traffic_inference_bytes", "traffic_training_bytes",
    "thread_seconds_inference", "thread_seconds_training",
]


@dataclass
class SimulationRawResults:
    """One scenario run: sampled series, exact power timeline and end-of-run counters."""
    scenario_tag: str
    seed: int
    n_mdcs: int
    config: SimulationConfig
    power_model: PowerModel
    services: Tuple[ServiceSpec, ...]
    series: pd.DataFrame
    power_steps: pd.DataFrame
    totals: pd.DataFrame
    event_log_sha256: Optional[str] = None
    event_log: Any = None

    @property
    def duration(self) -> float:
        return self.config.duration

    @property
    def idle_power_w(self) -> float:
        """Per-MDC power with every PU idle."""
        return self.power_model.idle_w * self.config.pus_per_mdc

    @property
    def peak_power_w(self) -> float:
        return self.power_model.active_w * self.config.pus_per_mdc

    @property
    def capacity_threads(self) -> int:
        return self.config.pus_per_mdc * self.config.threads_per_pu

    def mdc_series(self, mdc_id: int) -> pd.DataFrame:
        return self.series[self.series["mdc_id"] == mdc_id].reset_index(drop=True)
