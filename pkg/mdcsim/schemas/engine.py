from __future__ import annotations

import enum
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict

US_PER_SECOND = 1_000_000


def to_us(t: float) -> int:
    return int(round(float(t) * US_PER_SECOND))


def to_seconds(t_us: int) -> float:
    return t_us / US_PER_SECOND


class EventKind(enum.StrEnum):
    AGENT_ENTER = "AgentEnter"
    AGENT_EXIT = "AgentExit"
    HANDOVER = "Handover"
    SESSION_REQUEST = "SessionRequest"
    TASK_START = "TaskStart"
    TASK_FINISH = "TaskFinish"
    METRIC_SAMPLE = "MetricSample"


@dataclass(eq=False)
class Event:
    """Queue entry. Ordered by (t_us, seq); seq is assigned by the queue."""
    t_us: int
    seq: int
    kind: EventKind
    payload: Dict[str, Any] = field(default_factory=dict)
    cancelled: bool = False

    @property
    def t(self) -> float:
        return to_seconds(self.t_us)

    def __lt__(self, other: Event) -> bool:
        return (self.t_us, self.seq) < (other.t_us, other.seq)

    def __str__(self):
        return f"{self.kind}(t={self.t:.6f}, seq={self.seq}, {self.payload})"
