from __future__ import annotations

import heapq
from typing import Any
from typing import Callable
from typing import Collection
from typing import Dict
from typing import List
from typing import Optional

from mdcsim.core.exceptions import CausalityError
from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.core.exceptions import SimulationError
from mdcsim.schemas.engine import Event
from mdcsim.schemas.engine import EventKind
from mdcsim.schemas.engine import to_seconds
from mdcsim.schemas.engine import to_us
from mdcsim.services.engine.event_log import EventLog

Handler = Callable[[Event], None]


class EventQueue:
    """Single-threaded event list; equal timestamps pop in insertion order."""

    def __init__(self, log: Optional[EventLog] = None):
        self._heap: List[Event] = []
        self._seq = 0
        self._now_us = 0
        self._live = 0
        self.log = log
        self.dispatched = 0

    def __len__(self):
        return self._live

    @property
    def now(self) -> float:
        return to_seconds(self._now_us)

    @property
    def now_us(self) -> int:
        return self._now_us

    def schedule(self, t: float, kind: EventKind, payload: Optional[Dict[str, Any]] = None) -> Event:
        return self.schedule_us(to_us(t), kind, payload)

    def schedule_us(self, t_us: int, kind: EventKind, payload: Optional[Dict[str, Any]] = None) -> Event:
        if t_us < self._now_us:
            raise CausalityError(
                f"{kind} scheduled at t={to_seconds(t_us):.6f} before now={self.now:.6f}"
            )
        event = Event(t_us=int(t_us), seq=self._seq, kind=EventKind(kind), payload=dict(payload or {}))
        self._seq += 1
        self._live += 1
        heapq.heappush(self._heap, event)
        return event

    def cancel(self, event: Optional[Event]) -> None:
        """Lazy removal: the event stays in the heap and is skipped on pop."""
        if event is None or event.cancelled:
            return
        event.cancelled = True
        self._live -= 1

    def _discard_cancelled(self) -> None:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)

    def peek(self) -> Optional[Event]:
        self._discard_cancelled()
        return self._heap[0] if self._heap else None

    def pop_next(self) -> Optional[Event]:
        self._discard_cancelled()
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)
        self._live -= 1
        self._now_us = event.t_us
        return event

    def _dispatch(self, event: Event, handler: Handler) -> None:
        if self.log is not None:
            self.log.record_event(event)
        try:
            handler(event)
        except SimulationError:
            raise
        except Exception as e:
            raise SimulationError(event, e) from e
        self.dispatched += 1

    def run_until(self, t_end: float, handler: Handler) -> int:
        """Dispatch every event with t <= t_end; the clock ends at t_end. Returns the dispatch count."""
        end_us = to_us(t_end)
        if end_us < self._now_us:
            raise InvalidParameterError(f"run_until({t_end}) is before now={self.now}")
        count = 0
        while True:
            head = self.peek()
            if head is None or head.t_us > end_us:
                break
            self._dispatch(self.pop_next(), handler)
            count += 1
        self._now_us = end_us
        return count

    def drain(self, handler: Handler, kinds: Collection[EventKind]) -> int:
        """Empty the queue, dispatching only the given kinds; the rest are dropped unseen."""
        count = 0
        while True:
            event = self.pop_next()
            if event is None:
                return count
            if event.kind in kinds:
                self._dispatch(event, handler)
                count += 1
