from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from dataclasses import field
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import pandas as pd

from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.core.exceptions import InvariantViolation
from mdcsim.schemas.edgesim import DEFAULT_SERVICES
from mdcsim.schemas.edgesim import POWER_STEP_COLUMNS
from mdcsim.schemas.edgesim import SERIES_COLUMNS
from mdcsim.schemas.edgesim import TOTALS_COLUMNS
from mdcsim.schemas.edgesim import MdcState
from mdcsim.schemas.edgesim import Operation
from mdcsim.schemas.edgesim import PowerModel
from mdcsim.schemas.edgesim import ServiceName
from mdcsim.schemas.edgesim import ServiceSpec
from mdcsim.schemas.edgesim import Session
from mdcsim.schemas.edgesim import SimulationConfig
from mdcsim.schemas.edgesim import SimulationRawResults
from mdcsim.schemas.engine import Event
from mdcsim.schemas.engine import EventKind
from mdcsim.schemas.engine import to_us
from mdcsim.schemas.mobility import AgentItinerary
from mdcsim.schemas.mobility import MobilityTrace
from mdcsim.services.edgesim.mdc import cancel_op
from mdcsim.services.edgesim.mdc import close_session
from mdcsim.services.edgesim.mdc import finish_op
from mdcsim.services.edgesim.mdc import handover_transfer
from mdcsim.services.edgesim.mdc import mdc_power
from mdcsim.services.edgesim.mdc import open_session
from mdcsim.services.edgesim.mdc import start_op
from mdcsim.services.edgesim.requests import first_request_time
from mdcsim.services.edgesim.requests import next_request_time
from mdcsim.services.engine.event_log import EventLog
from mdcsim.services.engine.event_queue import EventQueue
from mdcsim.services.logger import log_handover
from mdcsim.services.logger import log_stage
from mdcsim.services.rng import Stage
from mdcsim.services.rng import substream
from mdcsim.services.topology.topology import Topology


@dataclass
class AgentState:
    agent_id: int
    mdc_id: int
    sessions: Dict[ServiceName, Session] = field(default_factory=dict)
    next_start: Dict[ServiceName, Event] = field(default_factory=dict)
    retries: Dict[ServiceName, Event] = field(default_factory=dict)
    inflight: Dict[ServiceName, Operation] = field(default_factory=dict)
    rng: Optional[np.random.Generator] = None


def sample_grid(duration: float, interval: float) -> np.ndarray:
    """0, interval, 2*interval ... up to and including duration."""
    n = int(math.floor(duration / interval + 1e-9)) + 1
    return np.arange(n, dtype=np.int64) * to_us(interval)


class Simulation:
    """Replays agent itineraries against a set of MDCs on the event queue."""

    def __init__(self, itineraries: Iterable[AgentItinerary], topology: Topology, scenario_tag: str,
                 services: Sequence[ServiceSpec] = DEFAULT_SERVICES, power_model: PowerModel = PowerModel(),
                 seed: int = 0, config: SimulationConfig = SimulationConfig()):
        names = [spec.name for spec in services]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate service in {names}")
        self.itineraries = sorted(itineraries, key=lambda it: it.agent_id)
        self._by_id = {it.agent_id: it for it in self.itineraries}
        self.topology = topology
        self.scenario_tag = str(scenario_tag)
        self.services: Tuple[ServiceSpec, ...] = tuple(services)
        self.specs: Dict[ServiceName, ServiceSpec] = {spec.name: spec for spec in services}
        self.power_model = power_model
        self.seed = int(seed)
        self.config = config

        self.log = EventLog() if config.record_events else None
        self.queue = EventQueue(log=self.log)
        self.mdcs = [MdcState.create(i, power_model, config.pus_per_mdc, config.threads_per_pu)
                     for i in range(topology.n_mdcs)]
        self.agents: Dict[int, AgentState] = {}
        self.ops: Dict[int, Operation] = {}
        self.finish_events: Dict[int, Event] = {}
        self.power_steps: List[List[Tuple[float, float]]] = [[(0.0, mdc_power(m))] for m in self.mdcs]
        self.rows: List[tuple] = []
        self._session_ids = itertools.count()
        self._op_ids = itertools.count()
        self._current: Optional[Event] = None
        self._handlers = {
            EventKind.AGENT_ENTER: self._on_enter,
            EventKind.AGENT_EXIT: self._on_exit,
            EventKind.HANDOVER: self._on_handover,
            EventKind.SESSION_REQUEST: self._on_session_request,
            EventKind.TASK_START: self._on_task_start,
            EventKind.TASK_FINISH: self._on_task_finish,
            EventKind.METRIC_SAMPLE: self._on_sample,
        }

    # --- scheduling ---

    def _schedule_agents(self) -> None:
        duration = self.config.duration
        for it in self.itineraries:
            if it.t_enter > duration:
                continue
            self.queue.schedule(it.t_enter, EventKind.AGENT_ENTER, {"agent": it.agent_id})
            for t, old, new in self.topology.handover_schedule(it, self.config.handover_step, duration):
                self.queue.schedule(t, EventKind.HANDOVER, {"agent": it.agent_id, "old": old, "new": new})
            if it.t_exit <= duration:
                self.queue.schedule(it.t_exit, EventKind.AGENT_EXIT, {"agent": it.agent_id})

    def _schedule_samples(self) -> None:
        for t_us in sample_grid(self.config.duration, self.config.sample_interval):
            self.queue.schedule_us(int(t_us), EventKind.METRIC_SAMPLE)

    def _record(self, kind: str, **details) -> None:
        if self.log is not None:
            self.log.record(self.queue.now, self._current.seq, kind, **details)

    def _note_power(self, mdc: MdcState) -> None:
        t = self.queue.now
        p = mdc_power(mdc)
        steps = self.power_steps[mdc.mdc_id]
        if steps[-1][0] == t:
            steps.pop()
        if not steps or steps[-1][1] != p:
            steps.append((t, p))

    def _rng(self, agent: AgentState) -> np.random.Generator:
        if agent.rng is None:
            agent.rng = substream(self.seed, Stage.TRAINING, agent.agent_id)
        return agent.rng

    # --- sessions ---

    def _after_open(self, agent: AgentState, session: Session) -> None:
        spec = self.specs[session.service]
        mdc = self.mdcs[session.mdc_id]
        if session.is_open:
            agent.sessions[spec.name] = session
            self._record("SessionOpen", agent=agent.agent_id, service=str(spec.name), mdc=mdc.mdc_id,
                         pu=session.pu_index, session=session.session_id, threads=session.threads)
            t_first = first_request_time(spec, self.queue.now, self._rng(agent))
            agent.next_start[spec.name] = self.queue.schedule(
                t_first, EventKind.TASK_START,
                {"agent": agent.agent_id, "service": str(spec.name), "session": session.session_id},
            )
        else:
            agent.sessions.pop(spec.name, None)
            self._record("SessionReject", agent=agent.agent_id, service=str(spec.name), mdc=mdc.mdc_id,
                         threads=session.threads)
            agent.retries[spec.name] = self.queue.schedule(
                self.queue.now + self.config.retry_interval, EventKind.SESSION_REQUEST,
                {"agent": agent.agent_id, "service": str(spec.name)},
            )

    def _attempt(self, agent: AgentState, spec: ServiceSpec) -> None:
        session = open_session(self.mdcs[agent.mdc_id], agent.agent_id, spec.name, self.queue.now,
                               next(self._session_ids), spec.threads_per_request)
        self._after_open(agent, session)

    def _release(self, agent: AgentState, cancel_inflight: bool) -> None:
        """Drop pending requests and retries, close open sessions.

        In-flight ops are cancelled on exit and left to finish (detached) on handover.
        """
        for event in itertools.chain(agent.next_start.values(), agent.retries.values()):
            self.queue.cancel(event)
        agent.next_start.clear()
        agent.retries.clear()
        if cancel_inflight:
            for op in agent.inflight.values():
                self.queue.cancel(self.finish_events.pop(op.op_id))
                self.ops.pop(op.op_id)
                mdc = self.mdcs[op.mdc_id]
                cancel_op(mdc, op)
                self._note_power(mdc)
                self._record("TaskCancel", agent=agent.agent_id, service=str(op.service), mdc=op.mdc_id,
                             pu=op.pu_index, op=op.op_id)
        agent.inflight.clear()

    def _log_closes(self, agent: AgentState) -> None:
        for session in agent.sessions.values():
            if session.is_open:
                self._record("SessionClose", agent=agent.agent_id, service=str(session.service),
                             mdc=session.mdc_id, pu=session.pu_index, session=session.session_id,
                             threads=session.threads)

    # --- handlers ---

    def _on_enter(self, event: Event) -> None:
        aid = event.payload["agent"]
        it = self._itinerary(aid)
        agent = AgentState(agent_id=aid, mdc_id=self.topology.initial_mdc(it))
        self.agents[aid] = agent
        for spec in self.services:
            self._attempt(agent, spec)

    def _on_exit(self, event: Event) -> None:
        agent = self.agents.pop(event.payload["agent"], None)
        if agent is None:
            return
        self._release(agent, cancel_inflight=True)
        self._log_closes(agent)
        mdc = self.mdcs[agent.mdc_id]
        for session in list(agent.sessions.values()):
            close_session(mdc, session, self.queue.now)
        agent.sessions.clear()

    def _on_handover(self, event: Event) -> None:
        agent = self.agents.get(event.payload["agent"])
        if agent is None:
            return
        old, new = event.payload["old"], event.payload["new"]
        if agent.mdc_id != old:
            raise InvariantViolation(f"agent {agent.agent_id} is served by MDC {agent.mdc_id}, not {old}")
        log_handover(self.queue.now, agent.agent_id, old, new)
        self._release(agent, cancel_inflight=False)
        self._log_closes(agent)
        sessions = handover_transfer(self.mdcs[old], self.mdcs[new], agent.agent_id, self.queue.now,
                                     self._session_ids, self.services)
        agent.sessions.clear()
        agent.mdc_id = new
        for session in sessions:
            self._after_open(agent, session)

    def _on_session_request(self, event: Event) -> None:
        agent = self.agents.get(event.payload["agent"])
        if agent is None:
            return
        name = ServiceName(event.payload["service"])
        agent.retries.pop(name, None)
        self._attempt(agent, self.specs[name])

    def _on_task_start(self, event: Event) -> None:
        agent = self.agents[event.payload["agent"]]
        name = ServiceName(event.payload["service"])
        spec = self.specs[name]
        session = agent.sessions[name]
        if session.session_id != event.payload["session"]:
            raise InvariantViolation(f"stale request for session {event.payload['session']}")
        mdc = self.mdcs[session.mdc_id]
        op = start_op(mdc, session, spec, next(self._op_ids), self.queue.now, running=agent.inflight.get(name))
        self.ops[op.op_id] = op
        agent.inflight[name] = op
        self._record("OpStart", agent=agent.agent_id, service=str(name), mdc=mdc.mdc_id, pu=op.pu_index, op=op.op_id)
        self.finish_events[op.op_id] = self.queue.schedule(
            self.queue.now + spec.op_time, EventKind.TASK_FINISH, {"op": op.op_id}
        )
        self._note_power(mdc)
        if spec.schedule == "periodic":
            agent.next_start[name] = self.queue.schedule(
                next_request_time(spec, self.queue.now, self.queue.now, None), EventKind.TASK_START,
                dict(event.payload),
            )
        else:
            agent.next_start.pop(name, None)

    def _on_task_finish(self, event: Event) -> None:
        op = self.ops.pop(event.payload["op"])
        self.finish_events.pop(op.op_id, None)
        spec = self.specs[op.service]
        mdc = self.mdcs[op.mdc_id]
        finish_op(mdc, op, spec)
        self._note_power(mdc)

        agent = self.agents.get(op.agent_id)
        if agent is None or agent.inflight.get(op.service) is not op:
            return  # detached by a handover
        del agent.inflight[op.service]
        session = agent.sessions.get(op.service)
        if spec.schedule != "periodic" and session is not None and session.session_id == op.session_id:
            agent.next_start[op.service] = self.queue.schedule(
                next_request_time(spec, op.start_t, self.queue.now, self._rng(agent)), EventKind.TASK_START,
                {"agent": agent.agent_id, "service": str(op.service), "session": session.session_id},
            )

    def _on_sample(self, event: Event) -> None:
        t = self.queue.now
        live = len(self.agents)
        for mdc in self.mdcs:
            bound = sum(s.threads for s in mdc.open_sessions.values())
            if bound != mdc.reserved_threads:
                raise InvariantViolation(
                    f"MDC {mdc.mdc_id}: {mdc.reserved_threads} reserved threads but {bound} held by open sessions"
                )
            inference = mdc.counters[ServiceName.INFERENCE]
            training = mdc.counters[ServiceName.TRAINING]
            self.rows.append((
                t, mdc.mdc_id, mdc.reserved_threads, mdc.busy_pus, mdc_power(mdc), mdc.rejected_count,
                inference.served, training.served, inference.traffic_bytes + training.traffic_bytes,
                mdc.busy_threads, live,
            ))

    def _dispatch(self, event: Event) -> None:
        self._current = event
        self._handlers[event.kind](event)

    def _itinerary(self, agent_id: int) -> AgentItinerary:
        return self._by_id[agent_id]

    # --- run ---

    def run(self) -> SimulationRawResults:
        log_stage("simulate", f"{self.scenario_tag}: {len(self.itineraries)} agents, {len(self.mdcs)} MDCs, "
                              f"{self.config.duration:g} s")
        self._schedule_agents()
        self._schedule_samples()
        dispatched = self.queue.run_until(self.config.duration, self._dispatch)
        # ops started inside the horizon still complete and count as served
        drained = self.queue.drain(self._dispatch, kinds={EventKind.TASK_FINISH})
        log_stage("simulate", f"{self.scenario_tag}: {dispatched} events dispatched, {drained} ops drained")
        return self._results()

    def _results(self) -> SimulationRawResults:
        series = pd.DataFrame(self.rows, columns=SERIES_COLUMNS)
        steps = pd.DataFrame(
            [(t, mdc_id, p) for mdc_id, steps in enumerate(self.power_steps) for t, p in steps],
            columns=POWER_STEP_COLUMNS,
        )
        totals = pd.DataFrame([self._totals_row(mdc) for mdc in self.mdcs], columns=TOTALS_COLUMNS)
        return SimulationRawResults(
            scenario_tag=self.scenario_tag,
            seed=self.seed,
            n_mdcs=len(self.mdcs),
            config=self.config,
            power_model=self.power_model,
            services=self.services,
            series=series,
            power_steps=steps,
            totals=totals,
            event_log_sha256=self.log.sha256() if self.log is not None else None,
            event_log=self.log,
        )

    @staticmethod
    def _totals_row(mdc: MdcState) -> tuple:
        inference = mdc.counters[ServiceName.INFERENCE]
        training = mdc.counters[ServiceName.TRAINING]
        return (
            mdc.mdc_id, mdc.sessions_opened, mdc.rejected_count,
            inference.served, training.served, inference.cancelled, training.cancelled,
            inference.messages, training.messages, inference.traffic_bytes, training.traffic_bytes,
            round(inference.thread_seconds, 6), round(training.thread_seconds, 6),
        )


def run_simulation(trace: MobilityTrace, topology: Topology, scenario_tag: Optional[str] = None,
                   services: Sequence[ServiceSpec] = DEFAULT_SERVICES, power_model: PowerModel = PowerModel(),
                   seed: int = 0, config: SimulationConfig = SimulationConfig()) -> SimulationRawResults:
    tag = scenario_tag if scenario_tag is not None else topology.placement.scenario_tag
    return Simulation(trace.itineraries, topology, tag, services, power_model, seed, config).run()
