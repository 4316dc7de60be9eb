"""State transitions of one Micro Data Center: first-fit reservation, op execution, idle/active power."""
from __future__ import annotations

from typing import Iterable
from typing import List

from mdcsim.core.exceptions import DuplicateSessionError
from mdcsim.core.exceptions import OverlapFault
from mdcsim.schemas.edgesim import MdcState
from mdcsim.schemas.edgesim import Operation
from mdcsim.schemas.edgesim import PowerModel
from mdcsim.schemas.edgesim import ProcessingUnit
from mdcsim.schemas.edgesim import ServiceName
from mdcsim.schemas.edgesim import ServiceSpec
from mdcsim.schemas.edgesim import Session
from mdcsim.schemas.edgesim import SessionState
from mdcsim.services.logger import log_rejection
from mdcsim.services.logger import log_session


def first_fit(pus: Iterable[ProcessingUnit], threads: int = 1):
    """Lowest-index PU with room for `threads` more reservations, or None."""
    for pu in pus:
        if pu.free_threads >= threads:
            return pu
    return None


def open_session(mdc: MdcState, agent_id: int, service: ServiceName, t: float, session_id: int,
                 threads: int = 1) -> Session:
    key = (agent_id, ServiceName(service))
    if key in mdc.open_sessions:
        raise DuplicateSessionError(f"agent {agent_id} already holds a {service} session at MDC {mdc.mdc_id}")

    session = Session(session_id=session_id, agent_id=agent_id, service=ServiceName(service), mdc_id=mdc.mdc_id,
                      opened_t=t, state=SessionState.REJECTED, threads=threads)
    pu = first_fit(mdc.pus, threads)
    if pu is None:
        mdc.rejected_count += 1
        log_rejection(t, mdc.mdc_id, agent_id, service, mdc.rejected_count)
        return session

    pu.reserved[session_id] = threads
    session.state = SessionState.OPEN
    session.pu_index = pu.index
    mdc.open_sessions[key] = session
    mdc.sessions_opened += 1
    log_session(t, mdc.mdc_id, agent_id, service, "open", pu.index)
    return session


def close_session(mdc: MdcState, session: Session, t: float) -> None:
    """Free the reservation. An op still running on the thread is left alone."""
    if not session.is_open:
        return
    mdc.pus[session.pu_index].reserved.pop(session.session_id, None)
    mdc.open_sessions.pop((session.agent_id, session.service), None)
    session.state = SessionState.CLOSED
    session.closed_t = t
    log_session(t, mdc.mdc_id, session.agent_id, session.service, "close", session.pu_index)


def start_op(mdc: MdcState, session: Session, spec: ServiceSpec, op_id: int, t: float,
             running: Operation | None = None) -> Operation:
    if running is not None:
        raise OverlapFault(
            f"{spec.name} request of agent {session.agent_id} at t={t:.3f} while op {running.op_id} "
            f"(started {running.start_t:.3f}) is still executing"
        )
    if not session.is_open:
        raise OverlapFault(f"op requested on {session.state} session {session.session_id}")
    op = Operation(op_id=op_id, session_id=session.session_id, agent_id=session.agent_id, service=spec.name,
                   mdc_id=mdc.mdc_id, pu_index=session.pu_index, threads=session.threads, start_t=t)
    mdc.pus[op.pu_index].busy_ops.add(op_id)
    mdc.busy_threads += op.threads
    counters = mdc.counters[spec.name]
    counters.messages += 1
    counters.traffic_bytes += spec.total_bytes
    return op


def finish_op(mdc: MdcState, op: Operation, spec: ServiceSpec) -> None:
    mdc.pus[op.pu_index].busy_ops.discard(op.op_id)
    mdc.busy_threads -= op.threads
    counters = mdc.counters[spec.name]
    counters.served += 1
    counters.messages += 1
    counters.traffic_bytes += spec.total_bytes
    counters.thread_seconds += spec.op_time * op.threads


def cancel_op(mdc: MdcState, op: Operation) -> None:
    mdc.pus[op.pu_index].busy_ops.discard(op.op_id)
    mdc.busy_threads -= op.threads
    mdc.counters[op.service].cancelled += 1


def pu_power(pu: ProcessingUnit, power_model: PowerModel) -> float:
    return power_model.active_w if pu.is_busy else power_model.idle_w


def mdc_power(mdc: MdcState) -> float:
    return sum(pu_power(pu, mdc.power_model) for pu in mdc.pus)


def handover_transfer(old: MdcState, new: MdcState, agent_id: int, t: float, session_ids: Iterable[int],
                      services: Iterable[ServiceSpec] | None = None) -> List[Session]:
    """Close the agent's sessions at `old` and open one per service at `new`.

    Services default to those the agent held at `old`. Returned sessions may be rejected;
    the rejection is counted at `new`.
    """
    held = [s for (a, _), s in sorted(old.open_sessions.items(), key=lambda kv: kv[1].session_id) if a == agent_id]
    if services is None:
        names = [s.service for s in held]
        threads = {s.service: s.threads for s in held}
    else:
        services = list(services)
        names = [spec.name for spec in services]
        threads = {spec.name: spec.threads_per_request for spec in services}
    for session in held:
        close_session(old, session, t)
    ids = iter(session_ids)
    return [open_session(new, agent_id, name, t, next(ids), threads[name]) for name in names]
