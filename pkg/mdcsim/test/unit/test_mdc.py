import itertools
import unittest

import numpy as np
import pytest

from mdcsim.core.exceptions import DuplicateSessionError
from mdcsim.core.exceptions import OverlapFault
from mdcsim.schemas.edgesim import DEFAULT_SERVICES
from mdcsim.schemas.edgesim import INFERENCE
from mdcsim.schemas.edgesim import TRAINING
from mdcsim.schemas.edgesim import MdcState
from mdcsim.schemas.edgesim import PowerModel
from mdcsim.schemas.edgesim import ServiceName
from mdcsim.schemas.edgesim import ServiceSpec
from mdcsim.schemas.edgesim import SessionState
from mdcsim.services.edgesim.mdc import cancel_op
from mdcsim.services.edgesim.mdc import close_session
from mdcsim.services.edgesim.mdc import finish_op
from mdcsim.services.edgesim.mdc import first_fit
from mdcsim.services.edgesim.mdc import handover_transfer
from mdcsim.services.edgesim.mdc import mdc_power
from mdcsim.services.edgesim.mdc import open_session
from mdcsim.services.edgesim.mdc import start_op


class TestReservation(unittest.TestCase):

    def setUp(self):
        self.mdc = self.create_mdc_instance()

    @staticmethod
    def create_mdc_instance(mdc_id=0):
        return MdcState.create(mdc_id, PowerModel())

    def fill(self, n, service=ServiceName.INFERENCE):
        return [open_session(self.mdc, agent, service, 0.0, agent) for agent in range(n)]

    def test_capacity_is_160_threads(self):
        sessions = self.fill(160)
        self.assertTrue(all(s.is_open for s in sessions))
        self.assertEqual(self.mdc.reserved_threads, 160)
        self.assertEqual([s.pu_index for s in sessions[:17]], [0] * 16 + [1])
        self.assertEqual(self.mdc.rejected_count, 0)

    def test_161st_session_is_rejected(self):
        self.fill(160)
        extra = open_session(self.mdc, 999, ServiceName.INFERENCE, 3.0, 999)
        self.assertEqual(extra.state, SessionState.REJECTED)
        self.assertIsNone(extra.pu_index)
        self.assertEqual(self.mdc.rejected_count, 1)
        self.assertEqual(self.mdc.reserved_threads, 160)
        self.assertNotIn((999, ServiceName.INFERENCE), self.mdc.open_sessions)

    def test_freed_slot_is_reused_first_fit(self):
        sessions = self.fill(40)
        close_session(self.mdc, sessions[3], 5.0)
        self.assertEqual(sessions[3].state, SessionState.CLOSED)
        self.assertEqual(sessions[3].closed_t, 5.0)
        again = open_session(self.mdc, 500, ServiceName.INFERENCE, 6.0, 500)
        self.assertEqual(again.pu_index, 0)

    def test_one_session_per_agent_and_service(self):
        open_session(self.mdc, 1, ServiceName.INFERENCE, 0.0, 1)
        open_session(self.mdc, 1, ServiceName.TRAINING, 0.0, 2)
        with self.assertRaises(DuplicateSessionError):
            open_session(self.mdc, 1, ServiceName.INFERENCE, 1.0, 3)

    def test_multi_thread_requests_skip_crowded_pus(self):
        self.fill(10)
        session = open_session(self.mdc, 100, ServiceName.TRAINING, 0.0, 100, threads=8)
        self.assertEqual(session.pu_index, 1)
        self.assertIs(first_fit(self.mdc.pus, 6), self.mdc.pus[0])
        self.assertIs(first_fit(self.mdc.pus, 7), self.mdc.pus[1])

    def test_closing_twice_is_harmless(self):
        (session,) = self.fill(1)
        close_session(self.mdc, session, 1.0)
        close_session(self.mdc, session, 2.0)
        self.assertEqual(session.closed_t, 1.0)
        self.assertEqual(self.mdc.reserved_threads, 0)


class TestOperations(unittest.TestCase):

    def setUp(self):
        self.mdc = MdcState.create(0, PowerModel())
        self.session = open_session(self.mdc, 1, ServiceName.INFERENCE, 0.0, 10)

    def test_power_follows_busy_pus(self):
        self.assertEqual(mdc_power(self.mdc), 470.0)
        op = start_op(self.mdc, self.session, INFERENCE, 0, 0.0)
        self.assertEqual(mdc_power(self.mdc), 518.0)
        self.assertEqual(self.mdc.busy_pus, 1)
        finish_op(self.mdc, op, INFERENCE)
        self.assertEqual(mdc_power(self.mdc), 470.0)

    def test_all_pus_busy_draws_peak_power(self):
        for agent in range(2, 2 + 160 - 1):
            open_session(self.mdc, agent, ServiceName.INFERENCE, 0.0, 100 + agent)
        for pu in self.mdc.pus:
            pu.busy_ops.add(-pu.index - 1)
        self.assertEqual(mdc_power(self.mdc), 950.0)

    def test_served_op_counts_two_messages(self):
        op = start_op(self.mdc, self.session, INFERENCE, 0, 0.0)
        counters = self.mdc.counters[ServiceName.INFERENCE]
        self.assertEqual((counters.messages, counters.traffic_bytes), (1, 119))
        finish_op(self.mdc, op, INFERENCE)
        self.assertEqual((counters.served, counters.messages, counters.traffic_bytes), (1, 2, 238))
        self.assertAlmostEqual(counters.thread_seconds, 1.17)
        self.assertEqual(self.mdc.busy_threads, 0)

    def test_cancelled_op_sends_only_the_request(self):
        op = start_op(self.mdc, self.session, INFERENCE, 0, 0.0)
        cancel_op(self.mdc, op)
        counters = self.mdc.counters[ServiceName.INFERENCE]
        self.assertEqual((counters.served, counters.cancelled, counters.messages), (0, 1, 1))
        self.assertEqual(self.mdc.busy_pus, 0)

    def test_overlapping_op_is_a_fault(self):
        running = start_op(self.mdc, self.session, INFERENCE, 0, 0.0)
        with self.assertRaises(OverlapFault):
            start_op(self.mdc, self.session, INFERENCE, 1, 0.5, running=running)

    def test_op_on_a_closed_session_is_a_fault(self):
        close_session(self.mdc, self.session, 1.0)
        with self.assertRaises(OverlapFault):
            start_op(self.mdc, self.session, INFERENCE, 0, 2.0)

    def test_op_outlives_its_session(self):
        op = start_op(self.mdc, self.session, INFERENCE, 0, 0.0)
        close_session(self.mdc, self.session, 0.5)
        self.assertEqual(self.mdc.busy_pus, 1)
        self.assertEqual(self.mdc.reserved_threads, 0)
        finish_op(self.mdc, op, INFERENCE)
        self.assertEqual(self.mdc.counters[ServiceName.INFERENCE].served, 1)


class TestHandoverTransfer(unittest.TestCase):

    def setUp(self):
        self.old = MdcState.create(0, PowerModel())
        self.new = MdcState.create(1, PowerModel())
        open_session(self.old, 7, ServiceName.INFERENCE, 0.0, 0)
        open_session(self.old, 7, ServiceName.TRAINING, 0.0, 1)
        open_session(self.old, 8, ServiceName.INFERENCE, 0.0, 2)

    def test_reservations_move_with_the_agent(self):
        before = self.old.reserved_threads + self.new.reserved_threads
        sessions = handover_transfer(self.old, self.new, 7, 10.0, iter([3, 4]), DEFAULT_SERVICES)
        self.assertEqual([s.service for s in sessions], [ServiceName.INFERENCE, ServiceName.TRAINING])
        self.assertTrue(all(s.is_open and s.mdc_id == 1 for s in sessions))
        self.assertEqual(self.old.reserved_threads, 1)
        self.assertEqual(self.new.reserved_threads, 2)
        self.assertEqual(self.old.reserved_threads + self.new.reserved_threads, before)

    def test_held_services_are_reopened_by_default(self):
        sessions = handover_transfer(self.old, self.new, 8, 10.0, iter([5]))
        self.assertEqual([(s.service, s.session_id) for s in sessions], [(ServiceName.INFERENCE, 5)])

    def test_full_target_counts_the_rejection_there(self):
        for agent in range(100, 260):
            open_session(self.new, agent, ServiceName.INFERENCE, 0.0, 1000 + agent)
        sessions = handover_transfer(self.old, self.new, 7, 10.0, iter([3, 4]), DEFAULT_SERVICES)
        self.assertTrue(all(s.state == SessionState.REJECTED for s in sessions))
        self.assertEqual(self.new.rejected_count, 2)
        self.assertEqual(self.old.rejected_count, 0)
        self.assertEqual(self.old.reserved_threads, 1)

    def test_random_handovers_conserve_threads(self):
        rng = np.random.default_rng(5)
        mdcs = [MdcState.create(i, PowerModel(), n_pus=2, threads_per_pu=4) for i in range(4)]
        session_ids = itertools.count()
        where = {}
        held = {}
        for agent in range(20):
            where[agent] = int(rng.integers(4))
            held[agent] = [open_session(mdcs[where[agent]], agent, spec.name, 0.0, next(session_ids))
                           for spec in DEFAULT_SERVICES]
        for step in range(300):
            agent = int(rng.integers(20))
            new = int((where[agent] + rng.integers(1, 4)) % 4)
            held[agent] = handover_transfer(mdcs[where[agent]], mdcs[new], agent, float(step), session_ids,
                                            DEFAULT_SERVICES)
            where[agent] = new
            expected = sum(s.threads for sessions in held.values() for s in sessions if s.is_open)
            self.assertEqual(sum(m.reserved_threads for m in mdcs), expected)
            for m in mdcs:
                self.assertTrue(all(pu.reserved_threads <= pu.thread_slots for pu in m.pus))
                owners = {a for a, _ in m.open_sessions}
                self.assertTrue(all(where[a] == m.mdc_id for a in owners))
        self.assertGreater(sum(m.rejected_count for m in mdcs), 0)


@pytest.mark.parametrize("idle,active", [(47.0, 95.0), (10.0, 10.0)])
def test_power_model_accepts_ordered_values(idle, active):
    model = PowerModel(idle_w=idle, active_w=active)
    assert model.delta_w == active - idle


def test_power_model_rejects_inverted_values():
    with pytest.raises(ValueError):
        PowerModel(idle_w=95.0, active_w=47.0)


def test_service_specs_are_consistent():
    assert INFERENCE.total_bytes == INFERENCE.payload_bytes + INFERENCE.header_bytes
    assert TRAINING.total_bytes == 74
    with pytest.raises(ValueError):
        ServiceSpec(name="inference", schedule="periodic", period=1.0, op_time=1.17, payload_bytes=65,
                    total_bytes=119)
    with pytest.raises(ValueError):
        ServiceSpec(name="training", schedule="uniform_gap", gap_min=5.0, gap_max=1.0, op_time=18.0,
                    payload_bytes=20, total_bytes=75)
