import math
import unittest

import numpy as np
import pytest
from pydantic import ValidationError

from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.mobility import MobilityConfig
from mdcsim.services.geometry.map_data import nearest_index
from mdcsim.services.mobility.trace_generator import generate_trace
from mdcsim.services.mobility.trace_generator import live_agents
from mdcsim.services.mobility.trace_generator import make_itinerary
from mdcsim.services.mobility.trace_generator import position_at
from mdcsim.services.mobility.trace_generator import records_for
from mdcsim.services.mobility.trace_generator import sample_times
from mdcsim.test.conftest import stationary


class TestItinerary(unittest.TestCase):

    def setUp(self):
        self.it = self.create_itinerary_instance()

    @staticmethod
    def create_itinerary_instance():
        return make_itinerary(
            agent_id=3, t_enter=10.0, entry=GeoPoint(0.0, 0.0), destination=GeoPoint(14.0, 0.0),
            dwell=5.0, exit_point=GeoPoint(14.0, 28.0), walk_speed=1.4,
        )

    def test_leg_times(self):
        self.assertAlmostEqual(self.it.t_arrive, 20.0)
        self.assertAlmostEqual(self.it.t_depart, 25.0)
        self.assertAlmostEqual(self.it.t_exit, 45.0)

    def test_outside_lifetime_has_no_position(self):
        self.assertIsNone(position_at(self.it, 9.999))
        self.assertIsNone(position_at(self.it, 45.001))

    def test_positions_along_the_path(self):
        self.assertEqual(position_at(self.it, 10.0), GeoPoint(0.0, 0.0))
        mid = position_at(self.it, 15.0)
        self.assertAlmostEqual(mid.x, 7.0)
        self.assertAlmostEqual(mid.y, 0.0)
        self.assertEqual(position_at(self.it, 22.0), GeoPoint(14.0, 0.0))
        back = position_at(self.it, 35.0)
        self.assertAlmostEqual(back.x, 14.0)
        self.assertAlmostEqual(back.y, 14.0)
        self.assertEqual(position_at(self.it, 45.0), GeoPoint(14.0, 28.0))

    def test_sample_grid(self):
        it = stationary(0, GeoPoint(1.0, 1.0), 0.5, 3.2)
        np.testing.assert_allclose(sample_times(it, 1.0), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(sample_times(it, 1.0, t_end=2.0), [1.0, 2.0])
        self.assertEqual(len(sample_times(stationary(1, GeoPoint(0.0, 0.0), 0.2, 0.8), 1.0)), 0)


def test_records_sorted_by_time_then_agent():
    its = [stationary(1, GeoPoint(1.0, 1.0), 0.0, 3.0), stationary(0, GeoPoint(2.0, 2.0), 1.0, 2.0)]
    records = records_for(its, 1.0)
    assert list(zip(records["t"], records["agent_id"])) == [(0.0, 1), (1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1), (3.0, 1)]


def test_live_agents_counts_closed_lifetimes():
    its = [stationary(0, GeoPoint(0.0, 0.0), 0.0, 10.0), stationary(1, GeoPoint(0.0, 0.0), 5.0, 6.0)]
    np.testing.assert_array_equal(live_agents(its, [0.0, 5.0, 6.0, 6.5, 10.0, 10.5]), [1, 2, 2, 1, 1, 0])


def test_live_agents_matches_brute_force(small_map):
    trace = generate_trace(small_map, MobilityConfig(wave_size=15, duration=1800.0), seed=4)
    times = np.arange(0.0, 1800.0, 7.0)
    expected = [sum(it.t_enter <= t <= it.t_exit for it in trace.itineraries) for t in times]
    np.testing.assert_array_equal(live_agents(trace.itineraries, times), expected)


def test_dwell_bounds_are_validated():
    with pytest.raises(ValidationError):
        MobilityConfig(dwell_min=40.0, dwell_max=30.0)


class TestGenerateTrace(unittest.TestCase):

    @pytest.fixture(autouse=True)
    def _map(self, small_map):
        self.small_map = small_map

    def setUp(self):
        self.cfg = MobilityConfig(wave_size=10, wave_period=180.0, duration=900.0)

    def test_same_seed_same_trace(self):
        self.assertEqual(generate_trace(self.small_map, self.cfg, 11), generate_trace(self.small_map, self.cfg, 11))

    def test_different_seed_different_trace(self):
        self.assertNotEqual(generate_trace(self.small_map, self.cfg, 11), generate_trace(self.small_map, self.cfg, 12))

    def test_waves_and_agent_ids(self):
        trace = generate_trace(self.small_map, self.cfg, 1)
        self.assertEqual(len(trace.itineraries), 5 * 10)
        self.assertEqual([it.agent_id for it in trace.itineraries], list(range(50)))
        self.assertEqual(sorted({it.t_enter for it in trace.itineraries}), [0.0, 180.0, 360.0, 540.0, 720.0])

    def test_agents_visit_an_area_and_leave_by_the_nearest_entry(self):
        trace = generate_trace(self.small_map, self.cfg, 2)
        entries = self.small_map.entry_points
        for it in trace.itineraries:
            self.assertIn(it.entry, entries)
            self.assertEqual(it.exit, entries[nearest_index(it.destination, entries)])
            self.assertTrue(any(area.polygon().buffer(1e-3).covers(_point(it.destination))
                                for area in self.small_map.activity_areas))
            self.assertTrue(self.cfg.dwell_min - 1e-3 <= it.t_depart - it.t_arrive <= self.cfg.dwell_max + 1e-3)

    def test_records_stay_inside_duration_and_bounds(self):
        trace = generate_trace(self.small_map, self.cfg, 3)
        self.assertLessEqual(trace.records["t"].max(), self.cfg.duration)
        self.assertTrue(np.all((trace.records["x"] >= 0) & (trace.records["x"] <= 1000)))
        self.assertTrue(np.all((trace.records["y"] >= 0) & (trace.records["y"] <= 1000)))
        keys = np.lexsort((trace.records["agent_id"], trace.records["t"]))
        np.testing.assert_array_equal(keys, np.arange(len(trace.records)))

    def test_agents_alive_at_the_horizon_keep_their_itinerary(self):
        trace = generate_trace(self.small_map, self.cfg, 3)
        last_wave = [it for it in trace.itineraries if it.t_enter == 720.0]
        self.assertTrue(all(it.t_exit > self.cfg.duration for it in last_wave))
        for it in last_wave:
            times = trace.records["t"][trace.records["agent_id"] == it.agent_id]
            self.assertEqual(len(times), 181)
            self.assertEqual(times.max(), self.cfg.duration)


def _point(p):
    from shapely.geometry import Point
    return Point(p.x, p.y)


class _StepWalker:
    """Walks an itinerary forward in fixed time steps at the walking speed."""

    def __init__(self, it, speed, dt=0.5):
        self.it = it
        self.speed = speed
        self.dt = dt
        self.t = it.t_enter
        self.x, self.y = it.entry.x, it.entry.y
        self.phase = 0  # 0 to destination, 1 dwelling, 2 to exit, 3 gone

    def _move_towards(self, target, until):
        remaining = math.hypot(target.x - self.x, target.y - self.y)
        if self.t + remaining / self.speed <= until:
            self.t += remaining / self.speed
            self.x, self.y = target.x, target.y
            self.phase += 1
            return
        f = self.speed * (until - self.t) / remaining
        self.x += f * (target.x - self.x)
        self.y += f * (target.y - self.y)
        self.t = until

    def advance(self, t):
        while self.t < t:
            until = min(self.t + self.dt, t)
            if self.phase == 0:
                self._move_towards(self.it.destination, until)
            elif self.phase == 1:
                if until >= self.it.t_depart:
                    self.t = max(self.t, self.it.t_depart)
                    self.phase = 2
                else:
                    self.t = until
            elif self.phase == 2:
                self._move_towards(self.it.exit, until)
            else:
                self.t = until
        return self.x, self.y


def test_position_matches_a_step_walker():
    rng = np.random.default_rng(17)
    checked = 0
    for agent_id in range(50):
        speed = float(rng.uniform(0.8, 2.0))
        entry, destination, exit_point = (GeoPoint(*map(float, rng.uniform(0, 1000, size=2))) for _ in range(3))
        it = make_itinerary(agent_id, float(rng.uniform(0, 100)), entry, destination,
                            float(rng.uniform(5, 60)), exit_point, speed)
        walker = _StepWalker(it, speed)
        for t in np.sort(rng.uniform(it.t_enter - 20.0, it.t_exit + 20.0, size=20)):
            p = position_at(it, float(t))
            if t < it.t_enter or t > it.t_exit:
                assert p is None
                continue
            x, y = walker.advance(float(t))
            assert math.hypot(p.x - x, p.y - y) < 1e-2, (agent_id, float(t))
            checked += 1
    assert checked > 500
