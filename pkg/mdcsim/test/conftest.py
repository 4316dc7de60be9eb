import os

os.environ.setdefault("MDCSIM_ENV", "test")

from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from mdcsim.schemas.geometry import ActivityArea  # noqa: E402
from mdcsim.schemas.geometry import Bounds  # noqa: E402
from mdcsim.schemas.geometry import GeoPoint  # noqa: E402
from mdcsim.schemas.geometry import ScenarioMap  # noqa: E402
from mdcsim.schemas.mobility import AgentItinerary  # noqa: E402
from mdcsim.schemas.mobility import MobilityTrace  # noqa: E402
from mdcsim.schemas.placement import Placement  # noqa: E402
from mdcsim.schemas.placement import ScenarioTag  # noqa: E402
from mdcsim.services.mobility.trace_generator import records_for  # noqa: E402

REPO_ROOT = Path(__file__).resolve().parents[2]
DESK_MAP = REPO_ROOT / "data" / "desk_city.map"
DESK_CONFIG = REPO_ROOT / "configs" / "desk.toml"


def stationary(agent_id: int, p: GeoPoint, t_enter: float, t_exit: float) -> AgentItinerary:
    return AgentItinerary(agent_id=agent_id, t_enter=t_enter, entry=p, destination=p,
                          t_arrive=t_enter, t_depart=t_exit, exit=p, t_exit=t_exit)


def trace_of(itineraries, step: float = 1.0) -> MobilityTrace:
    itineraries = tuple(itineraries)
    return MobilityTrace(records=records_for(itineraries, step), itineraries=itineraries)


def single_mdc(at: GeoPoint = GeoPoint(500.0, 500.0)) -> Placement:
    return Placement(aps=(at,), mdcs=(at,), ap_to_mdc=(0,), scenario_tag=ScenarioTag.H1)


def corridor_placement() -> Placement:
    """Four APs along y=500; the west pair feeds MDC 0, the east pair MDC 1. Boundary at x=1000."""
    aps = tuple(GeoPoint(x, 500.0) for x in (250.0, 750.0, 1250.0, 1750.0))
    mdcs = (GeoPoint(500.0, 500.0), GeoPoint(1500.0, 500.0))
    return Placement(aps=aps, mdcs=mdcs, ap_to_mdc=(0, 0, 1, 1), scenario_tag=ScenarioTag.C3)


@pytest.fixture
def small_map() -> ScenarioMap:
    return ScenarioMap(
        bounds=Bounds(1000.0, 1000.0),
        entry_points=(GeoPoint(0.0, 0.0), GeoPoint(1000.0, 0.0), GeoPoint(0.0, 1000.0), GeoPoint(1000.0, 1000.0)),
        activity_areas=(ActivityArea(100.0, 100.0, 100.0, 100.0), ActivityArea(700.0, 600.0, 150.0, 120.0)),
        hospitals=(GeoPoint(150.0, 150.0), GeoPoint(500.0, 500.0), GeoPoint(800.0, 700.0)),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def desk_map_path() -> Path:
    return DESK_MAP
