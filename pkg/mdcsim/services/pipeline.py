"""The five stages. Each reads its predecessor's files under out_dir and writes its own."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional

from mdcsim.schemas.placement import ScenarioTag
from mdcsim.schemas.run_config import RunConfig
from mdcsim.services.common import require_input
from mdcsim.services.common import sha256_files
from mdcsim.services.edgesim.raw_io import MANIFEST_FILE
from mdcsim.services.edgesim.raw_io import read_raw_results
from mdcsim.services.edgesim.raw_io import write_raw_results
from mdcsim.services.edgesim.simulation import run_simulation
from mdcsim.services.geometry.map_data import generate_synthetic_map
from mdcsim.services.geometry.map_data import load_map
from mdcsim.services.geometry.map_data import write_map
from mdcsim.services.logger import log_stage
from mdcsim.services.metrics.aggregate import build_report
from mdcsim.services.metrics.render import render_report
from mdcsim.services.mobility.trace_generator import generate_trace
from mdcsim.services.mobility.trace_io import read_trace
from mdcsim.services.mobility.trace_io import trace_files
from mdcsim.services.mobility.trace_io import trace_hash
from mdcsim.services.mobility.trace_io import write_trace
from mdcsim.services.placement.presence import build_presence_grid
from mdcsim.services.placement.presence import write_grid_csv
from mdcsim.services.placement.scenarios import derive_scenario
from mdcsim.services.placement.scenarios import place
from mdcsim.services.placement.scenarios import read_placement
from mdcsim.services.placement.scenarios import write_placement
from mdcsim.services.run_config import config_echo
from mdcsim.services.topology.topology import Topology


@dataclass(frozen=True)
class ArtifactLayout:
    root: Path

    @property
    def map(self) -> Path:
        return self.root / "map.json"

    @property
    def trace(self) -> Path:
        return self.root / "trace.csv"

    @property
    def grid(self) -> Path:
        return self.root / "grid.csv"

    def placement(self, tag: ScenarioTag | str) -> Path:
        return self.root / f"placement_{tag}.json"

    def raw(self, tag: ScenarioTag | str) -> Path:
        return self.root / "raw" / str(tag)

    @property
    def report(self) -> Path:
        return self.root / "report"


def layout(config: RunConfig) -> ArtifactLayout:
    return ArtifactLayout(Path(config.out_dir))


def gen_map(config: RunConfig) -> Path:
    paths = layout(config)
    if config.map.path is not None:
        scenario_map = load_map(config.map.path)
        log_stage("gen-map", f"loaded {config.map.path}")
    else:
        m = config.map
        scenario_map = generate_synthetic_map(m.width, m.height, m.n_entries, m.n_areas, m.n_hospitals, config.seed)
        log_stage("gen-map", f"synthetic {m.width:g} x {m.height:g} m city")
    return write_map(scenario_map, paths.map)


def gen_trace(config: RunConfig) -> str:
    """Writes the trace and returns its content hash."""
    paths = layout(config)
    scenario_map = load_map(require_input(paths.map, "gen-trace"))
    trace = generate_trace(scenario_map, config.mobility, config.seed)
    write_trace(trace, paths.trace)
    digest = trace_hash(paths.trace)
    log_stage("gen-trace", f"{len(trace.itineraries)} agents, sha256 {digest}")
    return digest


def place_scenarios(config: RunConfig) -> List[Path]:
    paths = layout(config)
    scenario_map = load_map(require_input(paths.map, "place"))
    for f in trace_files(paths.trace):
        require_input(f, "place")
    trace = read_trace(paths.trace)

    p = config.placement
    grid = build_presence_grid(trace, scenario_map.bounds, p.resolution, p.window)
    write_grid_csv(grid, paths.grid)
    base = place(grid, p.n_aps, p.n_mdcs, config.seed)
    written = []
    for tag in config.scenarios:
        placement = derive_scenario(base, scenario_map, tag)
        written.append(write_placement(placement, paths.placement(tag)))
        log_stage("place", f"{tag}: {placement.n_mdcs} MDCs, {len(placement.aps)} APs")
    return written


def simulate_scenario(config: RunConfig, tag: ScenarioTag | str, record_events: bool = False) -> Path:
    paths = layout(config)
    placement_path = require_input(paths.placement(tag), "simulate")
    trace_paths = [require_input(f, "simulate") for f in trace_files(paths.trace)]
    trace = read_trace(paths.trace)
    placement = read_placement(placement_path)

    raw = run_simulation(
        trace,
        Topology(placement),
        str(tag),
        config.services.specs(),
        config.power,
        config.seed,
        config.simulation_config(record_events=record_events),
    )
    inputs = {
        "trace_sha256": sha256_files(trace_paths),
        "placement_sha256": sha256_files([placement_path]),
    }
    return write_raw_results(raw, paths.raw(tag), inputs=inputs, config=config_echo(config),
                             write_events=record_events)


def simulate_all(config: RunConfig, record_events: bool = False, jobs: Optional[int] = None) -> Dict[str, Path]:
    """Scenario runs are independent; with jobs > 1 they run in separate processes."""
    tags = [str(tag) for tag in config.scenarios]
    jobs = min(jobs or config.jobs, len(tags))
    if jobs <= 1:
        return {tag: simulate_scenario(config, tag, record_events) for tag in tags}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        outputs = pool.map(simulate_scenario, [config] * len(tags), tags, [record_events] * len(tags))
        return dict(zip(tags, outputs))


def report(config: RunConfig) -> List[Path]:
    paths = layout(config)
    raws = {}
    for tag in config.scenarios:
        require_input(paths.raw(tag) / MANIFEST_FILE, "report")
        raws[str(tag)] = read_raw_results(paths.raw(tag))
    built = build_report(raws, config.report.warmup)
    written = render_report(built, paths.report)
    log_stage("report", f"{len(written)} files under {paths.report}")
    return written


def run_pipeline(config: RunConfig, record_events: bool = False, jobs: Optional[int] = None) -> List[Path]:
    gen_map(config)
    gen_trace(config)
    place_scenarios(config)
    simulate_all(config, record_events, jobs)
    return report(config)
