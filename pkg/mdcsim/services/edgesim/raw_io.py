from __future__ import annotations

from pathlib import Path
from typing import Any
from typing import Dict
from typing import Optional

import pandas as pd
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import ValidationError

from mdcsim.core.exceptions import ArtifactParseError
from mdcsim.schemas.edgesim import POWER_STEP_COLUMNS
from mdcsim.schemas.edgesim import SERIES_COLUMNS
from mdcsim.schemas.edgesim import TOTALS_COLUMNS
from mdcsim.schemas.edgesim import PowerModel
from mdcsim.schemas.edgesim import ServiceSpec
from mdcsim.schemas.edgesim import SimulationConfig
from mdcsim.schemas.edgesim import SimulationRawResults
from mdcsim.services.common import BaseDocumentService
from mdcsim.services.common import require_input
from mdcsim.services.engine.event_log import EventLog

SERIES_FILE = "series.csv"
POWER_STEPS_FILE = "power_steps.csv"
TOTALS_FILE = "totals.csv"
MANIFEST_FILE = "manifest.json"
EVENTS_FILE = "events.csv"
FLOAT_FORMAT = "%.6f"


class RunManifest(BaseModel):
    """Everything needed to reproduce a run; no wall-clock data so re-runs stay byte-identical."""
    model_config = ConfigDict(extra="forbid")
    scenario_tag: str
    seed: int
    n_mdcs: int
    simulation: SimulationConfig
    power: PowerModel
    services: list[ServiceSpec]
    event_log_sha256: Optional[str] = None
    inputs: Dict[str, str] = {}
    config: Dict[str, Any] = {}


class ManifestService(BaseDocumentService[RunManifest]):
    def __init__(self):
        super().__init__(RunManifest)

    def load(self, path: Path | str) -> RunManifest:
        try:
            return self.read(path)
        except ValidationError as e:
            raise ArtifactParseError(f"{path}: {self.describe_validation_error(e)}") from e


def _to_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_raw_results(results: SimulationRawResults, out_dir: Path | str, inputs: Optional[Dict[str, str]] = None,
                      config: Optional[Dict[str, Any]] = None, write_events: bool = False) -> Path:
    """series.csv, power_steps.csv, totals.csv and manifest.json (plus events.csv on request)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _to_csv(results.series, out_dir / SERIES_FILE)
    _to_csv(results.power_steps, out_dir / POWER_STEPS_FILE)
    _to_csv(results.totals, out_dir / TOTALS_FILE)
    if write_events and results.event_log is not None:
        results.event_log.write(out_dir / EVENTS_FILE)

    manifest = RunManifest(
        scenario_tag=results.scenario_tag,
        seed=results.seed,
        n_mdcs=results.n_mdcs,
        simulation=results.config,
        power=results.power_model,
        services=list(results.services),
        event_log_sha256=results.event_log_sha256,
        inputs=dict(inputs or {}),
        config=dict(config or {}),
    )
    ManifestService().write(manifest, out_dir / MANIFEST_FILE)
    return out_dir


def _read_csv(path: Path, columns: list) -> pd.DataFrame:
    frame = pd.read_csv(require_input(path, "report"))
    if list(frame.columns) != columns:
        raise ArtifactParseError(f"{path}: expected header {','.join(columns)}")
    return frame


def read_raw_results(out_dir: Path | str) -> SimulationRawResults:
    out_dir = Path(out_dir)
    manifest = ManifestService().load(require_input(out_dir / MANIFEST_FILE, "report"))
    events_path = out_dir / EVENTS_FILE
    return SimulationRawResults(
        scenario_tag=manifest.scenario_tag,
        seed=manifest.seed,
        n_mdcs=manifest.n_mdcs,
        config=manifest.simulation,
        power_model=manifest.power,
        services=tuple(manifest.services),
        series=_read_csv(out_dir / SERIES_FILE, SERIES_COLUMNS),
        power_steps=_read_csv(out_dir / POWER_STEPS_FILE, POWER_STEP_COLUMNS),
        totals=_read_csv(out_dir / TOTALS_FILE, TOTALS_COLUMNS),
        event_log_sha256=manifest.event_log_sha256,
        event_log=EventLog.read(events_path) if events_path.exists() else None,
    )
