from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence
from typing import Union

import numpy as np
from pydantic import ValidationError
from scipy.spatial.distance import cdist

from mdcsim.core.exceptions import EmptyCandidatesError
from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.core.exceptions import MapParseError
from mdcsim.core.exceptions import MapValidationError
from mdcsim.schemas.geometry import MAP_SCHEMA_VERSION
from mdcsim.schemas.geometry import ActivityArea
from mdcsim.schemas.geometry import Bounds
from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.geometry import MapFile
from mdcsim.schemas.geometry import ScenarioMap
from mdcsim.services.common import BaseDocumentService
from mdcsim.services.rng import Stage
from mdcsim.services.rng import substream

PointsLike = Union[Sequence[GeoPoint], np.ndarray]

# cdist block size; bounds peak memory for long traces
_NEAREST_CHUNK = 65536


class MapService(BaseDocumentService[MapFile]):
    def __init__(self):
        super().__init__(MapFile)

    def load(self, path: Path | str) -> ScenarioMap:
        try:
            raw = self.read_raw(path)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise MapParseError(f"{path}: malformed JSON ({e})") from e
        if not isinstance(raw, dict):
            raise MapParseError(f"{path}: top level must be an object")
        try:
            document = self.parse(raw)
        except ValidationError as e:
            raise MapParseError(f"{path}: {self.describe_validation_error(e)}") from e
        return validate_map(_from_document(document))

    def save(self, scenario_map: ScenarioMap, path: Path | str) -> Path:
        return self.write(_to_document(scenario_map), path)


def _from_document(document: MapFile) -> ScenarioMap:
    return ScenarioMap(
        bounds=Bounds(document.bounds.width, document.bounds.height),
        entry_points=tuple(GeoPoint(float(x), float(y)) for x, y in document.entry_points),
        activity_areas=tuple(ActivityArea(a.x, a.y, a.w, a.h) for a in document.activity_areas),
        hospitals=tuple(GeoPoint(float(x), float(y)) for x, y in document.hospitals),
    )


def _to_document(scenario_map: ScenarioMap) -> MapFile:
    return MapFile.model_validate({
        "schema": MAP_SCHEMA_VERSION,
        "bounds": {"width": scenario_map.bounds.width, "height": scenario_map.bounds.height},
        "entry_points": [[p.x, p.y] for p in scenario_map.entry_points],
        "activity_areas": [{"x": a.x, "y": a.y, "w": a.w, "h": a.h} for a in scenario_map.activity_areas],
        "hospitals": [[p.x, p.y] for p in scenario_map.hospitals],
    })


def validate_map(scenario_map: ScenarioMap) -> ScenarioMap:
    """Checks counts and containment; errors name the offending element."""
    bounds = scenario_map.bounds
    for name in ("entry_points", "activity_areas", "hospitals"):
        if not getattr(scenario_map, name):
            raise MapValidationError(name, "at least one element is required")

    for name in ("entry_points", "hospitals"):
        for idx, p in enumerate(getattr(scenario_map, name)):
            if not (math.isfinite(p.x) and math.isfinite(p.y)):
                raise MapValidationError(f"{name}[{idx}]", "coordinates must be finite")
            if not bounds.contains(p):
                raise MapValidationError(
                    f"{name}[{idx}]", f"({p.x}, {p.y}) outside bounds {bounds.width}x{bounds.height}"
                )

    area_poly = bounds.polygon()
    for idx, area in enumerate(scenario_map.activity_areas):
        if not area_poly.covers(area.polygon()):
            raise MapValidationError(f"activity_areas[{idx}]", "rectangle not contained in bounds")

    return scenario_map


def load_map(path: Path | str) -> ScenarioMap:
    return MapService().load(path)


def write_map(scenario_map: ScenarioMap, path: Path | str) -> Path:
    return MapService().save(scenario_map, path)


def generate_synthetic_map(width: float, height: float, n_entries: int, n_areas: int, n_hospitals: int,
                           seed: int) -> ScenarioMap:
    """Uniform random city; pure function of its arguments."""
    if not (math.isfinite(width) and math.isfinite(height)) or width <= 0 or height <= 0:
        raise InvalidParameterError(f"width and height must be > 0 (got {width}, {height})")
    for name, value in (("n_entries", n_entries), ("n_areas", n_areas), ("n_hospitals", n_hospitals)):
        if int(value) != value or value < 1:
            raise InvalidParameterError(f"{name} must be an integer >= 1 (got {value})")

    rng = substream(seed, Stage.MAP)

    entries = rng.uniform((0.0, 0.0), (width, height), size=(int(n_entries), 2))

    # Areas span 2-8 % of each side, placed fully inside the bounds
    sizes = rng.uniform(0.02, 0.08, size=(int(n_areas), 2)) * (width, height)
    corners = rng.uniform(0.0, 1.0, size=(int(n_areas), 2)) * ((width, height) - sizes)

    hospitals = rng.uniform((0.0, 0.0), (width, height), size=(int(n_hospitals), 2))

    return validate_map(ScenarioMap(
        bounds=Bounds(float(width), float(height)),
        entry_points=tuple(GeoPoint(float(x), float(y)) for x, y in entries),
        activity_areas=tuple(
            ActivityArea(float(cx), float(cy), float(w), float(h))
            for (cx, cy), (w, h) in zip(corners, sizes)
        ),
        hospitals=tuple(GeoPoint(float(x), float(y)) for x, y in hospitals),
    ))


def as_xy(points: PointsLike) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.asarray(points, dtype=float).reshape(-1, 2)
    return np.array([(p.x, p.y) for p in points], dtype=float).reshape(-1, 2)


def nearest_indices(points: PointsLike, candidates: PointsLike) -> np.ndarray:
    """Index of the nearest candidate for every point; ties go to the lowest index."""
    cand = as_xy(candidates)
    if len(cand) == 0:
        raise EmptyCandidatesError("nearest lookup needs at least one candidate")
    pts = as_xy(points)
    out = np.empty(len(pts), dtype=np.int64)
    for start in range(0, len(pts), _NEAREST_CHUNK):
        block = pts[start:start + _NEAREST_CHUNK]
        # argmin returns the first minimum
        out[start:start + len(block)] = cdist(block, cand, "sqeuclidean").argmin(axis=1)
    return out


def nearest_index(p: GeoPoint, candidates: PointsLike) -> int:
    return int(nearest_indices(np.array([[p.x, p.y]], dtype=float), candidates)[0])
