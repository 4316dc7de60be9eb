from __future__ import annotations

import json
from pathlib import Path
from typing import List
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from mdcsim.core.exceptions import InfeasibleKError
from mdcsim.core.exceptions import ArtifactParseError
from mdcsim.core.exceptions import PlacementInvariantError
from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.geometry import ScenarioMap
from mdcsim.schemas.placement import Placement
from mdcsim.schemas.placement import PlacementFile
from mdcsim.schemas.placement import PresenceGrid
from mdcsim.schemas.placement import ScenarioTag
from mdcsim.services.common import BaseDocumentService
from mdcsim.services.geometry.map_data import nearest_index
from mdcsim.services.geometry.map_data import nearest_indices
from mdcsim.services.logger import placement_logger
from mdcsim.services.placement.kmeans import DEFAULT_TOL_FRACTION
from mdcsim.services.placement.kmeans import weighted_kmeans
from mdcsim.services.rng import Stage
from mdcsim.services.rng import derived_seed

DEFAULT_N_APS = 30
DEFAULT_N_MDCS = 3


def _points(xy: np.ndarray) -> tuple:
    return tuple(GeoPoint(float(x), float(y)) for x, y in xy)


def link_aps(aps: Sequence[GeoPoint], mdcs: Sequence[GeoPoint]) -> tuple:
    return tuple(int(i) for i in nearest_indices(aps, mdcs))


def place(grid: PresenceGrid, n_aps: int = DEFAULT_N_APS, n_mdcs: int = DEFAULT_N_MDCS, seed: int = 0) -> Placement:
    """Clustering placement: weighted k-means over cell centres for APs, then again for MDCs."""
    centers = grid.cell_centers()
    weights = grid.cells.ravel().astype(float)
    available = int(np.count_nonzero(weights))
    if available < max(n_aps, n_mdcs):
        raise InfeasibleKError(
            f"presence grid has {available} occupied cells, need {max(n_aps, n_mdcs)} for "
            f"{n_aps} APs / {n_mdcs} MDCs"
        )
    tol = DEFAULT_TOL_FRACTION * grid.bounds.diagonal

    ap_fit = weighted_kmeans(centers, weights, n_aps, derived_seed(seed, Stage.PLACEMENT, 0), tol=tol)
    mdc_fit = weighted_kmeans(centers, weights, n_mdcs, derived_seed(seed, Stage.PLACEMENT, 1), tol=tol)
    aps = _points(ap_fit.centroids)
    mdcs = _points(mdc_fit.centroids)
    placement_logger.info(
        f"clustering placement: {n_aps} APs in {ap_fit.n_iter} iterations, "
        f"{n_mdcs} MDCs in {mdc_fit.n_iter} iterations"
    )
    return Placement(aps=aps, mdcs=mdcs, ap_to_mdc=link_aps(aps, mdcs), scenario_tag=ScenarioTag.C3)


def derive_scenario(base: Placement, scenario_map: ScenarioMap, tag: ScenarioTag | str) -> Placement:
    """Hospital variants of a clustering placement; APs stay where they are."""
    tag = ScenarioTag(tag)
    hospitals = scenario_map.hospitals
    if tag == ScenarioTag.C3:
        return base
    if tag == ScenarioTag.H9:
        mdcs = tuple(hospitals)
    elif tag == ScenarioTag.H1:
        mdcs = (hospitals[nearest_index(scenario_map.bounds.center, hospitals)],)
    else:
        # H3: snap each clustered MDC, keep one MDC per hospital in first-seen order
        chosen: List[int] = []
        for idx in nearest_indices(base.mdcs, hospitals):
            if int(idx) not in chosen:
                chosen.append(int(idx))
        mdcs = tuple(hospitals[i] for i in chosen)
        if len(mdcs) < len(base.mdcs):
            placement_logger.warning(f"H3: {len(base.mdcs)} clustered MDCs collapsed onto {len(mdcs)} hospitals")
    return Placement(aps=base.aps, mdcs=mdcs, ap_to_mdc=link_aps(base.aps, mdcs), scenario_tag=tag)


def validate_placement(placement: Placement) -> Placement:
    """Non-empty APs and MDCs, one in-range link per AP, each AP linked to its nearest MDC."""
    if not placement.aps:
        raise PlacementInvariantError("aps: empty")
    if not placement.mdcs:
        raise PlacementInvariantError("mdcs: empty")
    if len(placement.ap_to_mdc) != len(placement.aps):
        raise PlacementInvariantError(
            f"ap_to_mdc: {len(placement.ap_to_mdc)} links for {len(placement.aps)} APs"
        )
    nearest = link_aps(placement.aps, placement.mdcs)
    for i, (mdc, expected) in enumerate(zip(placement.ap_to_mdc, nearest)):
        if not 0 <= mdc < len(placement.mdcs):
            raise PlacementInvariantError(f"ap_to_mdc[{i}]: MDC {mdc} out of range")
        if mdc != expected:
            raise PlacementInvariantError(f"ap_to_mdc[{i}]: linked to MDC {mdc}, nearest is {expected}")
    return placement


class PlacementService(BaseDocumentService[PlacementFile]):
    def __init__(self):
        super().__init__(PlacementFile)

    def save(self, placement: Placement, path: Path | str) -> Path:
        document = PlacementFile(
            scenario_tag=placement.scenario_tag,
            aps=[(p.x, p.y) for p in placement.aps],
            mdcs=[(p.x, p.y) for p in placement.mdcs],
            ap_to_mdc=list(placement.ap_to_mdc),
        )
        return self.write(document, path)

    def load(self, path: Path | str) -> Placement:
        try:
            document = self.read(path)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ArtifactParseError(f"{path}: malformed JSON ({e})") from e
        except ValidationError as e:
            raise ArtifactParseError(f"{path}: {self.describe_validation_error(e)}") from e
        return validate_placement(Placement(
            aps=tuple(GeoPoint(float(x), float(y)) for x, y in document.aps),
            mdcs=tuple(GeoPoint(float(x), float(y)) for x, y in document.mdcs),
            ap_to_mdc=tuple(document.ap_to_mdc),
            scenario_tag=document.scenario_tag,
        ))


def write_placement(placement: Placement, path: Path | str) -> Path:
    return PlacementService().save(placement, path)


def read_placement(path: Path | str) -> Placement:
    return PlacementService().load(path)
