from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from mdcsim.core.exceptions import InvalidParameterError
from mdcsim.schemas.geometry import Bounds
from mdcsim.schemas.mobility import MobilityTrace
from mdcsim.schemas.placement import PresenceGrid

DEFAULT_RESOLUTION = 40
DEFAULT_WINDOW = 60.0


def cell_indices(x: np.ndarray, y: np.ndarray, bounds: Bounds, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Column/row of every position; points on the far edge fall into the last cell."""
    cw = bounds.width / resolution
    ch = bounds.height / resolution
    ix = np.clip(np.floor(np.asarray(x) / cw).astype(np.int64), 0, resolution - 1)
    iy = np.clip(np.floor(np.asarray(y) / ch).astype(np.int64), 0, resolution - 1)
    return ix, iy


def build_presence_grid(trace: MobilityTrace, bounds: Bounds, resolution: int = DEFAULT_RESOLUTION,
                        window: float = DEFAULT_WINDOW) -> PresenceGrid:
    """Per cell, the maximum over windows [kW, (k+1)W) of distinct agents recorded there."""
    if int(resolution) != resolution or resolution < 1:
        raise InvalidParameterError(f"resolution must be an integer >= 1 (got {resolution})")
    if not window > 0:
        raise InvalidParameterError(f"window must be > 0 (got {window})")
    resolution = int(resolution)

    flat = np.zeros(resolution * resolution, dtype=np.int64)
    records = trace.records
    if len(records):
        k = np.floor(records["t"] / window).astype(np.int64)
        ix, iy = cell_indices(records["x"], records["y"], bounds, resolution)
        cell = iy * resolution + ix
        triples = np.unique(np.column_stack((k, cell, records["agent_id"])), axis=0)
        pairs, counts = np.unique(triples[:, :2], axis=0, return_counts=True)
        np.maximum.at(flat, pairs[:, 1], counts)

    return PresenceGrid(resolution=resolution, window=float(window), bounds=bounds,
                        cells=flat.reshape(resolution, resolution))


def write_grid_csv(grid: PresenceGrid, path: Path | str) -> Path:
    """Heatmap matrix, one row per y-cell (south first), no header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(grid.cells).to_csv(path, header=False, index=False, lineterminator="\n")
    return path


def read_grid_csv(path: Path | str, bounds: Bounds, window: float = DEFAULT_WINDOW) -> PresenceGrid:
    cells = pd.read_csv(path, header=None).to_numpy(dtype=np.int64)
    return PresenceGrid(resolution=cells.shape[0], window=float(window), bounds=bounds, cells=cells)
