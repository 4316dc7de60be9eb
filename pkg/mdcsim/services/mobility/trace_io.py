from __future__ import annotations

import re
from pathlib import Path
from typing import List
from typing import Tuple

import numpy as np
import pandas as pd

from mdcsim.core.exceptions import TraceParseError
from mdcsim.schemas.geometry import GeoPoint
from mdcsim.schemas.mobility import RECORD_DTYPE
from mdcsim.schemas.mobility import AgentItinerary
from mdcsim.schemas.mobility import MobilityTrace
from mdcsim.services.common import sha256_files

RECORD_COLUMNS = ["t", "agent_id", "x", "y"]
ITINERARY_COLUMNS = ["agent_id", "t_enter", "ex", "ey", "dx", "dy", "t_arrive", "t_depart", "xx", "xy", "t_exit"]
INTEGER_COLUMNS = {"agent_id"}
FLOAT_FORMAT = "%.3f"

_PANDAS_LINE = re.compile(r"line (\d+)")


def itinerary_path(path: Path | str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_itineraries{path.suffix or '.csv'}")


def trace_files(path: Path | str) -> Tuple[Path, Path]:
    return Path(path), itinerary_path(path)


def trace_hash(path: Path | str) -> str:
    return sha256_files(trace_files(path))


def write_trace(trace: MobilityTrace, path: Path | str) -> Tuple[Path, Path]:
    records_path, itineraries_path = trace_files(path)
    records_path.parent.mkdir(parents=True, exist_ok=True)

    records = pd.DataFrame({name: trace.records[name] for name in RECORD_COLUMNS}, columns=RECORD_COLUMNS)
    records.to_csv(records_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    rows = [
        (it.agent_id, it.t_enter, it.entry.x, it.entry.y, it.destination.x, it.destination.y,
         it.t_arrive, it.t_depart, it.exit.x, it.exit.y, it.t_exit)
        for it in trace.itineraries
    ]
    itineraries = pd.DataFrame(rows, columns=ITINERARY_COLUMNS)
    itineraries["agent_id"] = itineraries["agent_id"].astype(np.int64)
    itineraries.to_csv(itineraries_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return records_path, itineraries_path


def _read_table(path: Path, columns: List[str]) -> pd.DataFrame:
    """Strict CSV read: exact header, every field numeric; errors carry the file line number."""
    if not path.exists():
        raise TraceParseError(path, None, "file not found")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[])
    except pd.errors.EmptyDataError as e:
        raise TraceParseError(path, 1, "missing header") from e
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise TraceParseError(path, int(match.group(1)) if match else None, str(e)) from e

    if list(raw.columns) != columns:
        raise TraceParseError(path, 1, f"expected header {','.join(columns)}")

    parsed = pd.DataFrame(index=raw.index)
    for name in columns:
        parsed[name] = pd.to_numeric(raw[name], errors="coerce")
    bad = parsed.isna().any(axis=1).to_numpy()
    if bad.any():
        # +2: one header line, 1-based numbering
        line = int(np.flatnonzero(bad)[0]) + 2
        raise TraceParseError(path, line, "missing or non-numeric field")
    for name in INTEGER_COLUMNS & set(columns):
        values = parsed[name].to_numpy(dtype=float)
        if not np.all(values == np.round(values)):
            line = int(np.flatnonzero(values != np.round(values))[0]) + 2
            raise TraceParseError(path, line, f"{name} must be an integer")
        parsed[name] = values.astype(np.int64)
    return parsed


def read_trace(path: Path | str) -> MobilityTrace:
    records_path, itineraries_path = trace_files(path)
    records_df = _read_table(records_path, RECORD_COLUMNS)
    itineraries_df = _read_table(itineraries_path, ITINERARY_COLUMNS)

    records = np.empty(len(records_df), dtype=RECORD_DTYPE)
    for name in RECORD_COLUMNS:
        records[name] = records_df[name].to_numpy()

    itineraries = tuple(
        AgentItinerary(
            agent_id=int(row.agent_id),
            t_enter=float(row.t_enter),
            entry=GeoPoint(float(row.ex), float(row.ey)),
            destination=GeoPoint(float(row.dx), float(row.dy)),
            t_arrive=float(row.t_arrive),
            t_depart=float(row.t_depart),
            exit=GeoPoint(float(row.xx), float(row.xy)),
            t_exit=float(row.t_exit),
        )
        for row in itineraries_df.itertuples(index=False)
    )
    return MobilityTrace(records=records, itineraries=itineraries)
