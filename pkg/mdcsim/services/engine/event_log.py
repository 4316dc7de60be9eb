from __future__ import annotations

import hashlib
import io
import json
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import NamedTuple

import pandas as pd

from mdcsim.core.exceptions import ArtifactParseError
from mdcsim.schemas.engine import Event

LOG_COLUMNS = ["t", "seq", "kind", "details"]


class LogRow(NamedTuple):
    t: float
    seq: int
    kind: str
    details: Dict[str, Any]


def _compact(details: Dict[str, Any]) -> str:
    return json.dumps(details, separators=(",", ":"), sort_keys=True)


class EventLog:
    """Dispatched events plus the simulator's own outcome rows (SessionOpen, SessionReject...).

    Outcome rows reuse the seq of the event being handled, so the log stays totally ordered.
    """

    def __init__(self):
        self.rows: List[LogRow] = []

    def __len__(self):
        return len(self.rows)

    def record_event(self, event: Event) -> None:
        self.rows.append(LogRow(event.t, event.seq, str(event.kind), dict(event.payload)))

    def record(self, t: float, seq: int, kind: str, **details: Any) -> None:
        self.rows.append(LogRow(float(t), int(seq), kind, details))

    def of_kind(self, *kinds: str) -> List[LogRow]:
        return [row for row in self.rows if row.kind in kinds]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(row.t, row.seq, row.kind, _compact(row.details)) for row in self.rows],
            columns=LOG_COLUMNS,
        )

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        self.to_frame().to_csv(buffer, index=False, float_format="%.6f", lineterminator="\n")
        return buffer.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()

    def write(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv_text(), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: Path | str) -> EventLog:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        if list(frame.columns) != LOG_COLUMNS:
            raise ArtifactParseError(f"{path}: expected header {','.join(LOG_COLUMNS)}")
        log = cls()
        for row in frame.itertuples(index=False):
            log.rows.append(LogRow(float(row.t), int(row.seq), row.kind, json.loads(row.details)))
        return log
