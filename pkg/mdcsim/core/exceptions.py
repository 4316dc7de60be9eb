from __future__ import annotations

from pathlib import Path
from typing import Any
from typing import Optional


class MdcSimError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(MdcSimError):
    pass


class InvalidParameterError(MdcSimError):
    pass


class ArtifactParseError(MdcSimError):
    """A JSON artifact (map, placement, manifest) is malformed."""


class MapParseError(ArtifactParseError):
    pass


class MapValidationError(MdcSimError):
    def __init__(self, element: str, reason: str):
        super().__init__(f"{element}: {reason}")
        self.element = element
        self.reason = reason


class EmptyCandidatesError(MdcSimError):
    pass


class TraceParseError(MdcSimError):
    def __init__(self, path: Path | str, line: Optional[int], reason: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {reason}")
        self.path = Path(path)
        self.line = line
        self.reason = reason


class InfeasibleKError(MdcSimError):
    pass


class CausalityError(MdcSimError):
    pass


class SimulationError(MdcSimError):
    """Wraps a failure raised while dispatching an event."""

    def __init__(self, event: Any, cause: BaseException):
        super().__init__(f"while handling {event}: {cause}")
        self.event = event
        self.cause = cause


class DuplicateSessionError(MdcSimError):
    pass


class OverlapFault(MdcSimError):
    pass


class ZeroServedError(MdcSimError):
    pass


class DurationTooShortError(MdcSimError):
    pass


class StageInputError(MdcSimError):
    def __init__(self, path: Path | str, stage: str):
        super().__init__(f"{stage}: required input {path} does not exist")
        self.path = Path(path)
        self.stage = stage


class PlacementInvariantError(MdcSimError):
    pass


class InvariantViolation(MdcSimError):
    """Simulator bookkeeping disagrees with itself."""
