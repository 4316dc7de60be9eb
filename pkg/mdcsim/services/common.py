from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Generic
from typing import Iterable
from typing import Type
from typing import TypeVar

from pydantic import BaseModel
from pydantic import ValidationError

from mdcsim.core.exceptions import StageInputError

T = TypeVar("T", bound=BaseModel)  # On-disk document model


def dump_json(data: Any) -> str:
    """Canonical JSON text: fixed key order, trailing newline, byte-stable."""
    return json.dumps(data, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def sha256_files(paths: Iterable[Path | str]) -> str:
    digest = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
    return digest.hexdigest()


def require_input(path: Path | str, stage: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise StageInputError(path, stage)
    return path


class BaseDocumentService(Generic[T]):
    """Reads and writes one kind of JSON artifact backed by a pydantic model."""

    def __init__(self, model: Type[T]):
        self.model = model
        self.name = self.__class__.__name__

    def __repr__(self):
        return f"{self.__class__.__name__} ({self.model.__name__})"

    def __str__(self):
        return f"{self.__class__.__name__}"

    def parse(self, raw: Dict[str, Any]) -> T:
        return self.model.model_validate(raw)

    def read_raw(self, path: Path | str) -> Dict[str, Any]:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def read(self, path: Path | str) -> T:
        """Load and validate; pydantic errors propagate to the caller for translation."""
        return self.parse(self.read_raw(path))

    def write(self, document: T, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = document.model_dump(mode="json", by_alias=True)
        path.write_text(dump_json(payload), encoding="utf-8")
        return path

    @staticmethod
    def describe_validation_error(error: ValidationError) -> str:
        first = error.errors()[0]
        location = ".".join(str(part) for part in first.get("loc", ()))
        return f"{location or '<root>'}: {first.get('msg', 'invalid value')}"
