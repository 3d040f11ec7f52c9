import hashlib
import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from .models import TraceEntry

logger = logging.getLogger(__name__)


def cache_key(f_id: str, level: int, delta: int, root: int, m: int) -> str:
    """Content address of one trace value."""
    raw = f"{f_id}:{level}:{delta}:{root}:{m}".encode()
    return hashlib.blake2b(raw, digest_size=16).hexdigest()


class TraceCache:
    """One JSON file per trace value, addressed by cache_key."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, f_id: str, level: int, delta: int, root: int, m: int) -> Optional[TraceEntry]:
        path = self._path(cache_key(f_id, level, delta, root, m))
        if not path.exists():
            return None
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                entry = TraceEntry.model_validate(json.load(fh))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            logger.warning(f"Ignoring unreadable cache file {path}: {e}")
            return None
        if entry.m != m:
            logger.warning(f"Ignoring cache file {path}: it holds index {entry.m}, not {m}")
            return None
        return entry

    def put(self, f_id: str, level: int, delta: int, root: int, entry: TraceEntry) -> Path:
        path = self._path(cache_key(f_id, level, delta, root, entry.m))
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, 'w', encoding='utf-8') as fh:
            json.dump(entry.model_dump(mode="json"), fh, sort_keys=True)
        tmp.replace(path)
        logger.debug(f"cached t({entry.m}) at {path}")
        return path

    def clear(self) -> int:
        removed = 0
        if not self.directory.exists():
            return removed
        for path in self.directory.glob("*/*.json"):
            path.unlink()
            removed += 1
        logger.info(f"Removed {removed} cached traces from {self.directory}")
        return removed
