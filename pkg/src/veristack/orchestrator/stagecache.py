"""Content-addressed cache of per-claim stage artifacts.

A key is the sha256 of the canonical JSON of everything that determines a
stage's output: claim fingerprint, upstream artifact digests, the config
fields the stage reads, and the model ids involved. Values live as
``<root>/<stage>/<key>.json``, written atomically so concurrent workers
can share a root.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Optional

from .serialize import canonical_json, digest


class StageCache:
    """Disabled entirely when constructed with root=None."""

    def __init__(self, root: Optional[Path | str]) -> None:
        self.root = Path(root) if root is not None else None

    @property
    def enabled(self) -> bool:
        return self.root is not None

    @staticmethod
    def key(payload: Any) -> str:
        return digest(payload)

    def _path(self, stage: str, key: str) -> Path:
        assert self.root is not None
        return self.root / stage / f"{key}.json"

    def get(self, stage: str, key: str) -> Optional[dict]:
        if self.root is None:
            return None
        try:
            return json.loads(self._path(stage, key).read_text("utf-8"))
        except FileNotFoundError:
            return None
        except ValueError:
            # A torn or corrupt entry is treated as a miss and rewritten.
            return None

    def put(self, stage: str, key: str, value: dict) -> None:
        if self.root is None:
            return
        path = self._path(stage, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(value))
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def clear(self) -> int:
        """Remove all cached artifacts; returns the number of files removed."""
        if self.root is None or not self.root.exists():
            return 0
        removed = 0
        for stage_dir in self.root.iterdir():
            if stage_dir.is_dir():
                removed += sum(1 for p in stage_dir.glob("*.json"))
                shutil.rmtree(stage_dir)
        return removed
