"""On-disk cache of per-document chunk embeddings.

Layout: ``<root>/<model-slug>/<sha256-of-doc-text>.vec`` plus a
``manifest.json`` mapping hash to the document url it was seen under.
A .vec file is a 4-byte little-endian uint32 dimension header followed by
row-major float32 little-endian data; rows are recovered from file size.
Keying by content hash means edits to a document naturally miss.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import tempfile
import threading
from pathlib import Path

import numpy as np

_SLUG_RE = re.compile(r"[^A-Za-z0-9._-]+")
_HEADER = struct.Struct("<I")


def _model_slug(model_id: str) -> str:
    slug = _SLUG_RE.sub("-", model_id).strip("-")
    return slug or "model"


def text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbedCache:
    """Read/write cache for one embedding model under one root directory."""

    def __init__(self, root: Path | str, model_id: str) -> None:
        self.dir = Path(root) / _model_slug(model_id)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._manifest_path = self.dir / "manifest.json"
        self._lock = threading.Lock()

    def _vec_path(self, key: str) -> Path:
        return self.dir / f"{key}.vec"

    def get(self, doc_text: str) -> np.ndarray | None:
        """Return the stored (rows, dim) float32 matrix, or None on miss."""
        path = self._vec_path(text_key(doc_text))
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        if len(blob) < _HEADER.size:
            return None
        (dim,) = _HEADER.unpack_from(blob, 0)
        body = blob[_HEADER.size:]
        if dim == 0 or len(body) % (4 * dim) != 0:
            return None
        rows = len(body) // (4 * dim)
        mat = np.frombuffer(body, dtype="<f4").reshape(rows, dim)
        return np.ascontiguousarray(mat, dtype=np.float32)

    def put(self, doc_text: str, matrix: np.ndarray, doc_url: str = "") -> None:
        mat = np.ascontiguousarray(np.asarray(matrix, dtype=np.float32))
        if mat.ndim != 2 or mat.shape[0] == 0:
            raise ValueError("expected a non-empty 2-D matrix")
        key = text_key(doc_text)
        blob = _HEADER.pack(mat.shape[1]) + mat.astype("<f4").tobytes()
        self._atomic_write(self._vec_path(key), blob)
        with self._lock:
            manifest = self._read_manifest()
            if manifest.get(key) != doc_url:
                manifest[key] = doc_url
                self._atomic_write(
                    self._manifest_path,
                    json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8"),
                )

    def _read_manifest(self) -> dict[str, str]:
        try:
            return json.loads(self._manifest_path.read_text("utf-8"))
        except (FileNotFoundError, ValueError):
            return {}

    @staticmethod
    def _atomic_write(path: Path, blob: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
