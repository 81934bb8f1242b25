"""
Hashing

Content digests used by run manifests.
"""

import hashlib
import json
from pathlib import Path
from typing import Union

from pydantic import BaseModel

CHUNK_SIZE = 1 << 16


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(model: BaseModel) -> str:
    """Key-sorted, whitespace-free JSON of a model."""
    return json.dumps(
        model.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    )


def config_hash(model: BaseModel) -> str:
    """
    Stable digest of a configuration.

    Two configurations with equal field values hash identically, independent
    of the field order of the file they were loaded from.
    """
    return hashlib.sha256(canonical_json(model).encode("utf-8")).hexdigest()
