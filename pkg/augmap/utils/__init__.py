"""
Utilities Package

This package contains seeded random streams and hashing helpers.
"""

from augmap.utils.hashing import canonical_json, config_hash, file_digest
from augmap.utils.rng import derive_rng, seed_sequence

__all__ = ["canonical_json", "config_hash", "file_digest", "derive_rng", "seed_sequence"]
