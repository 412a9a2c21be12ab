"""Deterministic seed derivation.

Every random draw in the package flows through a Philox counter-based
generator keyed by (root seed, stream path).  Philox guarantees identical
streams across platforms, which is what makes golden datasets and
re-runnable experiment tables byte-stable.

The stream path is a tuple of small non-negative integers; string tags are
mapped to integers with crc32 so call sites can use readable labels.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["derive_seed_sequence", "make_rng", "child_seed"]


def _as_key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"seed path parts must be non-negative, got {part}")
    return int(part)


def derive_seed_sequence(root: int, *path: int | str) -> np.random.SeedSequence:
    """SeedSequence for stream ``path`` under ``root``."""
    return np.random.SeedSequence(int(root), spawn_key=tuple(_as_key(p) for p in path))


def make_rng(root: int, *path: int | str) -> np.random.Generator:
    """Philox generator for stream ``path`` under ``root``."""
    return np.random.Generator(np.random.Philox(derive_seed_sequence(root, *path)))


def child_seed(root: int, *path: int | str) -> int:
    """A plain integer seed (e.g. for scikit-learn) derived from the stream."""
    return int(derive_seed_sequence(root, *path).generate_state(1, np.uint32)[0])
