"""Shared helpers: named deterministic RNG streams, digests, splits, formatting."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np


def seeded_rng(seed: int, *tags: str) -> np.random.Generator:
    """Derive an independent generator from a root seed and a name path.

    Every random draw in the pipeline flows from one root seed; distinct
    tag paths give statistically independent, platform-stable streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for tag in tags:
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        entropy.extend(int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def split_indices(n: int, holdout_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle 0..n-1 and split off the last `holdout_fraction` as holdout."""
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in [0, 1), got {holdout_fraction}")
    perm = rng.permutation(n)
    n_holdout = int(round(n * holdout_fraction))
    return perm[: n - n_holdout], perm[n - n_holdout :]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fmt_float(x: float) -> str:
    """Decimal text form that round-trips float64 exactly (17 significant digits)."""
    return format(float(x), ".17g")
