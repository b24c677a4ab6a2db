"""Named, isolated RNG streams derived from a single root seed.

Every random draw in a run comes from a stream addressed by
(root_seed, name, *indices).  Streams are independent by construction, so
toggling one feature (say, action masking) never shifts the draws of any
other feature.  Stream keys are hashed with blake2s, not Python's salted
``hash``, so layouts are stable across processes.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key(name: str) -> int:
    return int.from_bytes(hashlib.blake2s(name.encode("utf-8"), digest_size=4).digest(), "little")


def stream(root_seed: int, name: str, *indices: int) -> np.random.Generator:
    """Return the generator for the named sub-stream of ``root_seed``."""
    entropy = [int(root_seed), _key(name), *[int(i) for i in indices]]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def stream_seed(root_seed: int, name: str, *indices: int) -> int:
    """A derived 63-bit seed, for handing to components that self-seed."""
    return int(stream(root_seed, name, *indices).integers(2**63))
