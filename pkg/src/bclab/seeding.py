"""Per-trial random streams.

trial_seed(master, i) = first 8 bytes (little endian) of
BLAKE2b(digest_size=8) over ``master`` and ``i`` packed as two unsigned
little-endian 64-bit integers.  Each trial draws from a Philox-4x64
counter-based generator keyed by its trial seed, so trial streams do not
depend on each other or on execution order.
"""
from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def trial_seed(master_seed: int, index: int) -> int:
    payload = struct.pack("<QQ", master_seed & MASK64, index & MASK64)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=trial_seed(master_seed, index)))
