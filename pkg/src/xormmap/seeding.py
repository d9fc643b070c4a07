"""Deterministic seed derivation for every randomized object.

Every parity system, sample set and generated instance draws from its own
generator, keyed by (master seed, purpose tag, indices). Two tasks never share
a stream, so results do not depend on scheduling order.
"""

import hashlib

import numpy as np

# Purpose tags
PARITY = "parity"
SAMPLES = "samples"
RESTARTS = "restarts"
INSTANCE = "instance"


def derive_seed(master_seed: int, purpose: str, *indices: int) -> int:
    """Mix a master seed, a purpose tag and task indices into a 128-bit seed.

    Args:
        master_seed: User-facing seed for the whole run
        purpose: Tag separating independent uses (parity, samples, ...)
        *indices: Task coordinates, e.g. (k, replicate, trial)

    Returns:
        Non-negative integer seed (Blake2b 16-byte digest)
    """
    key = ":".join([str(master_seed), purpose, *(str(i) for i in indices)])
    return int.from_bytes(hashlib.blake2b(key.encode("ascii"), digest_size=16).digest(), "big")


def derive_rng(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Counter-based Philox generator seeded by :func:`derive_seed`."""
    return np.random.Generator(np.random.Philox(derive_seed(master_seed, purpose, *indices)))
