"""Deterministic random-stream derivation.

Every source of randomness in this package is a numpy PCG64 generator
derived from a single 64-bit master seed through a fixed, documented
split, so results never depend on scheduling, import order, or ambient
entropy.

The split rule: a stream is addressed by a role string plus integer
indices. The role string is hashed with SHA-256 and its first 16 bytes,
read as four little-endian uint32 words, are appended to the indices to
form the ``spawn_key`` of a ``numpy.random.SeedSequence`` whose entropy
is the master seed. The bit generator is always PCG64. Both SeedSequence
and PCG64 are specified by numpy as stable algorithms, so the same
(master_seed, role, indices) triple yields the same byte stream on any
platform.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def _role_words(role: str) -> tuple[int, int, int, int]:
    digest = hashlib.sha256(role.encode("utf-8")).digest()
    return struct.unpack("<4I", digest[:16])


def seed_sequence(master_seed: int, role: str, *indices: int) -> np.random.SeedSequence:
    """SeedSequence for the stream addressed by (role, *indices)."""
    key = _role_words(role) + tuple(int(i) for i in indices)
    return np.random.SeedSequence(entropy=int(master_seed) & MASK64, spawn_key=key)


def stream(master_seed: int, role: str, *indices: int) -> np.random.Generator:
    """Private PCG64 generator for the stream addressed by (role, *indices)."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, role, *indices)))


def derive_seed(master_seed: int, role: str, *indices: int) -> int:
    """64-bit child seed for a sub-stage that manages its own streams.

    Logged in experiment manifests so every stage seed is reproducible
    from the master seed and the role path alone.
    """
    words = seed_sequence(master_seed, role, *indices).generate_state(2, dtype=np.uint64)
    return int(words[0] ^ (words[1] >> 1)) & MASK64
