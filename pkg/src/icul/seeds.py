"""Deterministic sub-seed derivation.

A single run seed is expanded into independent per-purpose streams by
hashing the purpose tag together with the seed. Uses blake2s, not Python's
``hash``, so streams are stable across processes and platforms.
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Map (purpose tag, seed, ...) to a stable 64-bit seed."""
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2s(key, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
