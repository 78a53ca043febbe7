"""
Named random sub-streams.

All randomness in a run flows from one user seed. Each consumer asks for a named
stream ("split", "init.reconstructor", "shuffle", "perturb", ...) so that adding
or reordering draws in one component never shifts the numbers another sees.
"""

import zlib

import numpy as np


def stream_key(name: str) -> int:
    """Stable 32-bit key for a stream name."""
    return zlib.crc32(name.encode("utf-8"))


class SeedStreams:
    """Factory of independent, reproducible generators keyed by name."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def sequence(self, name: str) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.seed, spawn_key=(stream_key(name),))

    def generator(self, name: str) -> np.random.Generator:
        """Fresh generator for ``name``; the same name always yields the same stream."""
        return np.random.default_rng(self.sequence(name))

    def derive_seed(self, name: str) -> int:
        """Integer seed for APIs that take a plain seed."""
        return int(self.sequence(name).generate_state(1, dtype=np.uint32)[0])

    def __repr__(self) -> str:
        return f"SeedStreams(seed={self.seed})"
