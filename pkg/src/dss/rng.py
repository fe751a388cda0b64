"""Deterministic derivation of independent random streams from a master seed.

Every stochastic component takes either an integer seed or a
``numpy.random.Generator`` that the caller created from one. Streams for
sub-tasks (per-surrogate CV, per-evaluation objective calls, per-iteration
candidate generation) are derived from the master seed plus a structural key,
so results never depend on execution order or thread timing.
"""

from __future__ import annotations

import zlib

import numpy as np

_U32 = 0xFFFFFFFF


def _key_words(key: tuple[int | str, ...]) -> list[int]:
    words = []
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")) & _U32)
        else:
            words.append(int(part) & _U32)
    return words


def seed_sequence(master_seed: int, *key: int | str) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by ``key`` under ``master_seed``."""
    return np.random.SeedSequence([int(master_seed) & _U32, *_key_words(key)])


def spawn_rng(master_seed: int, *key: int | str) -> np.random.Generator:
    """Generator for the stream identified by ``key`` under ``master_seed``."""
    return np.random.default_rng(seed_sequence(master_seed, *key))


def spawn_seed(master_seed: int, *key: int | str) -> int:
    """64-bit integer seed for the stream identified by ``key``.

    Used where a plain integer is needed (e.g. compiled kernels) or where a
    sub-component re-derives its own streams from it.
    """
    lo, hi = seed_sequence(master_seed, *key).generate_state(2)
    return int(lo) | (int(hi) << 32)
