"""Seed fan-out.

Every random stream is derived from a master seed plus a tuple of labels
(stage name, grammar, word index, retry number...) by hashing, so any stage or
word can be regenerated without replaying the streams before it.
"""

import hashlib
import random

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, *labels) -> int:
    """64-bit seed for the stream named by ``labels`` under ``master``."""
    key = repr((int(master) & MASK64,) + tuple(labels)).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def py_rng(master: int, *labels) -> random.Random:
    return random.Random(derive_seed(master, *labels))


def np_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))
