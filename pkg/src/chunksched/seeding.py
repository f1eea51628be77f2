"""Counter-based seed derivation.

All randomness descends from one master seed along a path of integers, e.g.
``(cell, realization, trial, role, link)``. A child seed depends only on its
path, so runs can be evaluated in any order or process and still draw the
same numbers.
"""

from __future__ import annotations

import random
import zlib

import numpy as np

# stream roles
LINK = 0
CHOICE = 1
CODING = 2


def derive(master: int, *path: int) -> int:
    """64-bit seed for ``path`` under ``master``."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(master: int, *path: int) -> random.Random:
    return random.Random(derive(master, *path))


def label_key(label: str) -> int:
    """Stable integer for a text label such as a table or cell name."""
    return zlib.crc32(label.encode("utf-8"))
