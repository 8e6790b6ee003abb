"""Seeded random streams.

All randomness in the package flows through Philox, a counter-based
generator, so that every (method, problem, trial) cell owns an independent
stream and adding a method or trial never shifts another cell's draws.

Stream-splitting rule: a stream is identified by a tuple of non-negative
integers fed as entropy to ``numpy.random.SeedSequence``.  Cell seeds used
by the benchmark harness are derived as

    cell_seed = first 32-bit word of
        SeedSequence([base_seed, crc32(method_name), problem_index, trial])

which is the value recorded in run metadata.
"""

from __future__ import annotations

import zlib

import numpy as np

GENERATOR_NAME = "philox4x64"


def stream(*entropy: int) -> np.random.Generator:
    """Return an independent Philox stream for the given entropy tuple."""
    return np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(list(entropy))))


def method_tag(name: str) -> int:
    """Stable 32-bit tag for a method name, used in stream splitting."""
    return zlib.crc32(name.encode("ascii"))


def cell_seed(base_seed: int, method: str, problem_index: int, trial: int) -> int:
    """Per-(method, problem, trial) seed derived from a base seed."""
    ss = np.random.SeedSequence([base_seed, method_tag(method), problem_index, trial])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
