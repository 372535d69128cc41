"""Named deterministic random substreams.

Every stochastic element of the simulator (UD placement, task draws, rain
fades, exploration noise, ...) pulls from its own named substream derived
from the run seed.  Replaying a (config, seed) pair is therefore bit-exact,
and changing how one element consumes randomness never shifts the draws of
another.
"""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *path) -> np.random.Generator:
    """Generator for the substream identified by ``path`` under ``seed``.

    Path components are strings (hashed) or non-negative integers (taken
    as-is), e.g. ``substream(7, "episode", 12, "rain")``.  Distinct paths
    give statistically independent streams.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [int(seed)]
    for part in path:
        if isinstance(part, (int, np.integer)):
            if part < 0:
                raise ValueError("integer path components must be non-negative")
            entropy.append(int(part))
        else:
            entropy.append(zlib.crc32(str(part).encode("utf8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def generator_state(gen: np.random.Generator) -> dict:
    """JSON-serializable snapshot of a generator's position."""
    state = gen.bit_generator.state
    return {
        "bit_generator": state["bit_generator"],
        "state": int(state["state"]["state"]),
        "inc": int(state["state"]["inc"]),
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }


def restore_generator(snapshot: dict) -> np.random.Generator:
    """Rebuild a generator from a `generator_state` snapshot."""
    if snapshot["bit_generator"] != "PCG64":
        raise ValueError(f"unsupported bit generator {snapshot['bit_generator']!r}")
    gen = np.random.Generator(np.random.PCG64())
    gen.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(snapshot["state"]), "inc": int(snapshot["inc"])},
        "has_uint32": int(snapshot["has_uint32"]),
        "uinteger": int(snapshot["uinteger"]),
    }
    return gen
