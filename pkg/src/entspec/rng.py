"""Counter-based uniform variates for shot-parallel simulation.

Every random number the simulator consumes is a pure function of
``(master_seed, shot_index, counter)``, so a shot's trajectory does not depend
on how shots are split into batches or spread over workers. The mixing
function is the SplitMix64 finalizer, evaluated on whole numpy arrays.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_COUNTER_SALT = np.uint64(0xD1B54A32D192ED03)
_INV_2_53 = 1.0 / (1 << 53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def _mix_int(z: int) -> int:
    mask = (1 << 64) - 1
    z &= mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def _seed_word(master_seed: int) -> np.uint64:
    # Fold arbitrary-size Python ints into one word; SeedSequence does the
    # entropy spreading so nearby seeds give unrelated streams.
    return np.uint64(np.random.SeedSequence(int(master_seed)).generate_state(1, np.uint64)[0])


class ShotStreams:
    """Uniform streams for a contiguous block of shots.

    Args:
        master_seed: Non-negative integer seed.
        first_shot: Global index of the first shot in the block.
        count: Number of shots in the block.
    """

    def __init__(self, master_seed: int, first_shot: int, count: int):
        if master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        self.master_seed = int(master_seed)
        self.first_shot = int(first_shot)
        self.count = int(count)
        shots = np.arange(first_shot, first_shot + count, dtype=np.uint64)
        with np.errstate(over="ignore"):
            self._keys = _mix(_seed_word(master_seed) + shots * _GOLDEN)

    def uniform(self, counter: int) -> np.ndarray:
        """Uniforms in [0, 1), one per shot, for draw number ``counter``."""
        c = np.uint64(_mix_int(int(counter) * int(_COUNTER_SALT) + int(_GOLDEN)))
        with np.errstate(over="ignore"):
            z = _mix(self._keys ^ c)
        return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53
