"""Reproducible random streams keyed by (seed, replicate, channel).

Each stream is a Philox counter-based generator seeded from those three
integers, so replicate ``r`` of a batch sees the same numbers no matter how
replicates are scheduled. Draws are taken from raw 64-bit words so that the
pure-Python steppers and the compiled kernel consume identical sequences.
"""
import math

import numpy as np

BLOCK = 4096
JUMP_CHANNEL = 0
CLOCK_CHANNEL = 1

_TWO53 = 2.0**-53


class RandomStream:
    def __init__(self, seed=0, replicate=0, channel=JUMP_CHANNEL):
        if seed < 0 or replicate < 0:
            raise ValueError("seed and replicate must be nonnegative")
        self.key = (int(seed), int(replicate), int(channel))
        self._bitgen = np.random.Philox(np.random.SeedSequence(list(self.key)))
        self.buf = np.empty(0, dtype=np.uint64)
        self.pos = 0

    def ensure(self, k):
        """Make at least ``k`` unread words available in ``buf[pos:]``."""
        if self.buf.size - self.pos < k:
            fresh = self._bitgen.random_raw(max(k, BLOCK)).astype(np.uint64)
            self.buf = np.concatenate([self.buf[self.pos:], fresh])
            self.pos = 0

    def word(self) -> int:
        self.ensure(1)
        w = int(self.buf[self.pos])
        self.pos += 1
        return w

    def below(self, total: int) -> int:
        """Uniform integer in ``[0, total)`` by masked rejection (exact, unbiased)."""
        if total <= 0:
            raise ValueError("total must be positive")
        bits = (total - 1).bit_length()
        words = max(1, -(-bits // 64))
        mask = (1 << bits) - 1
        while True:
            w = 0
            for _ in range(words):
                w = (w << 64) | self.word()
            w &= mask
            if w < total:
                return w

    def uniform(self) -> float:
        """Uniform float in the open interval (0, 1)."""
        return ((self.word() >> 11) + 0.5) * _TWO53

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate


def streams(seed, replicate):
    """The (jump, clock) stream pair of one replicate."""
    return RandomStream(seed, replicate, JUMP_CHANNEL), RandomStream(seed, replicate, CLOCK_CHANNEL)
