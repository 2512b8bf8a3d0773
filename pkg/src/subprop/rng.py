"""SplitMix64 pseudo-random generator.

Synthetic fixtures must be byte-stable across platforms and numpy releases,
so the generator is spelled out here instead of borrowed from ``numpy.random``
(whose ``Generator`` streams carry no cross-version guarantee).

SplitMix64 (Steele, Lea & Flood 2014): state advances by the golden-ratio
increment 0x9E3779B97F4A7C15 and each output is a mixed copy of the state.
Normals use the Box-Muller transform on two 53-bit uniforms.
"""
import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self):
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, lo, hi):
        """Uniform integer in the closed range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        # rejection sampling removes modulo bias
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def normal(self, mean=0.0, std=1.0):
        if std == 0:
            return float(mean)
        u1 = self.random()
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        return mean + std * r * math.cos(2.0 * math.pi * u2)
