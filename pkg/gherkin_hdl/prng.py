"""
Deterministic 64-bit pseudorandom generator (SplitMix64)

The sequence depends only on the seed, so Examples tables generated from the
same (prompt, seed, width) are byte-identical on every platform.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def check_seed(seed: int) -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


class SplitMix64:
    """SplitMix64 generator with unbiased bounded draws"""

    def __init__(self, seed: int):
        self.seed = check_seed(seed)
        self.state = seed
        self.draws = 0

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        self.draws += 1
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` using rejection of the biased tail"""
        if n <= 0:
            raise ValueError("bound must be positive")
        if n > 1 << 64:
            raise ValueError("bound exceeds 64 bits")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in ``[low, high]``"""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        return low + self.below(high - low + 1)

    def choice(self, items):
        return items[self.below(len(items))]
