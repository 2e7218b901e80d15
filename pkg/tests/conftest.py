from fractions import Fraction

import numpy as np

from mlia.gdof_core import AlphaProfile


def random_profile(rng: np.random.Generator, k: int, max_den: int = 32) -> AlphaProfile:
    """A random valid profile: k sorted rationals in (0, 1], ties allowed."""
    values = []
    for _ in range(k):
        den = int(rng.integers(1, max_den + 1))
        num = int(rng.integers(1, den + 1))
        values.append(Fraction(num, den))
    return AlphaProfile(tuple(sorted(values)))
