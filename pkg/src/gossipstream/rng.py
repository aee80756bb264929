"""Keyed random sub-streams for reproducible simulation runs.

Every stochastic draw in a run comes from a sub-stream derived from the
master seed plus a structural key (phase name, node id, tick, ...), so the
iteration order of a phase cannot perturb results.
"""

import random


def substream(seed: int, *key) -> random.Random:
    """Return a PRNG keyed by (seed, *key).

    String seeding goes through SHA-512 internally, so the stream is stable
    across platforms and Python versions.
    """
    material = str(seed) + "".join(f"|{part}" for part in key)
    return random.Random(material)
