"""Named, independent random substreams derived from one run seed."""
import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Return a generator for component ``name`` that does not share draws
    with any other component seeded from the same ``seed``."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("ascii"))])
