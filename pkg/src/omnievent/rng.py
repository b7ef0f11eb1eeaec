"""Named random streams.

Every stochastic operation draws from ``stream(seed, *ids)`` with a
module-specific stream id, so one user seed yields independent,
reproducible generators across sampling, parameter init, and curve-order
selection — and adding a new consumer never perturbs existing draws.
"""

import numpy as np

SAMPLING = 1
PARAMS = 2
ORDERS = 3
BENCH = 4


def stream(seed, *ids):
    return np.random.default_rng([int(seed), *map(int, ids)])
