"""Seeded, splittable random streams.

Every stochastic task receives a generator derived from ``(seed, *key)``
through :class:`numpy.random.SeedSequence`, so results depend only on the
task key and never on how tasks are scheduled across workers.
"""
import numpy as np

RandomStream = np.random.Generator


def derive_stream(seed, *key):
    """Return the generator for task ``key`` under root ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def as_stream(rng):
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def kernel_seed(rng):
    """Draw a 32-bit seed for a compiled kernel from ``rng``."""
    return int(as_stream(rng).integers(0, 2**32, dtype=np.uint64))


def kernel_seeds(seed, n, *key):
    """Kernel seeds for ``n`` tasks; task ``k`` equals ``kernel_seed(derive_stream(seed, *key, k))``."""
    return np.array([kernel_seed(derive_stream(seed, *key, k)) for k in range(n)], dtype=np.uint64)


def sub_seed(seed, *key):
    """A 63-bit integer seed for sub-task ``key`` under root ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))
