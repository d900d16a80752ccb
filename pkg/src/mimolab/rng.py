"""Deterministic counter-based random substreams.

Every random quantity in the package is drawn from a Philox stream that is
addressed by (master seed, integer path). Distinct paths give statistically
independent streams, and the same (seed, path) always reproduces the same
draws, no matter in which order or on which worker the streams are consumed.
"""

import numpy as np


class RngTree:
    """A node in a tree of independent random substreams.

    ``child(*indices)`` descends to a subtree; ``generator()`` opens the
    stream at the current node. Typical usage assigns one child per
    (purpose, trial, ...) index tuple so that Monte Carlo trials can be
    evaluated concurrently without changing the draws.
    """

    __slots__ = ("seed", "path")

    def __init__(self, seed, path=()):
        self.seed = int(seed)
        self.path = tuple(int(i) for i in path)

    def child(self, *indices):
        return RngTree(self.seed, self.path + indices)

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngTree(seed={self.seed}, path={self.path})"


def complex_normal(rng, shape):
    """Standard circular complex Gaussian draws, E[z conj(z)] = 1.

    Each entry is (x + iy) / sqrt(2) with x, y independent standard normal.
    """
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def as_generator(rng):
    """Accept an RngTree, a Generator, or an integer seed."""
    if isinstance(rng, RngTree):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngTree(rng).generator()
