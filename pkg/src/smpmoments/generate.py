"""Random models with explicit sojourn laws, for property tests and demos.

Every non-target state gets an edge towards state 0 along a random spanning
path, so state 0 is reachable from everywhere and no state is absorbing.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import scalar
from .mc import DistributionSpec, Exponential, Mixture, Point
from .model import SmpModel

_RATES = (Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3), Fraction(1, 3))


def random_law(rng, negative: bool = False):
    kind = rng.integers(3)
    if kind == 0:
        at = Fraction(int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        if negative and rng.random() < 0.4:
            at = -at
        return Point(at)
    if kind == 1:
        return Exponential(_RATES[rng.integers(len(_RATES))])
    w = Fraction(int(rng.integers(1, 4)), 4)
    return Mixture(((Point(Fraction(int(rng.integers(1, 5)))), w), (Exponential(_RATES[rng.integers(len(_RATES))]), 1 - w)))


def random_spec(
    rng,
    m: int,
    density: float = 0.5,
    negative: bool = False,
    target=(0,),
) -> DistributionSpec:
    """A law table on states 0..m whose targets are reachable from every state.

    Rows of ``target`` states are random too, so every state has a row.
    """
    n = m + 1
    targets = set(int(t) for t in target)
    others = [s for s in range(n) if s not in targets]
    perm = [others[k] for k in rng.permutation(len(others))]
    # chain perm[-1] -> ... -> perm[0] -> some target
    forced = {}
    for pos, s in enumerate(perm):
        forced[s] = perm[pos - 1] if pos > 0 else sorted(targets)[rng.integers(len(targets))]
    p = np.empty((n, n), dtype=object)
    laws = {}
    for i in range(n):
        support = {j for j in range(n) if rng.random() < density}
        if i in forced:
            support.add(forced[i])
        if not support:
            support.add(int(rng.integers(n)))
        if support == {i}:
            support.add((i + 1) % n)
        weights = {j: int(rng.integers(1, 6)) for j in support}
        total = sum(weights.values())
        for j in range(n):
            p[i, j] = Fraction(weights.get(j, 0), total)
            if j in support:
                laws[(i, j)] = random_law(rng, negative)
    return DistributionSpec(p, laws, scalar.RATIONAL)


def random_model(
    rng,
    m: int,
    d: int,
    mode: str = scalar.RATIONAL,
    density: float = 0.5,
    negative: bool = False,
    target=(0,),
) -> SmpModel:
    """A consistent model (moments taken from random laws) over states 0..m."""
    spec = random_spec(rng, m, density, negative, target)
    model = spec.to_model(d, reward_kind="real" if negative else "nonnegative")
    return model if mode == scalar.RATIONAL else model.as_float()
