"""Hitting-time moments from the recurrent linear systems.

For the target ``t`` and ``r = 1..d`` the moments solve

    E_i(r) = f_i(r) + sum_{j != t} p_ij E_j(r),
    f_i(r) = e_it(r) + sum_{j != t} sum_{l<r} C(r,l) e_ij(r-l) E_j(l),

so every order shares the coefficient matrix ``I - P_0`` over the non-target
states. The target row is not part of the system; its moment follows from
its defining equation once the others are known.

This module is an oracle for the reduction algorithm and shares no code path
with it beyond the model itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import scalar
from .errors import MissingLowerMoments, OrderOutOfRange, UnreachableTargetSet
from .linalg import inverse, solve
from .model import MomentTable, SmpModel, require_reachable


def _others(model: SmpModel, target: int) -> list:
    return [j for j in model.states if j != target]


def coefficient_matrix(model: SmpModel, target: int) -> np.ndarray:
    """``I - P_0`` restricted to the non-target states."""
    idx = _others(model, target)
    sub = model.p[np.ix_(idx, idx)]
    return scalar.identity(len(idx), model.mode) - sub


def build_free_terms(model: SmpModel, target: int, r: int, lower) -> np.ndarray:
    """Free terms ``f_i(r)`` for every state ``i`` (the target included).

    ``lower[l]`` is the length-(m+1) vector of ``E_j(l)`` for l = 0..r-1;
    entries at the target index are ignored.
    """
    if not 1 <= r <= model.d:
        raise OrderOutOfRange(f"order {r} outside 1..{model.d}")
    if lower is None or len(lower) < r:
        raise MissingLowerMoments(f"order {r} needs moments of orders 0..{r - 1}")
    idx = _others(model, target)
    e = model.moments
    f = np.array(e[r, :, target], copy=True)
    for l in range(r):
        low = np.asarray(lower[l])[idx]
        f = f + comb(r, l) * (e[r - l][:, idx] @ low)
    return f


def _finish_target_row(model, target, f, sol_full):
    idx = _others(model, target)
    return f[target] + model.p[target, idx] @ sol_full[idx]


def solve_moments(model: SmpModel, target: int, d: int | None = None) -> MomentTable:
    """Solve the recurrent systems by elimination, r = 1..d in increasing order."""
    target = int(target)
    require_reachable(model, target)
    d = model.d if d is None else d
    if not 1 <= d <= model.d:
        raise OrderOutOfRange(f"order {d} outside 1..{model.d}")
    a = coefficient_matrix(model, target)
    idx = _others(model, target)
    values = scalar.zeros((d + 1, model.n), model.mode)
    values[0, :] = model.one()
    for r in range(1, d + 1):
        f = build_free_terms(model, target, r, values[:r])
        values[r, idx] = solve(a, f[idx])
        values[r, target] = _finish_target_row(model, target, f, values[r])
    return MomentTable(target=(target,), starts=tuple(model.states), values=values)


@dataclass(frozen=True)
class GreenMatrix:
    """``(I - P_0)^{-1}`` over the non-target states ``states``.

    Entry ``(i, j)`` is the expected number of visits to ``j`` (counting the
    start) before the chain started in ``i`` first hits the target.
    """

    target: int
    states: tuple
    g: np.ndarray

    def __getitem__(self, key):
        i, j = key
        return self.g[self.states.index(i), self.states.index(j)]

    def expected_steps(self, model: SmpModel) -> np.ndarray:
        """Expected number of embedded jumps to hit the target, for every start."""
        out = scalar.zeros(model.n, model.mode)
        row_sums = self.g.sum(axis=1)
        out[list(self.states)] = row_sums
        out[self.target] = model.one() + model.p[self.target, list(self.states)] @ row_sums
        return out


def green_matrix(model: SmpModel, target: int) -> GreenMatrix:
    target = int(target)
    require_reachable(model, target)
    g = inverse(coefficient_matrix(model, target))
    return GreenMatrix(target=target, states=tuple(_others(model, target)), g=g)


def green_moments(model: SmpModel, target: int, d: int | None = None) -> MomentTable:
    """Moments via ``E(r) = G f(r)`` with the Green matrix, r = 1..d."""
    target = int(target)
    gm = green_matrix(model, target)
    d = model.d if d is None else d
    if not 1 <= d <= model.d:
        raise OrderOutOfRange(f"order {d} outside 1..{model.d}")
    idx = list(gm.states)
    values = scalar.zeros((d + 1, model.n), model.mode)
    values[0, :] = model.one()
    for r in range(1, d + 1):
        f = build_free_terms(model, target, r, values[:r])
        values[r, idx] = gm.g @ f[idx]
        values[r, target] = _finish_target_row(model, target, f, values[r])
    return MomentTable(target=(target,), starts=tuple(model.states), values=values)


def indicator_moments_direct(model: SmpModel, targets, d: int | None = None) -> dict:
    """``E_i[W_D^r; J_{U_D} = j]`` for every state i and every j in D, by linear solves.

    Returns ``{j: array of shape (d+1, m+1)}``. Order zero gives the hitting
    probabilities; the free terms of order r use the indicator moments of
    orders below r.
    """
    targets = sorted(require_reachable(model, targets, UnreachableTargetSet))
    d = model.d if d is None else d
    if not 1 <= d <= model.d:
        raise OrderOutOfRange(f"order {d} outside 1..{model.d}")
    outside = [j for j in model.states if j not in targets]
    e = model.moments
    a = scalar.identity(len(outside), model.mode) - model.p[np.ix_(outside, outside)]
    out = {}
    for j in targets:
        vals = scalar.zeros((d + 1, model.n), model.mode)
        for r in range(d + 1):
            f = np.array(e[r, :, j], copy=True)
            for l in range(r):
                f = f + comb(r, l) * (e[r - l][:, outside] @ vals[l, outside])
            if outside:
                vals[r, outside] = solve(a, f[outside])
            for t in targets:
                vals[r, t] = f[t] + (model.p[t, outside] @ vals[r, outside] if outside else 0)
        out[j] = vals
    return out
