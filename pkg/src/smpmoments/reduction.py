"""Phase-space reduction of semi-Markov models.

Excluding a state ``k`` replaces every excursion through ``k`` by a single
direct transition. The reduced process observes the original one only at
times it sits outside ``k``, so hitting times of any state other than ``k``
are unchanged. Repeating the exclusion until only the target remains turns
the transition moments of the last reduced model into hitting-time moments.

Rows of excluded states are kept and updated at every later step: they
describe a process that starts in an excluded state and jumps into the
reduced space (a transition period). This lets any start state be read off
after a single full reduction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import scalar
from .errors import (
    AbsorbingState,
    DuplicateState,
    InactiveState,
    OrderOutOfRange,
    TargetExclusion,
)
from .linalg import PIVOT_FLOOR
from .model import MomentTable, SmpModel, _as_target, require_reachable


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """A model after some exclusions, stored over the full original index set.

    Columns of excluded states are identically zero; their rows are kept.
    """

    moments: np.ndarray
    active: tuple
    excluded: tuple = ()
    protected: frozenset = field(default_factory=frozenset)
    mode: str = scalar.RATIONAL
    reward_kind: str = "nonnegative"
    tolerance: float = scalar.DEFAULT_TOLERANCE

    @classmethod
    def from_model(cls, model: SmpModel, target=()) -> "ReducedModel":
        protected = _as_target(model, target) if _nonempty(target) else frozenset()
        return cls(
            moments=model.moments,
            active=tuple(model.states),
            protected=protected,
            mode=model.mode,
            reward_kind=model.reward_kind,
            tolerance=model.tolerance,
        )

    @property
    def p(self) -> np.ndarray:
        return self.moments[0]

    @property
    def d(self) -> int:
        return self.moments.shape[0] - 1

    @property
    def n(self) -> int:
        return self.moments.shape[1]

    def as_model(self) -> SmpModel:
        """The reduced process as an ordinary model over the original states."""
        return SmpModel(self.moments, reward_kind=self.reward_kind, mode=self.mode, tolerance=self.tolerance)

    def rows(self, r: int = 0, rows=None) -> np.ndarray:
        """Order-``r`` moments restricted to ``rows`` x active columns."""
        rows = self.active if rows is None else rows
        return self.moments[r][np.ix_(list(rows), list(self.active))]


def _nonempty(target) -> bool:
    if isinstance(target, (int, np.integer)):
        return True
    return len(tuple(target)) > 0


def _eliminate(mom: np.ndarray, k: int, mode: str) -> None:
    """Exclude ``k`` from the writable tensor ``mom`` in place."""
    d = mom.shape[0] - 1
    denom = 1 - mom[0, k, k]
    if (mode == scalar.RATIONAL and denom <= 0) or (mode == scalar.FLOAT and denom <= PIVOT_FLOOR):
        raise AbsorbingState(f"state {k} is absorbing (p_kk = 1); the target cannot be hit from it")

    row_k = [None] * (d + 1)
    for r in range(d + 1):
        acc = mom[r, k, :].copy()
        for l in range(r):
            acc = acc + comb(r, l) * mom[r - l, k, k] * row_k[l]
        row_k[r] = acc / denom
        row_k[r][k] = 0 * row_k[r][k]

    # only rows entering k and columns reachable from k change
    col_k = [mom[s, :, k].copy() for s in range(d + 1)]
    rows = [i for i in np.flatnonzero(np.any(np.stack(col_k) != 0, axis=0)) if i != k]
    cols = list(np.flatnonzero(np.any(np.stack(row_k) != 0, axis=0)))
    if rows and cols:
        block = np.ix_(rows, cols)
        for r in range(d + 1):
            acc = mom[r][block] + np.outer(col_k[0][rows], row_k[r][cols])
            for l in range(r):
                acc = acc + comb(r, l) * np.outer(col_k[r - l][rows], row_k[l][cols])
            mom[r][block] = acc
    for r in range(d + 1):
        mom[r, k, :] = row_k[r]
        mom[r, :, k] = 0 * mom[r, :, k]


def exclude_state(model: ReducedModel, k: int) -> ReducedModel:
    """Remove state ``k`` from the active phase space.

    With ``q_j = p_kj / (1 - p_kk)`` the new transition probabilities are
    ``p'_kj = q_j`` and ``p'_ij = p_ij + p_ik q_j``. Moments are updated for
    r = 1..d in increasing order::

        e'_kj(r) = (e_kj(r) + sum_{l<r} C(r,l) e_kk(r-l) e'_kj(l)) / (1 - p_kk)
        e'_ij(r) = e_ij(r) + sum_{l<r} C(r,l) e_ik(r-l) e'_kj(l) + p_ik e'_kj(r)
    """
    k = int(k)
    if k in model.protected:
        raise TargetExclusion(f"state {k} is a hitting target and cannot be excluded")
    if k not in model.active:
        raise InactiveState(f"state {k} is not in the active phase space {list(model.active)}")
    new = np.array(model.moments, copy=True)
    _eliminate(new, k, model.mode)
    new.setflags(write=False)
    return ReducedModel(
        moments=new,
        active=tuple(s for s in model.active if s != k),
        excluded=model.excluded + (k,),
        protected=model.protected,
        mode=model.mode,
        reward_kind=model.reward_kind,
        tolerance=model.tolerance,
    )


@dataclass(frozen=True)
class ReductionTrace:
    initial: ReducedModel
    steps: tuple  # of (excluded state, ReducedModel)

    @property
    def final(self) -> ReducedModel:
        return self.steps[-1][1] if self.steps else self.initial

    def to_json(self) -> dict:
        def snapshot(rm: ReducedModel, rows):
            return {
                "active": list(rm.active),
                "rows": list(rows),
                "p": _jsonable(rm.rows(0, rows)),
                "e": [_jsonable(rm.rows(r, rows)) for r in range(1, rm.d + 1)],
            }

        out = {
            "target": sorted(self.initial.protected),
            "initial": snapshot(self.initial, self.initial.active),
            "steps": [],
        }
        for k, rm in self.steps:
            rows = sorted(set(rm.active) | set(rm.excluded))
            out["steps"].append({"excluded": k, **snapshot(rm, rows)})
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _jsonable(mat) -> list:
    return [[scalar.jsonable(x) for x in row] for row in mat]


def _checked(model: SmpModel, order, target):
    order = [int(k) for k in order]
    seen = set()
    for k in order:
        if k in seen:
            raise DuplicateState(f"state {k} appears twice in the exclusion order")
        seen.add(k)
    targets = require_reachable(model, target)
    for k in order:
        if k in targets:
            raise TargetExclusion(f"state {k} is a hitting target and cannot be excluded")
        if not 0 <= k < model.n:
            raise InactiveState(f"state {k} outside 0..{model.m}")
    return order, ReducedModel.from_model(model, targets)


def reduce_sequence(model: SmpModel, order, target) -> ReductionTrace:
    """Exclude the states of ``order`` one after another, recording every step."""
    order, current = _checked(model, order, target)
    start = current
    steps = []
    for k in order:
        current = exclude_state(current, k)
        steps.append((k, current))
    return ReductionTrace(start, tuple(steps))


def reduce_to(model: SmpModel, order, target) -> ReducedModel:
    """Like :func:`reduce_sequence` but keeps only the final reduced model."""
    order, start = _checked(model, order, target)
    mom = np.array(start.moments, copy=True)
    active = list(start.active)
    for k in order:
        if k not in active:
            raise InactiveState(f"state {k} is not in the active phase space {active}")
        _eliminate(mom, k, model.mode)
        active.remove(k)
    mom.setflags(write=False)
    return ReducedModel(
        moments=mom,
        active=tuple(active),
        excluded=tuple(order),
        protected=start.protected,
        mode=start.mode,
        reward_kind=start.reward_kind,
        tolerance=start.tolerance,
    )


def default_order(n: int, target, start=None) -> list:
    """Ascending non-target states, with ``start`` moved to the end."""
    targets = {target} if isinstance(target, (int, np.integer)) else set(target)
    order = [k for k in range(n) if k not in targets and k != start]
    if start is not None and start not in targets:
        order.append(start)
    return order


def hitting_moments(
    model: SmpModel,
    target: int,
    start_states=None,
    d: int | None = None,
    order=None,
    shared: bool = False,
) -> MomentTable:
    """Moments ``E_i[W^r]`` of the first hitting time of ``target``, r = 0..d.

    By default every non-target start state ``i`` gets its own full reduction
    with ``i`` excluded last, and the answer is read from the one-state model
    that remains. ``order`` fixes a single exclusion order (a permutation of
    all non-target states) used for every start; ``shared=True`` does one
    ascending reduction for all starts. The results do not depend on the
    order, which the test suite checks.
    """
    target = int(target)
    require_reachable(model, target)
    if d is None:
        d = model.d
    if not 1 <= d <= model.d:
        raise OrderOutOfRange(f"order {d} outside 1..{model.d}")
    work = model if d == model.d else model.truncated(d)
    starts = tuple(model.states) if start_states is None else tuple(int(i) for i in start_states)
    for i in starts:
        if not 0 <= i < model.n:
            raise InactiveState(f"start state {i} outside 0..{model.m}")
    values = scalar.zeros((d + 1, len(starts)), model.mode)

    if order is not None or shared:
        if order is None:
            order = default_order(model.n, target)
        order = [int(k) for k in order]
        expected = set(default_order(model.n, target))
        if set(order) != expected or len(order) != len(expected):
            raise InactiveState(f"exclusion order must be a permutation of {sorted(expected)}")
        final = reduce_to(work, order, target)
        for s, i in enumerate(starts):
            values[:, s] = final.moments[:, i, target]
    else:
        cache = {}
        for s, i in enumerate(starts):
            key = None if i == target else i
            if key not in cache:
                cache[key] = reduce_to(work, default_order(model.n, target, key), target)
            values[:, s] = cache[key].moments[:, i, target]
    values[0, :] = model.one()
    return MomentTable(target=(target,), starts=starts, values=values)
