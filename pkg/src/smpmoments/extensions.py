"""Generalised hitting functionals built on the reduction engine.

* hitting sets with the entrance state recorded (indicator moments),
* bivariate rewards and their mixed moments,
* place-dependent hitting (the pair ``(J_{n-1}, J_n)`` must fall in a set),
* time-dependent hitting over a finite horizon.

The last two are handled by building an ordinary model on an enlarged state
space and running the indicator computation on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import scalar
from .errors import (
    HorizonMismatch,
    InactiveState,
    MalformedDocument,
    MissingFinalTarget,
    OrderOutOfRange,
    RowSumViolation,
    SingularMixSystem,
    SingularSystem,
    UnhittableDomain,
    UnreachableTargetSet,
    WeightOutOfRange,
)
from .linalg import solve
from .model import REAL, SmpModel, _as_target, _matrix, _require_int, load_model, read_document, require_reachable
from .reduction import hitting_moments, reduce_to


@dataclass(frozen=True)
class IndicatorMomentTable:
    """``values[r, s, c] = E_i[W_D^r; J_{U_D} = j]`` for ``i = starts[s]``, ``j = targets[c]``."""

    targets: tuple
    starts: tuple
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, key):
        r, i, j = key
        return self.values[r, self.starts.index(i), self.targets.index(j)]

    def marginal(self) -> np.ndarray:
        """Plain moments of ``W_D``: the sum over entrance states, shape (d+1, starts)."""
        return self.values.sum(axis=2)

    def hitting_probabilities(self) -> np.ndarray:
        return self.values[0]


def _check_d(d, model):
    d = model.d if d is None else d
    if not 1 <= d <= model.d:
        raise OrderOutOfRange(f"order {d} outside 1..{model.d}")
    return d


def indicator_moments(model: SmpModel, targets, d: int | None = None, start_states=None, shared=False) -> IndicatorMomentTable:
    """Moments of the hitting time of ``targets`` split by the state entered.

    Each start state outside the set gets a reduction of every other outside
    state followed by its own exclusion; starts inside the set share one
    reduction of the complement. After that the transition moments into the
    set are the requested indicator moments. ``shared=True`` uses one
    reduction for all starts.
    """
    tset = tuple(sorted(require_reachable(model, targets, UnreachableTargetSet)))
    d = _check_d(d, model)
    work = model if d == model.d else model.truncated(d)
    starts = tuple(model.states) if start_states is None else tuple(int(i) for i in start_states)
    for i in starts:
        if not 0 <= i < model.n:
            raise InactiveState(f"start state {i} outside 0..{model.m}")
    outside = [k for k in model.states if k not in tset]
    values = scalar.zeros((d + 1, len(starts), len(tset)), model.mode)
    cache = {}
    for s, i in enumerate(starts):
        key = None if (shared or i in tset) else i
        if key not in cache:
            order = [k for k in outside if k != key] + ([key] if key is not None else [])
            cache[key] = reduce_to(work, order, tset)
        final = cache[key]
        values[:, s, :] = final.moments[:, i, list(tset)]
    return IndicatorMomentTable(targets=tset, starts=starts, values=values)


def merge_targets(model: SmpModel, targets) -> tuple:
    """Collapse ``targets`` into one new absorbing state appended at index ``m+1``.

    Transitions into any target are redirected to the new state, so the
    hitting time of the new state equals the hitting time of the set from
    every original state. The new state is a self-loop with zero rewards.
    Returns ``(merged_model, super_state)``.
    """
    tset = sorted(_as_target(model, targets))
    n = model.n
    mom = scalar.zeros((model.d + 1, n + 1, n + 1), model.mode)
    keep = [j for j in model.states if j not in tset]
    for r in range(model.d + 1):
        for j in keep:
            mom[r, :n, j] = model.moments[r, :, j]
        mom[r, :n, n] = model.moments[r][:, tset].sum(axis=1)
    mom[0, n, n] = model.one()
    return model.with_moments(mom), n


# ---------------------------------------------------------------- bivariate


@dataclass(frozen=True, eq=False)
class BivariateModel:
    """Embedded chain plus mixed local moments of a reward pair.

    ``mixed[q, s, i, j] = E_i[X1^q X2^s; J_1 = j]`` for ``q + s <= d``;
    entries with ``q + s > d`` are unused. ``mixed[0, 0]`` is ``p``.
    """

    mixed: np.ndarray
    mode: str = scalar.RATIONAL
    tolerance: float = scalar.DEFAULT_TOLERANCE

    def __post_init__(self):
        mixed = np.asarray(self.mixed)
        if mixed.ndim != 4 or mixed.shape[0] != mixed.shape[1] or mixed.shape[2] != mixed.shape[3]:
            raise MalformedDocument(f"mixed moment tensor must have shape (d+1, d+1, n, n), got {mixed.shape}")
        if mixed.dtype != scalar.dtype_for(self.mode):
            mixed = scalar.as_array(mixed, self.mode)
        mixed = np.array(mixed, copy=True)
        mixed.setflags(write=False)
        object.__setattr__(self, "mixed", mixed)
        # validates p through the scalar model machinery
        SmpModel(np.stack([self.p, self.p]), reward_kind=REAL, mode=self.mode, tolerance=self.tolerance)

    @property
    def p(self) -> np.ndarray:
        return self.mixed[0, 0]

    @property
    def d(self) -> int:
        return self.mixed.shape[0] - 1

    @property
    def n(self) -> int:
        return self.mixed.shape[2]

    @classmethod
    def from_rewards(cls, p, x1, x2, d: int, mode: str = scalar.RATIONAL) -> "BivariateModel":
        """Deterministic reward pair ``(x1[i,j], x2[i,j])`` on each transition."""
        p = scalar.as_array(p, mode)
        x1 = scalar.as_array(x1, mode)
        x2 = scalar.as_array(x2, mode)
        n = p.shape[0]
        mixed = scalar.zeros((d + 1, d + 1, n, n), mode)
        for q in range(d + 1):
            for s in range(d + 1 - q):
                mixed[q, s] = p * x1**q * x2**s
        return cls(mixed, mode=mode)

    def marginal(self, component: int) -> SmpModel:
        """Scalar model of one reward component (1 or 2)."""
        if component == 1:
            mom = np.stack([self.mixed[r, 0] for r in range(self.d + 1)])
        elif component == 2:
            mom = np.stack([self.mixed[0, r] for r in range(self.d + 1)])
        else:
            raise ValueError("component must be 1 or 2")
        return SmpModel(mom, reward_kind=REAL, mode=self.mode, tolerance=self.tolerance)


def _weight(a, mode):
    a = scalar.convert(a, mode) if not isinstance(a, str) else scalar.parse_scalar(a, mode)
    if not 0 <= a <= 1:
        raise WeightOutOfRange(f"mixing weight {a} outside [0, 1]")
    return a


def scalarize(bi: BivariateModel, a, d: int | None = None) -> SmpModel:
    """Scalar model of the reward ``a X1 + (1 - a) X2``.

    ``e_r(a) = sum_q C(r,q) a^q (1-a)^(r-q) mixed[q, r-q]``.
    """
    a = _weight(a, bi.mode)
    d = bi.d if d is None else d
    if not 1 <= d <= bi.d:
        raise OrderOutOfRange(f"order {d} outside 1..{bi.d}")
    mom = scalar.zeros((d + 1, bi.n, bi.n), bi.mode)
    mom[0] = bi.p
    for r in range(1, d + 1):
        acc = scalar.zeros((bi.n, bi.n), bi.mode)
        for q in range(r + 1):
            acc = acc + comb(r, q) * a**q * (1 - a) ** (r - q) * bi.mixed[q, r - q]
        mom[r] = acc
    return SmpModel(mom, reward_kind=REAL, mode=bi.mode, tolerance=bi.tolerance)


def default_nodes(r: int, mode: str) -> list:
    if mode == scalar.RATIONAL:
        return [Fraction(k, r) for k in range(r + 1)]
    return [k / r for k in range(r + 1)]


def mixed_moments(bi: BivariateModel, target: int, d: int | None = None, nodes=None) -> dict:
    """Mixed moments ``E_i[W1^q W2^(r-q)]`` keyed by ``(q, r)``, one array over states.

    For each r the scalarised moments at r + 1 mixing weights (``k/r`` by
    default) are computed with the reduction algorithm; the binomial system
    linking them to the mixed moments is then solved. ``nodes`` may map r to
    a custom list of r + 1 distinct weights.
    """
    target = int(target)
    d = bi.d if d is None else d
    if not 1 <= d <= bi.d:
        raise OrderOutOfRange(f"order {d} outside 1..{bi.d}")
    out = {(0, 0): scalar.ones(bi.n, bi.mode)}
    for r in range(1, d + 1):
        pts = [_weight(a, bi.mode) for a in (nodes[r] if nodes else default_nodes(r, bi.mode))]
        if len(pts) != r + 1:
            raise MalformedDocument(f"order {r} needs {r + 1} mixing weights, got {len(pts)}")
        rhs = scalar.zeros((r + 1, bi.n), bi.mode)
        coef = scalar.zeros((r + 1, r + 1), bi.mode)
        for k, a in enumerate(pts):
            table = hitting_moments(scalarize(bi, a, d=r), target, d=r)
            rhs[k] = table.values[r]
            for q in range(r + 1):
                coef[k, q] = comb(r, q) * a**q * (1 - a) ** (r - q)
        try:
            sol = solve(coef, rhs)
        except SingularSystem as exc:
            raise SingularMixSystem(f"mixing weights for order {r} give a singular system") from exc
        for q in range(r + 1):
            out[(q, r)] = sol[q]
    return out


def reassemble(mixed: dict, r: int, a) -> np.ndarray:
    """``E_i[W(a)^r]`` recomputed from mixed moments of total order r."""
    return sum(comb(r, q) * a**q * (1 - a) ** (r - q) * mixed[(q, r)] for q in range(r + 1))


# ---------------------------------------------------------------- embeddings


@dataclass(frozen=True)
class PairEmbedding:
    """Model on pairs ``(previous state, current state)``."""

    model: SmpModel
    targets: tuple
    pairs: tuple
    initial_prev: int | None

    def index(self, pair) -> int:
        return self.pairs.index(tuple(pair))

    def start_index(self, state: int) -> int:
        prev = state if self.initial_prev is None else self.initial_prev
        return self.index((prev, state))


def embed_place_dependent(model: SmpModel, pairs, initial_prev: int | None = None) -> PairEmbedding:
    """Embed hitting of a set of transitions into hitting of a set of states.

    The embedded chain lives on pairs ``(J_{n-1}, J_n)``; ``(i, j) -> (j, l)``
    carries the moments of ``j -> l``. A path started in ``s`` begins at the
    pair ``(initial_prev, s)``, or ``(s, s)`` when no previous state is given.
    Only pairs reachable from the starting pairs are kept.
    """
    domain = {(int(i), int(j)) for i, j in pairs}
    if not domain:
        raise UnhittableDomain("the set of transitions is empty")
    n = model.n
    for i, j in domain:
        if not (0 <= i < n and 0 <= j < n):
            raise MalformedDocument(f"pair {(i, j)} outside the state space")
    if initial_prev is not None and not 0 <= initial_prev < n:
        raise MalformedDocument(f"initial previous state {initial_prev} outside 0..{model.m}")
    p = model.p
    starts = [((s if initial_prev is None else initial_prev), s) for s in model.states]
    seen = list(dict.fromkeys(starts))
    known = set(seen)
    pos = 0
    while pos < len(seen):
        _, j = seen[pos]
        pos += 1
        for l in model.states:
            if p[j, l] > 0 and (j, l) not in known:
                known.add((j, l))
                seen.append((j, l))
    pair_list = tuple(sorted(seen))
    index = {pair: k for k, pair in enumerate(pair_list)}
    size = len(pair_list)
    mom = scalar.zeros((model.d + 1, size, size), model.mode)
    for a, (_, j) in enumerate(pair_list):
        for l in model.states:
            if (j, l) in index:
                mom[:, a, index[(j, l)]] = model.moments[:, j, l]
            elif any(model.moments[r, j, l] != 0 for r in range(model.d + 1)):
                raise RowSumViolation(f"transition {j}->{l} has moments but zero probability")
    hittable = [index[g] for g in domain if g in index and p[g] > 0]
    if not hittable:
        raise UnhittableDomain("no pair of the domain is a possible transition")
    emb = model.with_moments(mom)
    targets = tuple(sorted(index[g] for g in domain if g in index))
    require_reachable(emb, targets, UnhittableDomain)
    return PairEmbedding(model=emb, targets=targets, pairs=pair_list, initial_prev=initial_prev)


def place_dependent_moments(
    model: SmpModel, pairs, d: int | None = None, initial_prev: int | None = None, shared: bool = True
) -> np.ndarray:
    """Moments of the place-dependent hitting reward, shape (d+1, m+1) by start state."""
    emb = embed_place_dependent(model, pairs, initial_prev)
    starts = [emb.start_index(s) for s in model.states]
    table = indicator_moments(emb.model, emb.targets, d=d, start_states=starts, shared=shared)
    return table.marginal()


@dataclass(frozen=True)
class TimeEmbedding:
    """Model on ``(step, state)`` pairs over the horizon ``h``."""

    model: SmpModel
    targets: tuple
    horizon: int
    n_states: int

    def index(self, step: int, state: int) -> int:
        return step * self.n_states + state


def embed_time_dependent(step_models, target_sets) -> TimeEmbedding:
    """Embed a time-inhomogeneous model truncated at ``h = len(step_models)``.

    ``step_models[n-1]`` governs the jump from step n-1 to step n and
    ``target_sets[n-1]`` is the set that stops the walk at step n; the last
    set must be the whole state space. States at step h are self-loops with
    zero reward and are all targets.
    """
    h = len(step_models)
    if h < 1:
        raise HorizonMismatch("at least one step model is required")
    if len(target_sets) != h:
        raise HorizonMismatch(f"{h} step models but {len(target_sets)} target sets")
    first = step_models[0]
    n, d, mode = first.n, first.d, first.mode
    for sm in step_models:
        if sm.n != n or sm.d != d or sm.mode != mode:
            raise HorizonMismatch("step models must share state count, order and scalar mode")
    sets = [frozenset(int(x) for x in ds) for ds in target_sets]
    if sets[-1] != frozenset(range(n)):
        raise MissingFinalTarget("the target set at the horizon must be the whole state space")
    size = (h + 1) * n
    mom = scalar.zeros((d + 1, size, size), mode)
    for step in range(h):
        block = step_models[step].moments
        rows = slice(step * n, (step + 1) * n)
        cols = slice((step + 1) * n, (step + 2) * n)
        mom[:, rows, cols] = block
    for i in range(n):
        mom[0, h * n + i, h * n + i] = first.one()
    targets = tuple(step * n + j for step in range(1, h + 1) for j in sorted(sets[step - 1]))
    emb = first.with_moments(mom, reward_kind=first.reward_kind)
    return TimeEmbedding(model=emb, targets=targets, horizon=h, n_states=n)


def time_dependent_moments(step_models, target_sets, d: int | None = None, shared=True) -> np.ndarray:
    """Moments of the time-dependent hitting reward from step 0, shape (d+1, m+1)."""
    emb = embed_time_dependent(step_models, target_sets)
    starts = [emb.index(0, i) for i in range(emb.n_states)]
    table = indicator_moments(emb.model, emb.targets, d=d, start_states=starts, shared=shared)
    return table.marginal()


# ---------------------------------------------------------------- documents


def load_bivariate(source, mode: str = scalar.RATIONAL, tolerance: float = scalar.DEFAULT_TOLERANCE) -> BivariateModel:
    """Read ``m``, ``d``, ``p`` and either ``e_mixed[q][s]`` or ``rewards``.

    ``e_mixed`` is indexed first by the power of the first component, then of
    the second (a nested array or an object with numeric keys); every pair
    with ``1 <= q + s <= d`` is required. ``rewards`` holds deterministic
    reward matrices ``{"x1": ..., "x2": ...}`` instead.
    """
    doc = read_document(source)
    m = _require_int(doc, "m", 0)
    d = _require_int(doc, "d", 1)
    n = m + 1
    if "p" not in doc:
        raise MalformedDocument("bivariate document needs 'p'")
    p = _matrix(doc["p"], n, mode, "p")
    if "rewards" in doc:
        rw = doc["rewards"]
        if not isinstance(rw, dict) or "x1" not in rw or "x2" not in rw:
            raise MalformedDocument("'rewards' must hold matrices 'x1' and 'x2'")
        bi = BivariateModel.from_rewards(p, _matrix(rw["x1"], n, mode, "x1"), _matrix(rw["x2"], n, mode, "x2"), d, mode)
        return BivariateModel(bi.mixed, mode=mode, tolerance=tolerance)
    raw = doc.get("e_mixed")
    if raw is None:
        raise MalformedDocument("bivariate document needs 'e_mixed' or 'rewards'")

    def entry(q, s):
        try:
            row = raw[str(q)] if isinstance(raw, dict) else raw[q]
            val = row[str(s)] if isinstance(row, dict) else row[s]
        except (KeyError, IndexError, TypeError):
            val = None
        if val is None:
            raise MalformedDocument(f"e_mixed[{q}][{s}] is missing")
        return _matrix(val, n, mode, f"e_mixed[{q}][{s}]")

    mixed = scalar.zeros((d + 1, d + 1, n, n), mode)
    mixed[0, 0] = p
    for q in range(d + 1):
        for s in range(d + 1 - q):
            if q + s:
                mixed[q, s] = entry(q, s)
    return BivariateModel(mixed, mode=mode, tolerance=tolerance)


def load_time_dependent(source, mode: str = scalar.RATIONAL, tolerance: float = scalar.DEFAULT_TOLERANCE) -> tuple:
    """Read ``{"steps": [model, ...], "targets": [[...], ...]}``.

    Each step is an ordinary model document. Returns ``(step_models, target_sets)``.
    """
    doc = read_document(source)
    steps = doc.get("steps")
    sets = doc.get("targets")
    if not isinstance(steps, list) or not steps:
        raise MalformedDocument("'steps' must be a nonempty array of model documents")
    if not isinstance(sets, list) or any(not isinstance(ds, list) for ds in sets):
        raise MalformedDocument("'targets' must be an array of state arrays")
    models = [load_model(s, mode, tolerance) for s in steps]
    return models, [[int(x) for x in ds] for ds in sets]
