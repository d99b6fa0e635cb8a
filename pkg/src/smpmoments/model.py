"""Finite semi-Markov processes described by transition moments.

A model over the states ``0..m`` is stored as one tensor ``moments`` of shape
``(d + 1, m + 1, m + 1)`` where ``moments[r, i, j] = E_i[X_1^r; J_1 = j]``.
The order-zero slice is the embedded transition matrix ``p``.

Sojourn-time distributions are not part of the model. The optional
``distributions`` block of a document is carried along untouched for the
Monte Carlo simulator, which is the only consumer of full laws.
"""

from __future__ import annotations

import json
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from . import scalar
from .errors import (
    EmptyTarget,
    MalformedDocument,
    NegativeMoment,
    OrderOutOfRange,
    OrderZeroMismatch,
    RowSumViolation,
    UnreachableTarget,
)

NONNEGATIVE = "nonnegative"
REAL = "real"
REWARD_KINDS = (NONNEGATIVE, REAL)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SmpModel:
    """Immutable semi-Markov model given by its transition moment tensor.

    Parameters
    ----------
    moments : ndarray, shape (d+1, n, n)
        ``moments[0]`` is the embedded transition matrix, ``moments[r]`` the
        matrix of r-th transition moments.
    reward_kind : {"nonnegative", "real"}
        Real-valued rewards skip the nonnegativity checks on orders >= 1.
    mode : {"rational", "float"}
    tolerance : float
        Relative tolerance for float-mode validation.
    initial : ndarray, optional
        Initial distribution. Carried for completeness; no algorithm uses it.
    distributions : object, optional
        Raw ``distributions`` block for the simulator.
    """

    moments: np.ndarray
    reward_kind: str = NONNEGATIVE
    mode: str = scalar.RATIONAL
    tolerance: float = scalar.DEFAULT_TOLERANCE
    initial: np.ndarray | None = None
    distributions: object = field(default=None, repr=False)

    def __post_init__(self):
        scalar.check_mode(self.mode)
        if self.reward_kind not in REWARD_KINDS:
            raise MalformedDocument(f"reward_kind must be one of {REWARD_KINDS}")
        mom = np.asarray(self.moments)
        if mom.ndim != 3 or mom.shape[1] != mom.shape[2] or mom.shape[0] < 2:
            raise MalformedDocument(f"moment tensor must have shape (d+1, n, n) with d >= 1, got {mom.shape}")
        if mom.dtype != scalar.dtype_for(self.mode):
            mom = scalar.as_array(mom, self.mode)
        object.__setattr__(self, "moments", _freeze(mom))
        if self.initial is not None:
            init = np.asarray(self.initial)
            if init.dtype != scalar.dtype_for(self.mode):
                init = scalar.as_array(init, self.mode)
            object.__setattr__(self, "initial", _freeze(init))
        self._validate()

    @classmethod
    def from_matrices(cls, p, e, **kwargs) -> "SmpModel":
        """Build a model from ``p`` and the list ``e`` of order 1..d matrices."""
        mode = kwargs.get("mode", scalar.RATIONAL)
        p = scalar.as_array(p, mode)
        mats = [scalar.as_array(x, mode) for x in e]
        if not mats:
            raise MalformedDocument("at least one moment order (d >= 1) is required")
        for x in mats:
            if x.shape != p.shape:
                raise MalformedDocument(f"moment matrix of shape {x.shape} does not match p {p.shape}")
        return cls(np.stack([p] + mats), **kwargs)

    @property
    def p(self) -> np.ndarray:
        return self.moments[0]

    @property
    def n(self) -> int:
        return self.moments.shape[1]

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def d(self) -> int:
        return self.moments.shape[0] - 1

    @property
    def states(self) -> range:
        return range(self.n)

    def one(self):
        return Fraction(1) if self.mode == scalar.RATIONAL else 1.0

    def zero(self):
        return Fraction(0) if self.mode == scalar.RATIONAL else 0.0

    def _validate(self):
        p = self.p
        for i in self.states:
            for j in self.states:
                if p[i, j] < 0:
                    raise NegativeMoment(f"p[{i},{j}] = {p[i, j]} is negative")
            total = sum(p[i], self.zero())
            if self.mode == scalar.RATIONAL:
                ok = total == 1
            else:
                ok = abs(total - 1.0) <= self.tolerance
            if not ok:
                raise RowSumViolation(f"row {i} of p sums to {scalar.format_scalar(total)}, expected 1")
        if self.reward_kind == NONNEGATIVE:
            neg = np.argwhere(self.moments < 0)
            if len(neg):
                r, i, j = (int(x) for x in neg[0])
                raise NegativeMoment(
                    f"e^({r})[{i},{j}] = {scalar.format_scalar(self.moments[r, i, j])} is negative "
                    "in a nonnegative-reward model"
                )
        if self.initial is not None:
            if self.initial.shape != (self.n,):
                raise MalformedDocument(f"initial distribution must have length {self.n}")
            if any(x < 0 for x in self.initial):
                raise NegativeMoment("initial distribution has a negative entry")
            if not scalar.is_close(sum(self.initial, self.zero()), self.one(), self.tolerance):
                raise RowSumViolation("initial distribution does not sum to 1")

    def with_moments(self, moments: np.ndarray, **changes) -> "SmpModel":
        kwargs = dict(
            reward_kind=self.reward_kind,
            mode=self.mode,
            tolerance=self.tolerance,
            initial=None,
            distributions=None,
        )
        kwargs.update(changes)
        return SmpModel(moments, **kwargs)

    def truncated(self, d: int) -> "SmpModel":
        """The same model with moments only up to order ``d``."""
        if not 1 <= d <= self.d:
            raise OrderOutOfRange(f"order {d} outside 1..{self.d}")
        return self.with_moments(self.moments[: d + 1], initial=self.initial, distributions=self.distributions)

    def as_float(self) -> "SmpModel":
        if self.mode == scalar.FLOAT:
            return self
        return SmpModel(
            scalar.to_float(self.moments),
            reward_kind=self.reward_kind,
            mode=scalar.FLOAT,
            tolerance=self.tolerance,
            initial=None if self.initial is None else scalar.to_float(self.initial),
            distributions=self.distributions,
        )

    def __eq__(self, other):
        if not isinstance(other, SmpModel):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.reward_kind == other.reward_kind
            and self.moments.shape == other.moments.shape
            and bool(np.all(self.moments == other.moments))
            and _same_optional(self.initial, other.initial)
            and self.distributions == other.distributions
        )

    __hash__ = None


def _same_optional(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a.shape == b.shape and bool(np.all(a == b))


@dataclass(frozen=True)
class MomentTable:
    """Hitting-time moments ``E_i[W^r]`` for r = 0..d and a set of start states.

    ``values[r, s]`` belongs to start state ``starts[s]``; row 0 is all ones.
    """

    target: tuple
    starts: tuple
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, key):
        r, i = key
        return self.values[r, self.starts.index(i)]

    def column(self, i) -> np.ndarray:
        return self.values[:, self.starts.index(i)]

    def as_dict(self) -> dict:
        return {(r, i): self.values[r, s] for r in range(self.d + 1) for s, i in enumerate(self.starts)}


def _read_source(source) -> Mapping:
    if isinstance(source, Mapping):
        return source
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        if isinstance(source, str) and text.lstrip().startswith("{"):
            return json.loads(text, parse_float=Fraction)
        with open(source, encoding="utf-8") as fh:
            return json.load(fh, parse_float=Fraction)
    raise MalformedDocument(f"cannot read a model from {type(source).__name__}")


def read_document(source) -> dict:
    """Parse a JSON document, reading decimals exactly."""
    try:
        doc = _read_source(source)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise MalformedDocument("model document must be a JSON object")
    return dict(doc)


def _require_int(doc, key, minimum) -> int:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise MalformedDocument(f"field {key!r} must be an integer >= {minimum}")
    return value


def _matrix(raw, n, mode, what) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n or any(not isinstance(row, list) or len(row) != n for row in raw):
        raise MalformedDocument(f"{what} must be a {n}x{n} array")
    return scalar.as_array(raw, mode)


def load_model(source, mode: str = scalar.RATIONAL, tolerance: float = scalar.DEFAULT_TOLERANCE) -> SmpModel:
    """Load and validate a model document.

    ``source`` is a mapping, a path to a JSON file, or JSON text. The document
    holds ``m``, ``d``, ``reward_kind``, ``p``, ``e`` (d matrices, ``e[r-1]``
    for order r) and optionally ``initial`` and ``distributions``. If ``e``
    has ``d + 1`` entries the first is read as order zero and must equal ``p``.
    """
    scalar.check_mode(mode)
    doc = read_document(source)
    m = _require_int(doc, "m", 0)
    d = _require_int(doc, "d", 1)
    n = m + 1
    kind = doc.get("reward_kind", NONNEGATIVE)
    if kind == "real-valued":
        kind = REAL
    if kind not in REWARD_KINDS:
        raise MalformedDocument(f"reward_kind must be one of {REWARD_KINDS}")
    if "p" not in doc or "e" not in doc:
        raise MalformedDocument("document needs fields 'p' and 'e'")
    p = _matrix(doc["p"], n, mode, "p")
    raw_e = doc["e"]
    if not isinstance(raw_e, list) or len(raw_e) not in (d, d + 1):
        raise MalformedDocument(f"'e' must hold {d} moment matrices")
    mats = [_matrix(x, n, mode, f"e[{k}]") for k, x in enumerate(raw_e)]
    if len(mats) == d + 1:
        zero_order = mats.pop(0)
        if not _matrices_match(zero_order, p, mode, tolerance):
            raise OrderZeroMismatch("order-zero moments differ from the transition matrix p")
    initial = doc.get("initial")
    if initial is not None:
        if not isinstance(initial, list) or len(initial) != n:
            raise MalformedDocument(f"'initial' must be an array of length {n}")
        initial = scalar.as_array(initial, mode)
    return SmpModel(
        np.stack([p] + mats),
        reward_kind=kind,
        mode=mode,
        tolerance=tolerance,
        initial=initial,
        distributions=_jsonable_tree(doc.get("distributions")),
    )


def _matrices_match(a, b, mode, tol) -> bool:
    if mode == scalar.RATIONAL:
        return bool(np.all(a == b))
    return bool(np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=tol, atol=tol))


def _jsonable_tree(obj):
    if isinstance(obj, dict):
        return {k: _jsonable_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_tree(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    return obj


def to_document(model: SmpModel) -> dict:
    """Serialize a model to a JSON-ready document; inverse of :func:`load_model`."""

    def mat(a):
        return [[scalar.jsonable(x) for x in row] for row in a]

    doc = {
        "m": model.m,
        "d": model.d,
        "reward_kind": model.reward_kind,
        "p": mat(model.p),
        "e": [mat(model.moments[r]) for r in range(1, model.d + 1)],
    }
    if model.initial is not None:
        doc["initial"] = [scalar.jsonable(x) for x in model.initial]
    if model.distributions is not None:
        doc["distributions"] = _jsonable_tree(model.distributions)
    return doc


def dump_model(model: SmpModel) -> str:
    return json.dumps(to_document(model), indent=2)


def _as_target(model: SmpModel, target) -> frozenset:
    if isinstance(target, (int, np.integer)):
        target = (int(target),)
    states = frozenset(int(t) for t in target)
    if not states:
        raise EmptyTarget("target set is empty")
    bad = [t for t in states if not 0 <= t < model.n]
    if bad:
        raise MalformedDocument(f"target states {sorted(bad)} outside 0..{model.m}")
    return states


def support_graph(p: np.ndarray) -> list:
    n = p.shape[0]
    return [[j for j in range(n) if p[i, j] > 0] for i in range(n)]


def unreachable_states(p: np.ndarray, target: Iterable[int]) -> list:
    """States from which the target cannot be hit in one or more steps."""
    target = set(target)
    n = p.shape[0]
    succ = support_graph(p)
    pred = [[] for _ in range(n)]
    for i in range(n):
        for j in succ[i]:
            pred[j].append(i)
    # states that reach the target in >= 1 steps
    good = set()
    queue = deque()
    for t in target:
        for i in pred[t]:
            if i not in good:
                good.add(i)
                queue.append(i)
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i not in good:
                good.add(i)
                queue.append(i)
    return [i for i in range(n) if i not in good]


def check_reachability(model: SmpModel, target) -> bool:
    """True iff every state hits ``target`` with probability one.

    For a finite chain this is graph reachability of the target, in at least
    one step, from every state along edges with positive probability.
    """
    return not unreachable_states(model.p, _as_target(model, target))


def require_reachable(model: SmpModel, target, error=UnreachableTarget) -> frozenset:
    states = _as_target(model, target)
    bad = unreachable_states(model.p, states)
    if bad:
        raise error(f"target {sorted(states)} is not hit almost surely from states {bad}")
    return states


def sojourn_moment(model: SmpModel, r: int, i: int, j: int):
    """Return ``e^(r)_{ij}``; order zero gives ``p_{ij}``."""
    if not 0 <= r <= model.d:
        raise OrderOutOfRange(f"order {r} outside 0..{model.d}")
    return model.moments[r, i, j]
