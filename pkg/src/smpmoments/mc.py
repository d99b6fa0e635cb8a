"""Monte Carlo simulation of semi-Markov trajectories.

Sojourn laws are point masses, exponentials and finite mixtures of those.
Paths are simulated in blocks; block ``b`` draws from its own generator
seeded by ``SeedSequence(seed, spawn_key=(b,))``, so a result depends only on
``(seed, n_paths, block_size)`` and not on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import scalar
from .errors import MalformedDocument, TruncationExceeded
from .model import SmpModel, _as_target

DEFAULT_MAX_STEPS = 10**6
DEFAULT_BLOCK = 1 << 16


# ---------------------------------------------------------------- laws


@dataclass(frozen=True)
class Point:
    at: object

    def moment(self, r: int):
        return self.at**r

    def sample(self, rng, size):
        return np.full(size, float(self.at))

    def to_json(self):
        return {"kind": "point", "at": scalar.jsonable(self.at)}


@dataclass(frozen=True)
class Exponential:
    rate: object

    def moment(self, r: int):
        return math.factorial(r) / self.rate**r

    def sample(self, rng, size):
        return rng.exponential(1.0 / float(self.rate), size)

    def to_json(self):
        return {"kind": "exp", "rate": scalar.jsonable(self.rate)}


@dataclass(frozen=True)
class Mixture:
    parts: tuple  # of (law, weight)

    def moment(self, r: int):
        return sum(w * law.moment(r) for law, w in self.parts)

    def sample(self, rng, size):
        weights = np.array([float(w) for _, w in self.parts])
        which = rng.choice(len(self.parts), size=size, p=weights / weights.sum())
        out = np.empty(size)
        for c, (law, _) in enumerate(self.parts):
            sel = np.flatnonzero(which == c)
            if len(sel):
                out[sel] = law.sample(rng, len(sel))
        return out

    def to_json(self):
        return {"kind": "mix", "parts": [{"law": law.to_json(), "weight": scalar.jsonable(w)} for law, w in self.parts]}


def parse_law(raw, mode: str = scalar.RATIONAL, allow_negative: bool = False):
    """Read ``{"kind": "point"|"exp"|"mix", ...}``; laws may not charge zero."""
    if not isinstance(raw, dict) or "kind" not in raw:
        raise MalformedDocument(f"a law must be an object with a 'kind', got {raw!r}")
    kind = raw["kind"]
    if kind == "point":
        at = scalar.parse_scalar(raw.get("at"), mode)
        if at == 0 or (at < 0 and not allow_negative):
            raise MalformedDocument(f"point mass at {at} puts mass on a non-positive value (instant transition)")
        return Point(at)
    if kind == "exp":
        rate = scalar.parse_scalar(raw.get("rate"), mode)
        if rate <= 0:
            raise MalformedDocument(f"exponential rate must be positive, got {rate}")
        return Exponential(rate)
    if kind == "mix":
        parts = raw.get("parts")
        if not isinstance(parts, list) or not parts:
            raise MalformedDocument("a mixture needs a nonempty 'parts' list")
        out = []
        for part in parts:
            if not isinstance(part, dict) or "weight" not in part:
                raise MalformedDocument("mixture parts need 'law' and 'weight'")
            w = scalar.parse_scalar(part["weight"], mode)
            if w <= 0:
                raise MalformedDocument(f"mixture weight must be positive, got {w}")
            law = part.get("law", {k: v for k, v in part.items() if k != "weight"})
            out.append((parse_law(law, mode, allow_negative), w))
        total = sum(w for _, w in out)
        if not scalar.is_close(total, 1):
            raise MalformedDocument(f"mixture weights sum to {total}, expected 1")
        return Mixture(tuple(out))
    raise MalformedDocument(f"unknown law kind {kind!r}")


# ---------------------------------------------------------------- sojourn laws per transition


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """Embedded transition matrix plus a conditional sojourn law per transition."""

    p: np.ndarray
    laws: dict
    mode: str = scalar.RATIONAL
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.p.shape[0]
        for i in range(n):
            for j in range(n):
                if self.p[i, j] > 0 and (i, j) not in self.laws:
                    raise MalformedDocument(f"transition {i}->{j} has positive probability but no law")
        cum = np.cumsum(np.asarray(self.p, dtype=float), axis=1)
        cum[:, -1] = 1.0
        object.__setattr__(self, "_cum", cum)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @classmethod
    def from_model(cls, model: SmpModel) -> "DistributionSpec":
        block = model.distributions
        if block is None:
            raise MalformedDocument("the model has no 'distributions' block; simulation needs sojourn laws")
        n = model.n
        if not isinstance(block, list) or len(block) != n or any(not isinstance(r, list) or len(r) != n for r in block):
            raise MalformedDocument(f"'distributions' must be a {n}x{n} array of laws or nulls")
        laws = {}
        for i in range(n):
            for j in range(n):
                raw = block[i][j]
                if raw is None:
                    continue
                if model.p[i, j] == 0:
                    raise MalformedDocument(f"law given for transition {i}->{j} of probability zero")
                laws[(i, j)] = parse_law(raw, model.mode, allow_negative=model.reward_kind == "real")
        return cls(np.array(model.p, copy=True), laws, model.mode)

    def moments(self, d: int) -> np.ndarray:
        """Transition moment tensor ``p_ij * E[law_ij^r]`` for r = 0..d."""
        n = self.n
        mom = scalar.zeros((d + 1, n, n), self.mode)
        for (i, j), law in self.laws.items():
            for r in range(d + 1):
                mom[r, i, j] = scalar.convert(self.p[i, j] * law.moment(r), self.mode)
        return mom

    def to_model(self, d: int, reward_kind: str = "nonnegative", tolerance: float = scalar.DEFAULT_TOLERANCE) -> SmpModel:
        return SmpModel(
            self.moments(d),
            reward_kind=reward_kind,
            mode=self.mode,
            tolerance=tolerance,
            distributions=self.to_json(),
        )

    def to_json(self) -> list:
        return [[self.laws[(i, j)].to_json() if (i, j) in self.laws else None for j in range(self.n)] for i in range(self.n)]

    def next_states(self, rng, current: np.ndarray) -> np.ndarray:
        u = rng.random(len(current))
        return (u[:, None] >= self._cum[current]).sum(axis=1)

    def sojourns(self, rng, current: np.ndarray, nxt: np.ndarray) -> np.ndarray:
        key = current * self.n + nxt
        order = np.argsort(key, kind="stable")
        uniq, first = np.unique(key[order], return_index=True)
        bounds = list(first) + [len(order)]
        out = np.empty(len(current))
        for g, k in enumerate(uniq):
            idx = order[bounds[g] : bounds[g + 1]]
            out[idx] = self.laws[divmod(int(k), self.n)].sample(rng, len(idx))
        return out


@dataclass(frozen=True)
class Mismatch:
    r: int
    i: int
    j: int
    model_value: object
    law_value: object


@dataclass(frozen=True)
class ConsistencyReport:
    mismatches: tuple

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_consistency(spec: DistributionSpec, model: SmpModel) -> ConsistencyReport:
    """Compare analytic moments of the laws with the model's moment tensor."""
    law_moments = spec.moments(model.d)
    bad = []
    for r in range(model.d + 1):
        for i in model.states:
            for j in model.states:
                got = model.moments[r, i, j]
                want = law_moments[r, i, j] if i < spec.n and j < spec.n else 0
                if not scalar.is_close(got, want, model.tolerance):
                    bad.append(Mismatch(r, i, j, got, want))
    return ConsistencyReport(tuple(bad))


# ---------------------------------------------------------------- simulation


@dataclass(frozen=True)
class SimulationResult:
    """Empirical hitting statistics over ``n_paths`` completed paths.

    ``moments[r]`` estimates ``E[W^r]``; ``indicator[r, c]`` estimates
    ``E[W^r; entrance = targets[c]]`` so ``indicator[0]`` holds the
    hitting-state frequencies. ``*_se`` are standard errors of the means.
    """

    start: int
    targets: tuple
    n_paths: int
    n_truncated: int
    moments: np.ndarray
    moments_se: np.ndarray
    indicator: np.ndarray
    indicator_se: np.ndarray
    mean_steps: float
    steps_se: float

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "targets": list(self.targets),
            "n_paths": self.n_paths,
            "n_truncated": self.n_truncated,
            "moments": [float(x) for x in self.moments],
            "moments_se": [float(x) for x in self.moments_se],
            "indicator": [[float(x) for x in row] for row in self.indicator],
            "indicator_se": [[float(x) for x in row] for row in self.indicator_se],
            "mean_steps": float(self.mean_steps),
            "steps_se": float(self.steps_se),
        }


def z_score(estimate, se, exact) -> float:
    diff = float(estimate) - float(exact)
    if se == 0:
        return 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(float(exact))) else math.inf
    return diff / float(se)


def _summarize(samples: np.ndarray):
    n = len(samples)
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return mean, se


def _run(spec_for_step, stop, start, prev0, n_paths, seed, max_steps, block_size):
    """Simulate ``n_paths`` paths; return (W, steps, entrance state, truncated count).

    ``spec_for_step(n)`` gives the law table for jump n (n >= 1) and
    ``stop(prev, nxt, n)`` flags which paths stop at jump n.
    """
    ws, ss, hs = [], [], []
    truncated = 0
    n_blocks = -(-n_paths // block_size)
    for b in range(n_blocks):
        size = min(block_size, n_paths - b * block_size)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        cur = np.full(size, start, dtype=np.int64)
        prev = np.full(size, prev0, dtype=np.int64)
        w = np.zeros(size)
        alive = np.arange(size)
        out_w = np.empty(size)
        out_s = np.empty(size, dtype=np.int64)
        out_h = np.empty(size, dtype=np.int64)
        done = np.zeros(size, dtype=bool)
        step = 0
        while len(alive) and step < max_steps:
            step += 1
            spec = spec_for_step(step)
            nxt = spec.next_states(rng, cur)
            w = w + spec.sojourns(rng, cur, nxt)
            hit = stop(cur, nxt, step)
            if hit.any():
                idx = alive[hit]
                out_w[idx] = w[hit]
                out_s[idx] = step
                out_h[idx] = nxt[hit]
                done[idx] = True
                keep = ~hit
                alive, w, nxt, cur = alive[keep], w[keep], nxt[keep], cur[keep]
            prev, cur = cur, nxt
        truncated += len(alive)
        ws.append(out_w[done])
        ss.append(out_s[done])
        hs.append(out_h[done])
    return np.concatenate(ws), np.concatenate(ss), np.concatenate(hs), truncated


def _result(start, targets, d, w, steps, hits, truncated):
    if len(w) == 0:
        raise TruncationExceeded(f"all paths were truncated ({truncated} paths)")
    moments = np.empty(d + 1)
    moments_se = np.empty(d + 1)
    indicator = np.empty((d + 1, len(targets)))
    indicator_se = np.empty((d + 1, len(targets)))
    for r in range(d + 1):
        wr = w**r
        moments[r], moments_se[r] = _summarize(wr)
        for c, j in enumerate(targets):
            indicator[r, c], indicator_se[r, c] = _summarize(wr * (hits == j))
    mean_steps, steps_se = _summarize(steps.astype(float))
    return SimulationResult(
        start=start,
        targets=tuple(targets),
        n_paths=len(w),
        n_truncated=truncated,
        moments=moments,
        moments_se=moments_se,
        indicator=indicator,
        indicator_se=indicator_se,
        mean_steps=mean_steps,
        steps_se=steps_se,
    )


def simulate_hitting(
    spec: DistributionSpec,
    start: int,
    target,
    n_paths: int,
    seed: int,
    d: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    block_size: int = DEFAULT_BLOCK,
) -> SimulationResult:
    """Estimate moments of the reward accumulated until the chain enters ``target``.

    The walk stops at the first jump n >= 1 landing in the target set. Paths
    that reach ``max_steps`` are dropped and counted in ``n_truncated``.
    """
    if n_paths < 2:
        raise ValueError("at least two paths are needed for standard errors")
    targets = sorted(_as_target_n(spec.n, target))
    mask = np.zeros(spec.n, dtype=bool)
    mask[targets] = True
    w, steps, hits, trunc = _run(
        lambda n: spec, lambda prev, nxt, n: mask[nxt], int(start), int(start), n_paths, seed, max_steps, block_size
    )
    return _result(int(start), targets, d, w, steps, hits, trunc)


def simulate_place_dependent(
    spec: DistributionSpec,
    start: int,
    pairs,
    n_paths: int,
    seed: int,
    d: int,
    initial_prev: int | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    block_size: int = DEFAULT_BLOCK,
) -> SimulationResult:
    """Stop at the first jump whose (from, to) pair lies in ``pairs``."""
    n = spec.n
    allowed = np.zeros((n, n), dtype=bool)
    for i, j in pairs:
        allowed[int(i), int(j)] = True
    prev0 = int(start) if initial_prev is None else int(initial_prev)
    w, steps, hits, trunc = _run(
        lambda k: spec, lambda prev, nxt, k: allowed[prev, nxt], int(start), prev0, n_paths, seed, max_steps, block_size
    )
    return _result(int(start), sorted({int(j) for _, j in pairs}), d, w, steps, hits, trunc)


def simulate_time_dependent(
    specs,
    start: int,
    target_sets,
    n_paths: int,
    seed: int,
    d: int,
    block_size: int = DEFAULT_BLOCK,
) -> SimulationResult:
    """Jump n uses ``specs[n-1]`` and stops if it lands in ``target_sets[n-1]``."""
    h = len(specs)
    n = specs[0].n
    masks = []
    for ds in target_sets:
        mask = np.zeros(n, dtype=bool)
        mask[sorted(int(x) for x in ds)] = True
        masks.append(mask)
    w, steps, hits, trunc = _run(
        lambda k: specs[k - 1], lambda prev, nxt, k: masks[k - 1][nxt], int(start), int(start), n_paths, seed, h, block_size
    )
    return _result(int(start), list(range(n)), d, w, steps, hits, trunc)


def _as_target_n(n, target):
    if isinstance(target, (int, np.integer)):
        target = (int(target),)
    states = frozenset(int(t) for t in target)
    if not states or any(not 0 <= t < n for t in states):
        raise MalformedDocument(f"target {sorted(states)} must be a nonempty subset of 0..{n - 1}")
    return states

