"""Property-based checks of the invariants on random consistent models."""

from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from smpmoments import (
    BivariateModel,
    ReducedModel,
    embed_place_dependent,
    embed_time_dependent,
    exclude_state,
    hitting_moments,
    indicator_moments,
    load_model,
    merge_targets,
    mixed_moments,
    reassemble,
    scalarize,
    solve_moments,
    dump_model,
)
from smpmoments.generate import random_model

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(1, 5)
orders = st.integers(1, 3)


def _model(seed, m, d, **kw):
    return random_model(np.random.default_rng(seed), m, d, **kw)


@settings(max_examples=40, deadline=None)
@given(seeds, sizes, orders, st.data())
def test_exclusion_preserves_hitting_moments(seed, m, d, data):
    model = _model(seed, m, d)
    k = data.draw(st.integers(1, m))
    before = solve_moments(model, 0).values
    reduced = exclude_state(ReducedModel.from_model(model, 0), k).as_model()
    after = solve_moments(reduced, 0).values
    assert np.all(before == after)


@settings(max_examples=40, deadline=None)
@given(seeds, sizes, orders, st.data())
def test_exclusion_keeps_rows_stochastic(seed, m, d, data):
    model = _model(seed, m, d)
    k = data.draw(st.integers(1, m))
    rm = exclude_state(ReducedModel.from_model(model, 0), k)
    assert all(sum(rm.p[i]) == 1 for i in range(model.n))
    assert all(rm.moments[r, i, k] == 0 for r in range(d + 1) for i in range(model.n))


@settings(max_examples=30, deadline=None)
@given(seeds, sizes, orders, st.randoms(use_true_random=False))
def test_order_invariance_exact(seed, m, d, rnd):
    model = _model(seed, m, d)
    order = list(range(1, m + 1))
    rnd.shuffle(order)
    assert np.all(hitting_moments(model, 0, order=order).values == hitting_moments(model, 0).values)


@settings(max_examples=30, deadline=None)
@given(seeds, sizes, orders)
def test_reduction_equals_direct_with_signed_rewards(seed, m, d):
    model = _model(seed, m, d, negative=True)
    assert np.all(hitting_moments(model, 0).values == solve_moments(model, 0).values)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5), orders, st.data())
def test_indicator_marginal_equals_merged(seed, m, d, data):
    size = data.draw(st.integers(1, min(3, m)))
    targets = tuple(data.draw(st.permutations(range(m + 1)))[:size])
    model = _model(seed, m, d, target=targets)
    table = indicator_moments(model, targets)
    merged, s = merge_targets(model, targets)
    plain = hitting_moments(merged, s).values[:, : model.n]
    assert np.all(table.marginal() == plain)
    assert all(x == 1 for x in table.hitting_probabilities().sum(axis=1))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_mixed_reassembly_at_nodes(seed, m):
    rng = np.random.default_rng(seed)
    base = random_model(rng, m, 1)
    x1 = rng.integers(0, 4, size=(m + 1, m + 1))
    x2 = rng.integers(0, 4, size=(m + 1, m + 1))
    bi = BivariateModel.from_rewards(base.p, x1, x2, 3)
    mm = mixed_moments(bi, 0)
    for r in range(1, 4):
        for k in range(r + 1):
            a = Fraction(k, r)
            expect = hitting_moments(scalarize(bi, a, d=r), 0, d=r).values[r]
            assert np.all(reassemble(mm, r, a) == expect)


@settings(max_examples=20, deadline=None)
@given(seeds, sizes, orders, st.data())
def test_embeddings_are_valid_models(seed, m, d, data):
    model = _model(seed, m, d)
    emb = embed_place_dependent(model, [(i, 0) for i in range(model.n)])
    assert all(sum(emb.model.p[i]) == 1 for i in range(emb.model.n))
    h = data.draw(st.integers(1, 4))
    temb = embed_time_dependent([model] * h, [[0]] * (h - 1) + [range(model.n)])
    assert all(sum(temb.model.p[i]) == 1 for i in range(temb.model.n))
    assert np.all(temb.model.moments[0] == temb.model.p)


@settings(max_examples=20, deadline=None)
@given(seeds, sizes, orders)
def test_json_round_trip(seed, m, d):
    model = _model(seed, m, d)
    assert load_model(dump_model(model)) == model


@settings(max_examples=30, deadline=None)
@given(seeds, sizes, st.integers(2, 3))
def test_nonnegative_rewards_give_ordered_moments(seed, m, d):
    vals = hitting_moments(_model(seed, m, d), 0).values
    assert np.all(vals >= 0)
    assert np.all(vals[2] >= vals[1] ** 2)
