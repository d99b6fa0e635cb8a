from fractions import Fraction

import numpy as np
import pytest

from smpmoments import (
    DistributionSpec,
    Exponential,
    MalformedDocument,
    Mixture,
    Point,
    SmpModel,
    TruncationExceeded,
    indicator_moments,
    load_model,
    place_dependent_moments,
    simulate_hitting,
    simulate_place_dependent,
    simulate_time_dependent,
    time_dependent_moments,
    to_document,
    verify_consistency,
)
from smpmoments.generate import random_model, random_spec
from smpmoments.mc import parse_law, z_score

F = Fraction


def _alternating():
    p = np.array([[0, 1], [1, 0]], dtype=object) * F(1)
    return DistributionSpec(p, {(0, 1): Point(F(1)), (1, 0): Point(F(1))})


def test_law_moments():
    assert Point(F(2)).moment(2) == 4
    assert Exponential(F(1, 4)).moment(2) == 32
    mix = Mixture(((Point(F(1)), F(1, 2)), (Exponential(F(1)), F(1, 2))))
    assert mix.moment(2) == F(1, 2) + 1


def test_point_mass_alternating_is_deterministic():
    res = simulate_hitting(_alternating(), 1, 0, 1000, seed=5, d=2)
    assert np.all(res.moments == [1, 1, 1])
    assert np.all(res.moments_se == 0)
    assert res.mean_steps == 1 and res.n_truncated == 0


def test_same_seed_same_result(example_model):
    spec = DistributionSpec.from_model(example_model)
    a = simulate_hitting(spec, 1, 0, 5000, seed=11, d=2, block_size=1000)
    b = simulate_hitting(spec, 1, 0, 5000, seed=11, d=2, block_size=1000)
    c = simulate_hitting(spec, 1, 0, 5000, seed=12, d=2, block_size=1000)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_example_is_consistent(example_model):
    spec = DistributionSpec.from_model(example_model)
    assert verify_consistency(spec, example_model).ok
    assert spec.laws[(1, 2)] == Exponential(F(1, 4))
    # point mass at 2 with weight 1/2 gives e1 = 1, e2 = 2
    assert spec.moments(2)[1, 3, 2] == 1 and spec.moments(2)[2, 3, 2] == 2


def test_perturbed_rate_flagged(example_model):
    doc = to_document(example_model)
    doc["distributions"][2][1] = {"kind": "exp", "rate": "1/2"}
    model = load_model(doc)
    report = verify_consistency(DistributionSpec.from_model(model), model)
    assert not report.ok
    assert {(x.i, x.j) for x in report.mismatches} == {(2, 1)}


@pytest.mark.parametrize(
    "raw",
    [
        {"kind": "point", "at": 0},
        {"kind": "point", "at": -1},
        {"kind": "exp", "rate": 0},
        {"kind": "gamma"},
        {"kind": "mix", "parts": []},
        {"kind": "mix", "parts": [{"law": {"kind": "point", "at": 1}, "weight": "1/2"}]},
        "point",
    ],
)
def test_bad_laws(raw):
    with pytest.raises(MalformedDocument):
        parse_law(raw)


def test_negative_point_allowed_for_real_rewards():
    assert parse_law({"kind": "point", "at": -2}, allow_negative=True).at == -2


def test_spec_structure_errors(example_model):
    doc = to_document(example_model)
    doc["distributions"][0][0] = {"kind": "point", "at": 1}
    with pytest.raises(MalformedDocument):
        DistributionSpec.from_model(load_model(doc))
    doc = to_document(example_model)
    doc["distributions"][0][3] = None
    with pytest.raises(MalformedDocument):
        DistributionSpec.from_model(load_model(doc))
    doc.pop("distributions")
    with pytest.raises(MalformedDocument):
        DistributionSpec.from_model(load_model(doc))


def test_all_truncated_raises(example_model):
    spec = DistributionSpec.from_model(example_model)
    with pytest.raises(TruncationExceeded):
        simulate_hitting(spec, 3, 0, 100, seed=1, d=1, max_steps=1)


def test_partial_truncation_reported(example_model):
    spec = DistributionSpec.from_model(example_model)
    res = simulate_hitting(spec, 1, 0, 2000, seed=1, d=1, max_steps=5)
    assert 0 < res.n_truncated < 2000
    assert res.n_paths + res.n_truncated == 2000


def test_two_paths_gives_large_se(example_model):
    res = simulate_hitting(DistributionSpec.from_model(example_model), 1, 0, 2, seed=3, d=2)
    assert res.n_paths == 2 and res.moments_se[1] > 0


def test_z_score():
    assert z_score(1.0, 0.0, 1.0) == 0.0
    assert z_score(2.0, 0.0, 1.0) == float("inf")
    assert z_score(3.0, 0.5, 2.0) == 2.0


def test_random_indicator_against_simulation():
    rng = np.random.default_rng(7)
    spec = random_spec(rng, 4, target=(0, 2))
    model = spec.to_model(2)
    table = indicator_moments(model, [0, 2])
    for start in range(5):
        res = simulate_hitting(spec, start, [0, 2], 40000, seed=start, d=2)
        assert abs(float(table.hitting_probabilities()[start].sum()) - 1) == 0
        for r in range(3):
            for c in range(2):
                assert abs(z_score(res.indicator[r, c], res.indicator_se[r, c], table.values[r, start, c])) < 3


def test_place_dependent_against_simulation(example_model):
    spec = DistributionSpec.from_model(example_model)
    pairs = [(2, 1), (3, 3)]
    vals = place_dependent_moments(example_model, pairs)
    for start in range(4):
        res = simulate_place_dependent(spec, start, pairs, 40000, seed=start, d=2)
        for r in (1, 2):
            assert abs(z_score(res.moments[r], res.moments_se[r], vals[r, start])) < 3


def test_time_dependent_against_simulation(example_model):
    spec = DistributionSpec.from_model(example_model)
    h = 6
    sets = [[0]] * (h - 1) + [range(4)]
    vals = time_dependent_moments([example_model] * h, sets)
    for start in range(4):
        res = simulate_time_dependent([spec] * h, start, sets, 40000, seed=start, d=2)
        for r in (1, 2):
            assert abs(z_score(res.moments[r], res.moments_se[r], vals[r, start])) < 3


def test_random_model_is_consistent():
    rng = np.random.default_rng(3)
    for _ in range(5):
        model = random_model(rng, 5, 3)
        assert verify_consistency(DistributionSpec.from_model(model), model).ok
        assert model.distributions is not None
