import math

import numpy as np
import pytest

from klcluster.entropy import EntropyProfile
from klcluster.errors import DegenerateError, DomainError
from klcluster.weights import (
    DiversityIndex,
    WeightVector,
    kl_index,
    kl_weights,
    shannon_index,
    shannon_weights,
    uniform_weights,
)


def kl(values):
    return [DiversityIndex("kl", v, asset_id=f"a{i}") for i, v in enumerate(values)]


def sh(values):
    return [DiversityIndex("shannon", v, asset_id=f"a{i}") for i, v in enumerate(values)]


def test_kl_index_sums_components():
    assert kl_index(EntropyProfile("kl", {(2, 1): 0.0, (2, 5): 0.0})).value == 0.0
    ix = kl_index(EntropyProfile("kl", {(2, 1): 0.3, (2, 5): 0.1}), asset_id="X", horizon_months=4)
    assert ix.value == pytest.approx(0.4)
    assert ix.short_scale == pytest.approx(0.3) and ix.long_scale == pytest.approx(0.1)
    assert ix.asset_id == "X" and ix.horizon_months == 4


def test_split_is_a_partition():
    rng = np.random.default_rng(1)
    comps = {(n, t): float(rng.normal()) for n in (50, 100) for t in range(1, 300)}
    comps[(50, 1)] += 40.0  # keep the total positive
    prof = EntropyProfile("kl", comps)
    ix = kl_index(prof)
    # the boundary cell tau = n belongs to the long side only
    short = math.fsum(v for (n, t), v in comps.items() if t < n)
    long_ = math.fsum(v for (n, t), v in comps.items() if t >= n)
    assert ix.short_scale == short and ix.long_scale == long_
    assert ix.value == prof.aggregate
    other = kl_index(prof, tau_split={50: 10, 100: 200})
    assert other.value == ix.value


def test_index_kind_must_match():
    with pytest.raises(DomainError):
        kl_index(EntropyProfile("shannon", {(2, 1): 0.1}))
    with pytest.raises(DomainError):
        DiversityIndex("kl", -0.1)


def test_tiny_negative_kl_total_is_zero():
    assert kl_index(EntropyProfile("kl", {(2, 1): -1e-12})).value == 0.0
    with pytest.raises(DomainError):
        kl_index(EntropyProfile("kl", {(2, 1): -1e-3}))


def test_kl_weights_examples():
    w = kl_weights(kl([0.7] * 5))
    assert all(v == pytest.approx(0.2, abs=1e-15) for v in w.weights.values())
    w = kl_weights(kl([1.0, 2.0]))
    assert w["a0"] == pytest.approx(2 / 3) and w["a1"] == pytest.approx(1 / 3)


def test_kl_weights_zero_index():
    with pytest.raises(DegenerateError):
        kl_weights(kl([0.0, 1.0]))
    w = kl_weights(kl([0.0, 1.0]), floor=1e-12)
    assert w["a0"] > 0.999999


def test_kl_weights_monotone():
    base = kl_weights(kl([0.3, 0.5, 0.9]))
    up = kl_weights(kl([0.3, 0.6, 0.9]))
    assert up["a1"] < base["a1"]


def test_shannon_weights_examples():
    w = shannon_weights(sh([2.0, 2.0, 2.0]))
    assert all(v == pytest.approx(1 / 3) for v in w.weights.values())
    w = shannon_weights(sh([1.0, 3.0]))
    assert (w["a0"], w["a1"]) == (0.25, 0.75)
    w = shannon_weights(sh([0.0, 1.0]))
    assert (w["a0"], w["a1"]) == (0.0, 1.0)
    with pytest.raises(DegenerateError):
        shannon_weights(sh([0.0, 0.0]))


def test_weights_need_two_assets_and_unique_labels():
    with pytest.raises(DomainError):
        kl_weights(kl([1.0]))
    with pytest.raises(DomainError):
        shannon_weights([DiversityIndex("shannon", 1.0, "x"), DiversityIndex("shannon", 2.0, "x")])


def test_uniform_weights():
    assert all(v == 0.2 for v in uniform_weights(5).weights.values())
    assert uniform_weights(1).weights == {"asset0": 1.0}
    assert uniform_weights(["x", "y", "z"])["y"] == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        uniform_weights(0)


def test_weight_vector_validation():
    with pytest.raises(DomainError):
        WeightVector({"a": 0.5, "b": 0.4}, "kl")
    with pytest.raises(DomainError):
        WeightVector({"a": 1.1, "b": -0.1}, "kl")
    with pytest.raises(DomainError):
        WeightVector({"a": 1.0}, "magic")
    w = WeightVector({"a": 0.50004, "b": 0.5}, "published", atol=1e-3)
    assert w.as_array(["b", "a"]).tolist() == [0.5, 0.50004]
    with pytest.raises(DomainError):
        w.as_array(["c"])
