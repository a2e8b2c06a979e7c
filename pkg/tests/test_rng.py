"""Pins the random stream: reference vectors, bulk/scalar agreement,
derivation stability.  These vectors define the reproducibility contract;
a failure here means every seeded result in the package has changed."""

import numpy as np
import pytest

from treecv.rng import SplitMix64Stream, derive_seed

# Reference SplitMix64 output sequence for seed 0.
SEED0_VECTORS = [
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
    0x53CB9F0C747EA2EA,
    0x2C829ABE1F4532E1,
    0xC584133AC916AB3C,
]

# Frozen outputs of this package's derivation scheme (regression pins).
DERIVED_VECTORS = {
    (0, 0): 0xE220A8397B1DCDAF,
    (42, 1, 2): 0x89665BE40A2033E9,
    (42, 2, 1): 0x8C5264AF796B5460,
}


def test_seed0_reference_sequence():
    stream = SplitMix64Stream(0)
    assert [stream.next_u64() for _ in range(len(SEED0_VECTORS))] == SEED0_VECTORS


def test_bulk_draw_matches_scalar_draw():
    for seed in (0, 1, 0xDEADBEEF, 2**64 - 1):
        scalar = SplitMix64Stream(seed)
        bulk = SplitMix64Stream(seed)
        expected = [scalar.next_u64() for _ in range(100)]
        got = bulk.next_u64_array(100)
        assert expected == [int(v) for v in got]
        # streams stay aligned afterwards
        assert scalar.next_u64() == bulk.next_u64()


def test_derive_seed_is_stable_and_tag_sensitive():
    for tags, value in DERIVED_VECTORS.items():
        assert derive_seed(*tags) == value
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert derive_seed(7, 1, 2) != derive_seed(8, 1, 2)


def test_state_snapshot_replays():
    stream = SplitMix64Stream(99)
    stream.next_u64_array(17)
    mark = stream.state
    ahead = [stream.next_u64() for _ in range(5)]
    stream.set_state(mark)
    assert [stream.next_u64() for _ in range(5)] == ahead


def test_uniform_range_and_precision():
    u = SplitMix64Stream(3).uniform_array(20000)
    assert (u >= 0.0).all() and (u < 1.0).all()
    assert abs(u.mean() - 0.5) < 0.01


def test_normal_moments():
    z = SplitMix64Stream(4).normal_array(100001)
    assert abs(z.mean()) < 0.02
    assert abs(z.std() - 1.0) < 0.02


def test_randbelow_bounds_and_coverage():
    stream = SplitMix64Stream(5)
    draws = [stream.randbelow(7) for _ in range(2000)]
    assert set(draws) == set(range(7))
    with pytest.raises(ValueError):
        stream.randbelow(0)


def test_shuffle_is_seeded_permutation():
    a = SplitMix64Stream(11).permutation(50)
    b = SplitMix64Stream(11).permutation(50)
    c = SplitMix64Stream(12).permutation(50)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert sorted(a.tolist()) == list(range(50))


def test_single_element_shuffle_is_identity():
    values = [42]
    SplitMix64Stream(0).shuffle(values)
    assert values == [42]
