import numpy as np
import pytest
from scipy import stats

from brwspectra import rng as krng


def test_mix64_is_deterministic_and_spreads_bits():
    x = np.arange(1000, dtype=np.uint64)
    a, b = krng.mix64(x), krng.mix64(x)
    assert np.array_equal(a, b)
    assert len(np.unique(a)) == 1000
    # neighbouring inputs flip about half the output bits
    flips = np.unpackbits((a[:-1] ^ a[1:]).view(np.uint8)).reshape(999, 64).sum(axis=1)
    assert 28 < flips.mean() < 36


def test_uniforms_are_in_open_unit_interval_and_uniform():
    keys = krng.mix64(np.arange(20000, dtype=np.uint64))
    u = krng.uniforms(keys, 0)
    assert u.min() > 0 and u.max() < 1
    assert stats.kstest(u, "uniform").pvalue > 1e-3
    assert not np.array_equal(u, krng.uniforms(keys, 1))


def test_normals_are_standard():
    keys = krng.mix64(np.arange(20000, dtype=np.uint64))
    z = krng.normals(keys, 0)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_child_keys_depend_only_on_parent_and_index():
    parents = np.array([11, 22, 33], dtype=np.uint64)
    all_keys = krng.child_keys(parents, np.array([2, 3, 1]))
    assert all_keys.size == 6
    # the children of the second parent do not depend on who else is in the batch
    alone = krng.child_keys(parents[1:2], np.array([3]))
    assert np.array_equal(all_keys[2:5], alone)
    assert len(np.unique(all_keys)) == 6


def test_child_index_is_one_based():
    assert krng.child_index(np.array([2, 3, 1])).tolist() == [1, 2, 1, 2, 3, 1]


def test_counter_rng_streams():
    r = krng.CounterRNG(7)
    assert r.trial(3).root_key == krng.CounterRNG(7).trial(3).root_key
    assert r.trial(3).root_key != r.trial(4).root_key
    assert krng.CounterRNG(8).trial(3).root_key != r.trial(3).root_key
    g1, g2 = r.generator(0), r.generator(0)
    assert g1.integers(0, 2**62) == g2.integers(0, 2**62)


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_must_be_u64(seed):
    with pytest.raises(ValueError):
        krng.CounterRNG(seed)
