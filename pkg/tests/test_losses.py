import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from graphsim.autodiff import Tensor, finite_diff_gradcheck
from graphsim.losses import (LossConfig, batch_pair_loss, batch_triplet_loss,
                             euclidean_sq_distance, hamming_pair_loss, hamming_similarity_approx,
                             hamming_triplet_loss, pair_margin_loss, similarity,
                             triplet_margin_loss)

unit = st.floats(-1, 1, allow_nan=False)
vec = arrays(np.float64, 6, elements=st.floats(-20, 20, allow_nan=False))
# squared differences below ~1e-162 underflow to zero, so exact-zero checks use a grid
grid = st.integers(-20 * 2**20, 20 * 2**20).map(lambda k: k / 2**20)


def val(t):
    return float(np.asarray(t.value))


def test_loss_config_invariants():
    for kw in (dict(margin=0.0), dict(margin=-1.0), dict(family="cosine"), dict(mode="quad")):
        with pytest.raises(ValueError):
            LossConfig(**kw)


def test_euclidean_examples():
    assert val(euclidean_sq_distance([1.0, 2.0], [1.0, 2.0])) == 0.0
    assert val(euclidean_sq_distance([1.0, 0.0], [0.0, 1.0])) == 2.0
    with pytest.raises(ValueError):
        euclidean_sq_distance([1.0], [1.0, 2.0])


@given(arrays(np.float64, 6, elements=grid), arrays(np.float64, 6, elements=grid))
def test_euclidean_properties(u, v):
    d = val(euclidean_sq_distance(u, v))
    assert d >= 0 and d == val(euclidean_sq_distance(v, u))
    assert (d == 0) == np.array_equal(u, v)


def test_hamming_similarity_examples():
    u = np.array([10.0, -12.0, 15.0])
    assert abs(val(hamming_similarity_approx(u, u)) - 1) < 1e-6
    assert abs(val(hamming_similarity_approx(u, -u)) + 1) < 1e-6
    assert val(hamming_similarity_approx(np.zeros(3), np.array([3.0, -1.0, 2.0]))) == 0.0
    with pytest.raises(ValueError):
        hamming_similarity_approx([1.0], [1.0, 2.0])


@given(vec, vec)
def test_hamming_similarity_bounded_symmetric(u, v):
    s = val(hamming_similarity_approx(u, v))
    assert -1 <= s <= 1 and s == val(hamming_similarity_approx(v, u))


@pytest.mark.parametrize("d,t,expect", [(0.0, 1, 0.0), (0.0, -1, 2.0), (2.0, 1, 2.0)])
def test_pair_margin_examples(d, t, expect):
    assert val(pair_margin_loss(d, t, 1.0)) == expect


@pytest.mark.parametrize("dp,dn,expect", [(0.0, 2.0, 0.0), (1.5, 1.5, 1.0)])
def test_triplet_margin_examples(dp, dn, expect):
    assert val(triplet_margin_loss(dp, dn, 1.0)) == expect


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0.01, 3))
def test_triplet_margin_zero_iff_satisfied(dp, dn, g):
    loss = val(triplet_margin_loss(dp, dn, g))
    assert loss >= 0
    assert (loss == 0) == (dn >= dp + g)


@given(st.floats(0, 10), st.sampled_from([-1, 1]), st.floats(0.01, 3))
def test_pair_margin_non_negative(d, t, g):
    assert val(pair_margin_loss(d, t, g)) >= 0


@pytest.mark.parametrize("s,t,expect", [(1.0, 1, 0.0), (1.0, -1, 1.0), (0.0, 1, 0.25)])
def test_hamming_pair_examples(s, t, expect):
    assert val(hamming_pair_loss(s, t)) == expect


@pytest.mark.parametrize("sp,sn,expect", [(1.0, -1.0, 0.0), (-1.0, 1.0, 1.0), (0.0, 0.0, 0.25)])
def test_hamming_triplet_examples(sp, sn, expect):
    assert val(hamming_triplet_loss(sp, sn)) == expect


@given(unit, unit, st.sampled_from([-1, 1]))
def test_hamming_losses_bounded(s1, s2, t):
    assert 0 <= val(hamming_pair_loss(s1, t)) <= 1
    assert 0 <= val(hamming_triplet_loss(s1, s2)) <= 1


def test_kink_subgradient_is_zero():
    d = Tensor(np.array([0.0]), requires_grad=True)
    from graphsim.autodiff import Tape
    with Tape() as tape:
        loss = pair_margin_loss(d, 1.0, 1.0)  # exactly at the hinge
    assert tape.gradient(loss, [d])[0][0] == 0.0


def test_margin_slope_is_unit_in_d():
    d = Tensor(np.array([0.5, 0.5]), requires_grad=True)
    from graphsim.autodiff import Tape, reduce_sum
    with Tape() as tape:
        loss = reduce_sum(pair_margin_loss(d, np.array([1.0, -1.0]), 1.0))
    assert np.array_equal(tape.gradient(loss, [d])[0], [1.0, -1.0])


@pytest.mark.parametrize("family", ["margin", "hamming"])
@pytest.mark.parametrize("mode", ["pair", "triplet"])
def test_batch_losses_gradcheck(family, mode):
    rng = np.random.default_rng(0)
    vs = [Tensor(rng.normal(size=(3, 5)), requires_grad=True, name=f"v{k}") for k in range(4)]
    cfg = LossConfig(family=family, mode=mode, margin=3.0)
    labels = np.array([1.0, -1.0, 1.0])
    if mode == "pair":
        fn = lambda: batch_pair_loss(cfg, vs[0], vs[1], labels)
    else:
        fn = lambda: batch_triplet_loss(cfg, vs[0], vs[1], vs[2], vs[3])
    assert finite_diff_gradcheck(fn, vs) < 1e-6


def test_batch_pair_loss_is_mean():
    u = np.array([[0.0, 0.0], [1.0, 0.0]])
    v = np.array([[0.0, 0.0], [0.0, 1.0]])
    # d = (0, 2); losses max(0, 1 - t(1 - d)) with t = (1, -1): (0, 0)
    assert val(batch_pair_loss(LossConfig(), u, v, np.array([1.0, -1.0]))) == 0.0
    # t = (-1, 1): (2, 2)
    assert val(batch_pair_loss(LossConfig(), u, v, np.array([-1.0, 1.0]))) == 2.0


def test_similarity_families():
    u, v = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert val(similarity("margin", u, v)) == -1.0
    assert val(similarity("hamming", u, v)) == 0.0
