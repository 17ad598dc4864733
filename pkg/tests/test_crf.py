import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nertagger.crf import (CrfParams, emissions_from_encoding, log_likelihood, log_partition,
                           penalized_loss, score_sequence, viterbi_decode)
from nertagger.errors import ConfigError, DimensionError
from nertagger.gradcheck import check_gradients
from nertagger.tensor import Tensor

from conftest import tiny_crf
from oracles import (brute_best, brute_log_partition, brute_marginals, enumerate_scores)


def random_instance(rng, T, K, integer=False):
    crf = CrfParams.zeros(K, 2)
    if integer:
        draw = lambda *shape: rng.integers(-2, 3, size=shape).astype(float)
    else:
        draw = lambda *shape: rng.normal(scale=1.5, size=shape)
    crf.transitions.data[...] = draw(K, K)
    crf.start.data[...] = draw(K)
    crf.stop.data[...] = draw(K)
    return crf, Tensor(draw(T, K), requires_grad=True)


def arrays_of(crf):
    return crf.transitions.data, crf.start.data, crf.stop.data


def test_zero_model_scores_zero():
    crf = CrfParams.zeros(3, 2)
    em = Tensor(np.zeros((4, 3)))
    for labels in ([0, 0, 0, 0], [2, 1, 0, 2]):
        assert score_sequence(crf, em, labels).item() == 0.0


def test_single_term_score():
    crf = CrfParams.zeros(2, 2)
    assert score_sequence(crf, Tensor([[3.0, 7.0]]), [1]).item() == 7.0


def test_score_matches_hand_sum(rng):
    crf, em = random_instance(rng, 4, 3)
    y = [2, 0, 0, 1]
    A, s, e = arrays_of(crf)
    E = em.data
    hand = (s[2] + E[0, 2] + A[2, 0] + E[1, 0] + A[0, 0] + E[2, 0] + A[0, 1] + E[3, 1] + e[1])
    assert score_sequence(crf, em, y).item() == pytest.approx(hand, abs=1e-12)


def test_score_label_errors():
    crf = CrfParams.zeros(2, 2)
    with pytest.raises(ValueError):
        score_sequence(crf, Tensor(np.zeros((2, 2))), [0, 2])
    with pytest.raises(ValueError):
        score_sequence(crf, Tensor(np.zeros((2, 2))), [0])
    with pytest.raises(DimensionError):
        score_sequence(crf, Tensor(np.zeros((2, 3))), [0, 1])


@pytest.mark.parametrize("T, K, expected", [(2, 2, 1.3862943611198906),
                                            (3, 3, 3.295836866004329)])
def test_log_partition_uniform(T, K, expected):
    crf = CrfParams.zeros(K, 2)
    assert log_partition(crf, Tensor(np.zeros((T, K)))).item() == pytest.approx(expected,
                                                                                 abs=1e-15)


def test_log_partition_matches_enumeration(rng):
    crf, em = random_instance(rng, 5, 4)
    brute = brute_log_partition(em.data, *arrays_of(crf))
    assert len(enumerate_scores(em.data, *arrays_of(crf))) == 1024
    assert abs(log_partition(crf, em).item() - brute) <= 1e-9


def test_log_likelihood_examples(rng):
    crf = CrfParams.zeros(2, 2)
    assert log_likelihood(crf, Tensor(np.zeros((2, 2))), [0, 1]).item() == pytest.approx(
        -math.log(4), abs=1e-15)
    em = np.zeros((4, 3))
    gold = [1, 0, 2, 2]
    em[np.arange(4), gold] = 50.0
    ll = log_likelihood(CrfParams.zeros(3, 2), Tensor(em), gold).item()
    assert -1e-6 < ll <= 0.0
    crf, em = random_instance(rng, 4, 3)
    scores = enumerate_scores(em.data, *arrays_of(crf))
    gold = (1, 2, 2, 0)
    expected = math.log(math.exp(scores[gold]) / sum(math.exp(v) for v in scores.values()))
    assert log_likelihood(crf, em, list(gold)).item() == pytest.approx(expected, abs=1e-12)


def test_penalized_loss_examples(rng):
    crf, em = random_instance(rng, 3, 3)
    gold = [0, 2, 1]
    plain = -log_likelihood(crf, em, gold).item()
    assert penalized_loss(crf, em, gold, 0.0).item() == plain
    assert penalized_loss(CrfParams.zeros(2, 2), Tensor(np.zeros((1, 2))), [0], 1.0).item() \
        == pytest.approx(0.34657359027997264, abs=1e-15)
    sure = np.zeros((2, 2))
    sure[[0, 1], [1, 0]] = 60.0
    assert abs(penalized_loss(CrfParams.zeros(2, 2), Tensor(sure), [1, 0], 1.0).item()) < 1e-12
    with pytest.raises(ConfigError):
        penalized_loss(crf, em, gold, -0.5)


def test_penalized_loss_closed_form(rng):
    crf, em = random_instance(rng, 3, 2)
    gold = [1, 1, 0]
    ll = log_likelihood(crf, em, gold).item()
    for beta in (0.1, 1.0, 2.0):
        expected = -(ll + beta * (-math.exp(ll) * ll))
        assert penalized_loss(crf, em, gold, beta).item() == pytest.approx(expected, abs=1e-13)


def test_penalized_loss_continuous_in_beta(rng):
    crf, em = random_instance(rng, 3, 3)
    base = penalized_loss(crf, em, [0, 1, 2], 0.0).item()
    near = penalized_loss(crf, em, [0, 1, 2], 1e-9).item()
    assert abs(near - base) < 1e-8


def test_viterbi_examples():
    crf = CrfParams.zeros(3, 2)
    em = np.zeros((4, 3))
    em[:, 2] = 1.0
    assert viterbi_decode(crf, em)[0] == [2, 2, 2, 2]
    labels, score = viterbi_decode(crf, np.zeros((3, 3)))
    assert labels == [0, 0, 0] and score == 0.0


def test_viterbi_matches_enumeration(rng):
    crf, em = random_instance(rng, 5, 4)
    labels, score = viterbi_decode(crf, em)
    best, seq = brute_best(em.data, *arrays_of(crf))
    assert score == best and labels == seq
    assert score_sequence(crf, em, labels).item() == pytest.approx(score, abs=1e-12)


def test_viterbi_tie_break_with_integer_scores(rng):
    for _ in range(100):
        T, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        crf, em = random_instance(rng, T, K, integer=True)
        labels, score = viterbi_decode(crf, em)
        best, seq = brute_best(em.data, *arrays_of(crf))
        assert (labels, score) == (seq, best)


def test_emission_projection():
    crf = CrfParams.zeros(3, 2)
    crf.proj_b.data[...] = [1.0, -2.0, 0.5]
    out = emissions_from_encoding(crf, Tensor(np.zeros((4, 2))))
    np.testing.assert_array_equal(out.data, np.tile([1.0, -2.0, 0.5], (4, 1)))
    crf = CrfParams.zeros(2, 2)
    crf.proj_W.data[...] = [[1.0, 0.0], [0.0, 2.0]]
    crf.proj_b.data[...] = [0.5, 0.0]
    out = emissions_from_encoding(crf, Tensor([[3.0, 4.0], [-1.0, 1.0]]))
    np.testing.assert_array_equal(out.data, [[3.5, 8.0], [-0.5, 2.0]])
    with pytest.raises(DimensionError):
        emissions_from_encoding(crf, Tensor(np.zeros((2, 3))))


def test_emission_projection_gradients(rng):
    crf = tiny_crf(num_labels=3, input_size=4)
    enc = Tensor(rng.normal(size=(2, 4)), requires_grad=True)
    loss = lambda: penalized_loss(crf, emissions_from_encoding(crf, enc), [2, 0], 1.0)
    for name, (a, n, err) in check_gradients(loss, crf.parameters() + [("enc", enc)]).items():
        assert err.max() <= 1e-4, name


def test_nll_gradient_is_marginals_minus_gold(rng):
    crf, em = random_instance(rng, 4, 3)
    gold = [2, 0, 1, 1]
    (-log_likelihood(crf, em, gold)).backward()
    expected = brute_marginals(em.data, *arrays_of(crf))
    expected[np.arange(4), gold] -= 1.0
    np.testing.assert_allclose(em.grad, expected, rtol=0, atol=1e-8)


def test_log_partition_gradients_vs_finite_differences(rng):
    crf, em = random_instance(rng, 4, 3)
    for p in (crf.transitions, crf.start, crf.stop):
        p.requires_grad = True
    params = [("em", em), ("A", crf.transitions), ("start", crf.start), ("stop", crf.stop)]
    for T in (1, 4):
        sub = Tensor(em.data[:T], requires_grad=True)
        report = check_gradients(lambda: log_partition(crf, sub), [("em", sub)] + params[1:])
        for name, (a, n, err) in report.items():
            assert err.max() <= 1e-6, (T, name)


# properties ------------------------------------------------------------------

instances = st.tuples(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))


@settings(max_examples=60, deadline=None)
@given(instances)
def test_normalization(inst):
    T, K, seed = inst
    crf, em = random_instance(np.random.default_rng(seed), T, K)
    logz = log_partition(crf, em).item()
    total = sum(math.exp(s - logz) for s in enumerate_scores(em.data, *arrays_of(crf)).values())
    assert abs(total - 1.0) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(instances, st.floats(-20, 20))
def test_shift_invariance(inst, c):
    T, K, seed = inst
    rng = np.random.default_rng(seed)
    crf, em = random_instance(rng, T, K)
    t = int(rng.integers(T))
    shifted = em.data.copy()
    shifted[t] += c
    a = log_partition(crf, em).item()
    b = log_partition(crf, Tensor(shifted)).item()
    assert b - a == pytest.approx(c, abs=1e-9)
    assert viterbi_decode(crf, em)[0] == viterbi_decode(crf, shifted)[0]


@settings(max_examples=60, deadline=None)
@given(instances)
def test_viterbi_below_log_partition(inst):
    T, K, seed = inst
    crf, em = random_instance(np.random.default_rng(seed), T, K)
    assert viterbi_decode(crf, em)[1] <= log_partition(crf, em).item() + 1e-12


def test_viterbi_equals_log_partition_when_one_sequence_dominates():
    crf = CrfParams.zeros(3, 2)
    em = np.zeros((3, 3))
    em[[0, 1, 2], [1, 1, 0]] = 200.0
    assert viterbi_decode(crf, em)[1] == pytest.approx(log_partition(crf, Tensor(em)).item(),
                                                       abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(instances)
def test_beta_zero_is_bit_exact(inst):
    T, K, seed = inst
    rng = np.random.default_rng(seed)
    crf, em = random_instance(rng, T, K)
    gold = rng.integers(0, K, size=T)
    a = penalized_loss(crf, em, gold, 0.0).data
    b = (-log_likelihood(crf, em, gold)).data
    assert a.tobytes() == b.tobytes()
