import math
import random
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from refcover.bleu import (BleuConfig, BleuScorer, accumulated_numerators, bleu_from_stats, brevity_penalty,
                           corpus_bleu, corpus_stats, effective_ref_length, sentence_bleu)
from refcover.validation import DataError

segs = st.lists(st.sampled_from(list("abcdef")), min_size=1, max_size=10)


def test_brevity_penalty():
    assert brevity_penalty(10, 5) == 1.0
    assert brevity_penalty(7, 7) == 1.0
    assert brevity_penalty(5, 10) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        brevity_penalty(0, 3)


def test_effective_ref_length():
    assert effective_ref_length(10, [8, 12]) == 8
    assert effective_ref_length(10, [12, 8]) == 8
    assert effective_ref_length(10, [9, 30]) == 9
    assert effective_ref_length(10, [9, 30], "shortest") == 9
    with pytest.raises(ValueError):
        effective_ref_length(3, [])


def test_config_validation():
    with pytest.raises(ValueError):
        BleuConfig(weights=(0.5, 0.5))
    with pytest.raises(ValueError):
        BleuConfig(max_order=2, weights=(0.6, 0.6))
    with pytest.raises(ValueError):
        BleuConfig(smoothing="floor")
    assert BleuConfig(max_order=3).weights == pytest.approx((1 / 3,) * 3)


def test_identity_scores_one():
    hyps = [("a", "b", "c", "d", "e"), ("x", "y", "z", "w")]
    s = corpus_bleu(hyps, hyps)
    assert s.score == pytest.approx(1.0) and s.bp == 1.0 and s.precisions == [1.0] * 4


def test_clipping_example_single_and_multi_reference():
    hyp = [("the",) * 4]
    single = corpus_bleu(hyp, [[("the", "cat", "sat")]])
    assert single.precisions[0] == pytest.approx(1 / 4)
    assert single.precisions[1:] == [0.0, 0.0, 0.0]
    assert single.score == 0.0
    multi = corpus_bleu(hyp, [[("the", "cat", "sat"), ("the", "the", "cat")]])
    assert multi.precisions[0] == pytest.approx(2 / 4)
    assert multi.precisions[1] == pytest.approx(1 / 3)
    assert all(m >= s for m, s in zip(multi.precisions, single.precisions))


def test_sentence_bleu_smoothing_example():
    s = sentence_bleu(("a", "b"), [("c", "d")])
    assert s.precisions[:2] == [0.25, 0.25]
    assert s.score == pytest.approx(0.25)
    assert sentence_bleu(("a", "b"), [("a", "b")]).score == pytest.approx(1.0)
    assert sentence_bleu(("a", "b"), [("a", "b", "c")]).bp == pytest.approx(math.exp(1 - 3 / 2))


def test_empty_hypothesis_sentence_is_zero_and_flagged():
    s = sentence_bleu((), [("a",)])
    assert s.score == 0.0 and s.empty_hypothesis


def test_corpus_bleu_errors():
    with pytest.raises(DataError):
        corpus_bleu([("a",)], [])
    with pytest.raises(DataError):
        corpus_bleu([], [])
    with pytest.raises(DataError):
        corpus_bleu([("a",)], [[]])


def test_fixture_parity(bleu_fixture):
    f = bleu_fixture
    start = time.perf_counter()
    single = corpus_bleu(f["hyps"], f["refs_a"])
    multi = corpus_bleu(f["hyps"], [list(p) for p in zip(f["refs_a"], f["refs_b"])])
    sent = [sentence_bleu(h, r).score for h, r in zip(f["hyps"], f["refs_a"])]
    sent_m = [sentence_bleu(h, [a, b]).score for h, a, b in zip(f["hyps"], f["refs_a"], f["refs_b"])]
    elapsed = time.perf_counter() - start
    assert abs(100 * single.score - f["corpus_single"]["score"]) < 0.01
    assert abs(100 * multi.score - f["corpus_multi"]["score"]) < 0.01
    assert single.correct == f["corpus_single"]["counts"] and single.total == f["corpus_single"]["totals"]
    assert multi.ref_len == f["corpus_multi"]["ref_len"]
    assert max(abs(100 * a - b) for a, b in zip(sent, f["sentence_exp_single"])) < 0.01
    assert max(abs(100 * a - b) for a, b in zip(sent_m, f["sentence_exp_multi"])) < 0.01
    assert elapsed < 1.0


@given(st.lists(st.tuples(segs, st.lists(segs, min_size=1, max_size=3)), min_size=1, max_size=8), st.randoms())
def test_permutation_invariance(data, rnd):
    hyps = [h for h, _ in data]
    refs = [r for _, r in data]
    order = list(range(len(data)))
    rnd.shuffle(order)
    a = corpus_bleu(hyps, refs)
    b = corpus_bleu([hyps[i] for i in order], [refs[i] for i in order])
    assert a.score == b.score and a.correct == b.correct


@given(st.lists(st.tuples(segs, st.lists(segs, min_size=1, max_size=3)), min_size=1, max_size=8))
def test_score_in_unit_interval(data):
    s = corpus_bleu([h for h, _ in data], [r for _, r in data])
    assert 0.0 <= s.score <= 1.0
    for h, r in data:
        assert 0.0 <= sentence_bleu(h, r).score <= 1.0


def test_numerators_monotone_in_reference_count():
    rng = random.Random(7)
    vocab = "abcdefgh"
    for _ in range(200):
        hyp = tuple(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
        refs = [tuple(rng.choice(vocab) for _ in range(rng.randint(1, 12))) for _ in range(5)]
        prev = [0] * 4
        for k in range(1, 6):
            cur = accumulated_numerators([hyp], [refs[:k]])
            assert all(c >= p for c, p in zip(cur, prev))
            prev = cur


def test_stats_sum_to_corpus_score(bleu_fixture):
    cfg = BleuConfig()
    stats = corpus_stats(bleu_fixture["hyps"], bleu_fixture["refs_a"], cfg)
    assert stats.dtype == np.int64 and stats.shape == (100, 10)
    assert bleu_from_stats(stats.sum(axis=0), cfg).score == corpus_bleu(bleu_fixture["hyps"],
                                                                         bleu_fixture["refs_a"]).score


def test_estimator(bleu_fixture):
    scorer = BleuScorer().fit(bleu_fixture["refs_a"])
    assert abs(100 * scorer.score(bleu_fixture["hyps"]) - bleu_fixture["corpus_single"]["score"]) < 0.01
    pred = scorer.predict(bleu_fixture["hyps"])
    assert np.allclose(100 * pred, bleu_fixture["sentence_exp_single"], atol=0.01)
    assert scorer.transform(bleu_fixture["hyps"]).shape == (100, 10)
    assert clone(scorer).get_params() == scorer.get_params()
    with pytest.raises(DataError):
        scorer.score(bleu_fixture["hyps"][:3])
