import math
import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from conftest import load_fixture
from refcover.stats import (CorrelationReport, bootstrap_tau_significance, concordance, correlate_segment,
                            correlate_system, da_to_relative_ranking, decision_flip_analysis, kendall_tau_rr,
                            ngram_coverage_analysis, pearson, read_rr_pairs, subset_correlation_curve,
                            williams_test)
from refcover.text import extract_ngrams
from refcover.validation import DataError

CASES = load_fixture("stats_fixture.json")["cases"]
corr = st.floats(-0.95, 0.95)


def test_pearson_examples():
    x = [1.0, 2.0, 4.0, 7.0]
    assert pearson(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)
    assert pearson([1, 2, 4], [2, 1, 5]) == pytest.approx(sps.pearsonr([1, 2, 4], [2, 1, 5])[0], abs=1e-12)
    with pytest.raises(DataError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(DataError):
        pearson([1, 2], [1, 2])


@pytest.mark.parametrize("case", CASES, ids=[f"case{i}" for i in range(len(CASES))])
def test_against_frozen_reference(case):
    assert abs(pearson(case["human"], case["candidate"]) - case["r12"]) < 1e-6
    assert abs(pearson(case["human"], case["baseline"]) - case["r13"]) < 1e-6
    assert abs(pearson(case["candidate"], case["baseline"]) - case["r23"]) < 1e-6
    t, p = williams_test(case["r12"], case["r13"], case["r23"], case["n"])
    assert abs(t - case["t"]) < 1e-6
    assert abs(p - case["p"]) < 1e-6


@given(corr, corr, corr, st.integers(4, 500))
def test_williams_antisymmetry(r12, r13, r23, n):
    try:
        t, p = williams_test(r12, r13, r23, n)
    except ValueError:
        return
    t2, p2 = williams_test(r13, r12, r23, n)
    assert t2 == -t
    assert p + p2 == pytest.approx(1.0, abs=1e-12)
    _, p_two = williams_test(r12, r13, r23, n, two_sided=True)
    assert p_two == pytest.approx(min(1.0, 2 * min(p, p2)), abs=1e-12)


@given(corr, corr, st.integers(4, 500))
def test_williams_equal_correlations(r, r23, n):
    try:
        assert williams_test(r, r, r23, n) == (0.0, 0.5)
    except ValueError:
        pass


def test_williams_direction_and_errors():
    t, p = williams_test(0.9, 0.6, 0.8, 200)
    assert t > 0 and p < 1e-6
    with pytest.raises(ValueError):
        williams_test(0.5, 0.4, 0.3, 3)
    with pytest.raises(ValueError):
        williams_test(1.0, 0.4, 0.3, 10)
    with pytest.raises(ValueError):
        williams_test(0.9, -0.9, 0.9, 10)


def test_relative_ranking_gap():
    da = {("a", 1): 80, ("b", 1): 50, ("c", 1): 60, ("a", 2): 10, ("b", 2): 35}
    assert da_to_relative_ranking(da) == [(1, "a", "b"), (2, "b", "a")]
    assert da_to_relative_ranking({("a", 1): 60, ("b", 1): 50}) == []
    assert da_to_relative_ranking({("a", 1): 75, ("b", 1): 50}) == [(1, "a", "b")]


def test_read_rr_pairs(tmp_path):
    p = tmp_path / "DArr-seglevel.csv"
    p.write_text("LP DATA SID BETTER WORSE\nde-en newstest2019 3 sysA sysB\nde-en newstest2019 4 sysB sysA\n")
    assert read_rr_pairs(p) == [(3, "sysA", "sysB"), (4, "sysB", "sysA")]
    assert read_rr_pairs(p, lp="ru-en") == []
    p.write_text("1\ta\tb\n")
    assert read_rr_pairs(p) == [(1, "a", "b")]
    p.write_text("x y\n")
    with pytest.raises(DataError):
        read_rr_pairs(p)


def metric(values):
    return {(s, seg): v for (s, seg), v in values.items()}


def test_kendall_examples():
    pairs = [(i, "a", "b") for i in range(4)]
    agree = {("a", i): 1.0 for i in range(4)} | {("b", i): 0.0 for i in range(4)}
    assert kendall_tau_rr(pairs, agree) == 1.0
    reverse = {(s, i): 1 - v for (s, i), v in agree.items()}
    assert kendall_tau_rr(pairs, reverse) == -1.0
    mixed = dict(agree) | {("a", 3): 0.0, ("b", 3): 1.0}
    assert kendall_tau_rr(pairs, mixed) == 0.5
    tied = dict(agree) | {("a", 3): 0.0, ("b", 3): 0.0}
    assert kendall_tau_rr(pairs, tied) == 0.5
    assert kendall_tau_rr(pairs, tied, ties="excluded") == 1.0
    with pytest.raises(DataError):
        kendall_tau_rr(pairs, {("a", 0): 1})


def random_instance(rng, m=None):
    m = m or rng.randint(1, 60)
    pairs = [(i, "a", "b") for i in range(m)]
    base = {(s, i): float(rng.randint(0, 3)) for i in range(m) for s in "ab"}
    new = {(s, i): float(rng.randint(0, 3)) for i in range(m) for s in "ab"}
    return pairs, base, new


def test_flip_identity():
    rng = random.Random(8)
    for _ in range(100):
        pairs, base, new = random_instance(rng)
        improved, degraded = decision_flip_analysis(base, new, pairs)
        m = len(pairs)
        i_count, d_count = round(improved * m / 100), round(degraded * m / 100)
        tb = Fraction(int((concordance(pairs, base) > 0).sum()) * 2 - m, m)
        tn = Fraction(int((concordance(pairs, new) > 0).sum()) * 2 - m, m)
        assert tn - tb == Fraction(2 * (i_count - d_count), m)
        diff = kendall_tau_rr(pairs, new) - kendall_tau_rr(pairs, base)
        assert math.isclose(diff, 2 * (improved - degraded) / 100, abs_tol=1e-12)


def test_flip_examples():
    pairs = [(i, "a", "b") for i in range(10)]
    base = {("a", i): 1.0 if i < 7 else 0.0 for i in range(10)} | {("b", i): 0.5 for i in range(10)}
    new = dict(base)
    assert decision_flip_analysis(base, new, pairs) == (0.0, 0.0)
    new[("a", 7)] = new[("a", 8)] = 1.0
    new[("a", 0)] = 0.0
    assert decision_flip_analysis(base, new, pairs) == (20.0, 10.0)


def test_bootstrap():
    rng = random.Random(1)
    pairs, base, _ = random_instance(rng, 200)
    assert bootstrap_tau_significance(base, base, pairs, 200, seed=0) == 1.0
    m = 200
    base = {("a", i): 1.0 if i < 140 else 0.0 for i in range(m)} | {("b", i): 0.5 for i in range(m)}
    cand = dict(base) | {("a", i): 1.0 for i in range(140, 158)}
    p = bootstrap_tau_significance(base, cand, pairs, 1000, seed=5)
    assert p < 0.05
    assert p == bootstrap_tau_significance(base, cand, pairs, 1000, seed=5, threads=8)
    worse = bootstrap_tau_significance(cand, base, pairs, 1000, seed=5)
    assert worse == 1.0
    with pytest.raises(ValueError):
        bootstrap_tau_significance(base, cand, pairs, 10)


def coverage_reference(refs, extra, systems, orders):
    newly, missing = Counter(), Counter()
    for j in range(len(refs)):
        orig = {g for r in refs[j] for g in extract_ngrams(r, 4) if len(g) in orders}
        more = {g for r in extra[j] for g in extract_ngrams(r, 4) if len(g) in orders}
        for outs in systems.values():
            out = outs[j]
            for n in orders:
                for i in range(len(out) - n + 1):
                    g = tuple(out[i:i + n])
                    if g in orig:
                        continue
                    (newly if g in more else missing)[g] += 1
    return newly, missing


def test_coverage_against_set_arithmetic():
    rng = random.Random(2)
    for _ in range(30):
        n_seg = 2
        mk = lambda: tuple(rng.choice("abcd") for _ in range(rng.randint(0, 8)))  # noqa: E731
        refs = [[mk()] for _ in range(n_seg)]
        extra = [[mk() for _ in range(rng.randint(0, 2))] for _ in range(n_seg)]
        systems = {s: [mk() for _ in range(n_seg)] for s in "xyz"}
        orders = sorted(rng.sample([1, 2, 3, 4], rng.randint(1, 4)))
        newly, missing = ngram_coverage_analysis(refs, extra, systems, orders)
        exp_new, exp_missing = coverage_reference(refs, extra, systems, orders)
        assert dict(newly) == dict(exp_new) and dict(missing) == dict(exp_missing)
        assert [c for _, c in newly] == sorted((c for _, c in newly), reverse=True)


def test_coverage_without_extra_references():
    newly, missing = ngram_coverage_analysis([[("a", "b")]], [[]], {"s": [("a", "c")]}, [1, 2])
    assert newly == [] and dict(missing) == {("c",): 1, ("a", "c"): 1}


def subset_data(seed=0, n_sys=6, n_seg=40):
    rng = np.random.default_rng(seed)
    human = {f"s{i}": float(i) for i in range(n_sys)}
    stats = {s: h + rng.normal(0, 3, size=n_seg) for s, h in human.items()}
    return stats, human


def test_subset_curve():
    stats, human = subset_data()
    rows = subset_correlation_curve(stats, human, [5, 20, 40], 10, seed=3)
    full = pearson([stats[s].mean() for s in sorted(human)], [human[s] for s in sorted(human)])
    size, mean, std, sample = rows[-1]
    assert size == 40 and std == 0.0 and all(r == pytest.approx(full, abs=1e-12) for r in sample)
    assert rows == subset_correlation_curve(stats, human, [5, 20, 40], 10, seed=3, threads=8)
    flat = {s: np.full(40, h) + np.arange(40) for s, h in human.items()}
    for _, mean, std, _ in subset_correlation_curve(flat, human, [1, 7, 40], 5, seed=0):
        assert mean == pytest.approx(1.0) and std < 1e-12
    with pytest.raises(DataError):
        subset_correlation_curve(stats, human, [41], 2)


def test_correlate_system_and_segment():
    human = {f"s{i}": float(i) for i in range(8)}
    rng = np.random.default_rng(0)
    metrics = {"good": {s: h + rng.normal(0, 0.1) for s, h in human.items()},
               "bleu": {s: h + rng.normal(0, 2) for s, h in human.items()}}
    report = correlate_system(metrics, human, baseline="bleu", lp="de-en")
    assert report.cells["good"]["de-en"]["p"] < 0.05 and report.cells["bleu"]["de-en"]["p"] is None
    with pytest.raises(DataError):
        correlate_system(metrics, human, baseline="nope")
    pairs = [(i, "a", "b") for i in range(50)]
    seg = {"bleu": {("a", i): float(i % 2) for i in range(50)} | {("b", i): 0.5 for i in range(50)},
           "good": {("a", i): 1.0 for i in range(50)} | {("b", i): 0.5 for i in range(50)}}
    rep = correlate_segment(seg, pairs, baseline="bleu", iterations=200, seed=1)
    assert rep.cells["good"]["all"]["value"] == 1.0 and rep.cells["good"]["all"]["improved"] == 50.0
    assert CorrelationReport.from_dict(rep.to_dict()) == rep
