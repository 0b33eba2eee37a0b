"""Corpus- and sentence-level BLEU against one or many references."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .text import clip_counts, extract_ngrams, max_reference_counts, order_totals
from .validation import DataError, check_reference_sets, check_segments

logger = logging.getLogger(__name__)

SMOOTHING_METHODS = ("none", "exp")
REF_LENGTH_POLICIES = ("closest", "shortest")


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4
    weights: Optional[Sequence[float]] = None
    smoothing: str = "none"
    ref_length_policy: str = "closest"

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if self.weights is None:
            object.__setattr__(self, "weights", tuple([1.0 / self.max_order] * self.max_order))
        else:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != self.max_order:
            raise ValueError(f"{len(self.weights)} weights given for max_order {self.max_order}")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {self.weights}")
        if self.smoothing not in SMOOTHING_METHODS:
            raise ValueError(f"unknown smoothing {self.smoothing!r}; expected one of {SMOOTHING_METHODS}")
        if self.ref_length_policy not in REF_LENGTH_POLICIES:
            raise ValueError(f"unknown ref_length_policy {self.ref_length_policy!r}")


@dataclass
class BleuScore:
    """A BLEU result on the [0, 1] scale plus its sufficient statistics."""

    score: float
    bp: float
    precisions: List[float]
    hyp_len: int
    ref_len: int
    correct: List[int] = field(default_factory=list)
    total: List[int] = field(default_factory=list)
    empty_hypothesis: bool = False

    def to_dict(self):
        """JSON-ready view using the x100 convention for score and precisions."""
        return {
            "score": round(100 * self.score, 6),
            "bp": self.bp,
            "precisions": [100 * p for p in self.precisions],
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
            "correct": list(self.correct),
            "total": list(self.total),
            "empty_hypothesis": self.empty_hypothesis,
        }


def brevity_penalty(c: int, r: int) -> float:
    if c <= 0:
        raise ValueError("brevity penalty is undefined for an empty hypothesis corpus")
    if c > r:
        return 1.0
    return math.exp(1.0 - r / c)


def effective_ref_length(hyp_len: int, ref_lens: Sequence[int], policy: str = "closest") -> int:
    if len(ref_lens) == 0:
        raise ValueError("at least one reference length is required")
    if policy == "shortest":
        return min(ref_lens)
    if policy != "closest":
        raise ValueError(f"unknown ref_length_policy {policy!r}")
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def segment_stats(hyp, refs, max_order=4, ref_length_policy="closest"):
    """Sufficient statistics of one segment as ``[c, r, correct_1..N, total_1..N]``."""
    hyp_counts = extract_ngrams(hyp, max_order)
    ref_counts = [extract_ngrams(ref, max_order) for ref in refs]
    clipped = clip_counts(hyp_counts, ref_counts)
    ref_len = effective_ref_length(len(hyp), [len(ref) for ref in refs], ref_length_policy)
    return [len(hyp), ref_len] + order_totals(clipped, max_order) + order_totals(hyp_counts, max_order)


def bleu_from_stats(stats, config: BleuConfig, effective_order: bool = False) -> BleuScore:
    """Turn accumulated sufficient statistics into a BleuScore.

    With ``effective_order`` set, orders whose hypothesis n-gram count is zero
    are dropped and the remaining weights renormalized.
    """
    n_max = config.max_order
    c, r = int(stats[0]), int(stats[1])
    correct = [int(x) for x in stats[2:2 + n_max]]
    total = [int(x) for x in stats[2 + n_max:2 + 2 * n_max]]

    if c == 0:
        return BleuScore(0.0, 0.0, [0.0] * n_max, c, r, correct, total, empty_hypothesis=True)
    bp = brevity_penalty(c, r)

    precisions = [0.0] * n_max
    used = n_max
    smooth_factor = 1.0
    for n in range(n_max):
        if total[n] == 0:
            if effective_order:
                used = n
                break
            continue
        if correct[n] == 0:
            if config.smoothing == "exp":
                smooth_factor *= 2
                precisions[n] = 1.0 / (smooth_factor * total[n])
        else:
            precisions[n] = correct[n] / total[n]

    weights = config.weights[:used]
    wsum = sum(weights)
    if used == 0 or wsum == 0 or any(p == 0.0 for p, w in zip(precisions, weights) if w > 0):
        score = 0.0
    else:
        score = bp * math.exp(sum((w / wsum) * math.log(p) for w, p in zip(weights, precisions) if w > 0))
    return BleuScore(score, bp, precisions, c, r, correct, total)


def corpus_stats(hyps, refs, config: BleuConfig):
    """Per-segment sufficient statistics as an integer array of shape (n_segments, 2 + 2N)."""
    hyps = check_segments(hyps, "hyps")
    refs = check_reference_sets(refs)
    if len(hyps) != len(refs):
        raise DataError(f"{len(hyps)} hypotheses but {len(refs)} reference sets")
    if not hyps:
        raise DataError("corpus is empty")
    rows = [segment_stats(h, rs, config.max_order, config.ref_length_policy) for h, rs in zip(hyps, refs)]
    return np.asarray(rows, dtype=np.int64)


def corpus_bleu(hyps, refs, config: Optional[BleuConfig] = None) -> BleuScore:
    """BLEU with n-gram matches accumulated over all segments before dividing."""
    config = config or BleuConfig()
    stats = corpus_stats(hyps, refs, config)
    return bleu_from_stats(stats.sum(axis=0), config)


def sentence_bleu(hyp, refs, config: Optional[BleuConfig] = None) -> BleuScore:
    """Smoothed single-segment BLEU (exponential smoothing by default)."""
    config = config or BleuConfig(smoothing="exp")
    (hyp,) = check_segments([hyp], "hyp")
    (refs,) = check_reference_sets([refs])
    result = bleu_from_stats(segment_stats(hyp, refs, config.max_order, config.ref_length_policy),
                             config, effective_order=True)
    if result.empty_hypothesis:
        logger.warning("empty hypothesis scored as 0")
    return result


def accumulated_numerators(hyps, refs, max_order=4):
    """Corpus-summed clipped n-gram matches per order (the numerators of the precisions)."""
    correct = [0] * max_order
    for hyp, ref_set in zip(hyps, refs):
        hyp_counts = extract_ngrams(hyp, max_order)
        ceiling = max_reference_counts(extract_ngrams(r, max_order) for r in ref_set)
        for ngram, count in hyp_counts.items():
            correct[len(ngram) - 1] += min(count, ceiling.get(ngram, 0))
    return correct


class BleuScorer(BaseEstimator):
    """Multi-reference BLEU with an estimator interface.

    ``fit`` memorizes the (line-aligned) reference sets; ``predict`` returns
    smoothed sentence-level BLEU per hypothesis and ``score`` the corpus BLEU.

    Parameters
    ----------
    max_order : int, default=4
    smoothing : {"none", "exp"}, default="none"
        Smoothing for corpus scores. Sentence scores always use "exp".
    ref_length_policy : {"closest", "shortest"}, default="closest"
    weights : sequence of float, optional
        Per-order weights, uniform by default.
    """

    def __init__(self, max_order=4, smoothing="none", ref_length_policy="closest", weights=None):
        self.max_order = max_order
        self.smoothing = smoothing
        self.ref_length_policy = ref_length_policy
        self.weights = weights

    def _config(self, smoothing=None):
        return BleuConfig(self.max_order, self.weights, smoothing or self.smoothing, self.ref_length_policy)

    def fit(self, references, y=None):
        self._config()
        self.references_ = check_reference_sets(references)
        self.n_references_ = [len(r) for r in self.references_]
        return self

    def _check_hyps(self, X):
        check_is_fitted(self, "references_")
        hyps = check_segments(X, "X")
        if len(hyps) != len(self.references_):
            raise DataError(f"fitted on {len(self.references_)} segments, got {len(hyps)} hypotheses")
        return hyps

    def corpus_score(self, X) -> BleuScore:
        hyps = self._check_hyps(X)
        return corpus_bleu(hyps, self.references_, self._config())

    def score(self, X, y=None):
        return self.corpus_score(X).score

    def predict(self, X):
        hyps = self._check_hyps(X)
        config = self._config("exp")
        return np.array([sentence_bleu(h, r, config).score for h, r in zip(hyps, self.references_)])

    def transform(self, X):
        """Per-segment sufficient statistics, summable across any subset of segments."""
        hyps = self._check_hyps(X)
        return corpus_stats(hyps, self.references_, self._config())
