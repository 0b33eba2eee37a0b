"""Lexical and syntactic diversity of paraphrase sets."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .trees import KernelConfig, ParseTree, normalized_tree_similarity
from .validation import DataError, check_segments

logger = logging.getLogger(__name__)


@dataclass
class ParaphraseSet:
    segment_id: int
    items: List[tuple]
    parses: Optional[List[ParseTree]] = None


@dataclass
class DiversityReport:
    n: int
    ds_bow: List[float] = field(default_factory=list)
    ds_tree: Optional[List[float]] = None

    @property
    def mean_bow(self):
        return float(np.mean(self.ds_bow)) if self.ds_bow else 0.0

    @property
    def mean_tree(self):
        if self.ds_tree is None:
            return None
        return float(np.mean(self.ds_tree)) if self.ds_tree else 0.0

    def to_dict(self):
        return {
            "n": self.n,
            "segments": len(self.ds_bow),
            "ds_bow": self.mean_bow,
            "ds_tree": self.mean_tree,
            "per_segment": {"ds_bow": self.ds_bow, "ds_tree": self.ds_tree},
        }


def delta_bow(y: Sequence[str], y2: Sequence[str]) -> float:
    """Unique shared words over the mean token length of the two segments.

    Token-identical segments score exactly 1 even when they repeat words,
    so a set of identical paraphrases always has zero diversity.
    """
    if len(y) == 0 or len(y2) == 0:
        raise ValueError("lexical overlap is undefined for an empty segment")
    if tuple(y) == tuple(y2):
        return 1.0
    overlap = len(set(y) & set(y2)) / ((len(y) + len(y2)) / 2)
    if overlap > 1:
        logger.warning("lexical overlap %.4f clamped to 1", overlap)
        overlap = 1.0
    return overlap


def delta_tree(t1: ParseTree, t2: ParseTree, cfg: KernelConfig = KernelConfig()) -> float:
    return normalized_tree_similarity(t1, t2, cfg)


def diversity_score(items: Sequence, delta: Callable) -> float:
    """Mean of ``1 - delta(y, y')`` over all ordered pairs of distinct positions."""
    m = len(items)
    if m < 2:
        raise ValueError(f"diversity needs at least 2 items, got {m}")
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            # both orientations, so asymmetric deltas are handled too
            total += (1 - delta(items[i], items[j])) + (1 - delta(items[j], items[i]))
    return total / (m * (m - 1))


def corpus_diversity(sets: Sequence[ParaphraseSet], tree_cfg: Optional[KernelConfig] = None,
                     ragged: bool = False) -> DiversityReport:
    """Unweighted mean of per-segment DS_BOW (and DS_tree when parses are given)."""
    sizes = {len(s.items) for s in sets}
    if len(sizes) > 1 and not ragged:
        raise DataError(f"paraphrase sets have differing sizes {sorted(sizes)}; pass ragged=True to allow")
    with_trees = tree_cfg is not None
    bow, tree = [], [] if with_trees else None
    for s in sets:
        bow.append(diversity_score(s.items, delta_bow))
        if with_trees:
            if s.parses is None or len(s.parses) != len(s.items):
                raise DataError(f"segment {s.segment_id}: missing parse alignment for tree diversity")
            tree.append(diversity_score(s.parses, lambda a, b: delta_tree(a, b, tree_cfg)))
    n = sizes.pop() if len(sizes) == 1 else 0
    return DiversityReport(n=n, ds_bow=bow, ds_tree=tree)


def paraphrase_sets_from_columns(columns, parse_columns=None):
    """Build sets from k line-aligned files: paraphrase i of segment j is ``columns[i][j]``."""
    if not columns:
        raise DataError("no paraphrase files given")
    n = {len(c) for c in columns}
    if len(n) != 1:
        raise DataError(f"paraphrase files are not line-aligned (lengths {sorted(n)})")
    if parse_columns is not None:
        if len(parse_columns) != len(columns) or any(len(p) != len(columns[0]) for p in parse_columns):
            raise DataError("parse files must match the paraphrase files one-to-one and line by line")
    sets = []
    for j in range(len(columns[0])):
        items = check_segments([col[j] for col in columns])
        parses = [pc[j] for pc in parse_columns] if parse_columns is not None else None
        sets.append(ParaphraseSet(j, items, parses))
    return sets


class DiversityScorer(BaseEstimator, TransformerMixin):
    """Per-set diversity as a stateless transformer.

    ``transform`` maps a list of paraphrase sets (lists of segments, or lists
    of ParseTree when ``measure="tree"``) to a 1-d array of DS values.
    """

    def __init__(self, measure="bow", decay=0.5, sigma=0, include_leaves=False):
        self.measure = measure
        self.decay = decay
        self.sigma = sigma
        self.include_leaves = include_leaves

    def fit(self, X=None, y=None):
        if self.measure not in ("bow", "tree"):
            raise ValueError(f"measure must be 'bow' or 'tree', got {self.measure!r}")
        self.kernel_config_ = KernelConfig(self.decay, self.sigma, self.include_leaves)
        return self

    def transform(self, X):
        if not hasattr(self, "kernel_config_"):
            self.fit()
        if self.measure == "bow":
            return np.array([diversity_score(check_segments(Y), delta_bow) for Y in X])
        cfg = self.kernel_config_
        return np.array([diversity_score(list(Y), lambda a, b: delta_tree(a, b, cfg)) for Y in X])
