"""Output-guided constraint mining.

For every test segment, collect the n-grams that most of the strong systems
produce but no reference contains, keep only the maximal ones, and write
them out as lexical constraints for an external constrained decoder.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .io import atomic_write
from .text import ngrams_of_order
from .validation import DataError, check_reference_sets, check_seed, check_segments


@dataclass
class ConstraintSet:
    """Constraints for one segment; ``segment`` is the 1-based line number."""

    segment: int
    constraints: List[tuple] = field(default_factory=list)
    votes: List[float] = field(default_factory=list)

    def to_record(self):
        return {
            "segment": self.segment,
            "constraints": [" ".join(c) for c in self.constraints],
            "votes": self.votes,
        }


def select_top_half(human_scores: Mapping[str, float], systems: Sequence[str] = None) -> List[str]:
    """The ceil(S/2) systems with the highest human score; ties go to the smaller name."""
    systems = sorted(human_scores) if systems is None else list(systems)
    missing = [s for s in systems if s not in human_scores]
    if missing:
        raise DataError(f"no human score for system(s): {', '.join(missing)}")
    if not systems:
        raise DataError("no systems to rank")
    ranked = sorted(systems, key=lambda s: (-human_scores[s], s))
    return ranked[: math.ceil(len(ranked) / 2)]


def votes_needed(threshold: float, n_voters: int) -> int:
    # exact rational arithmetic so 0.75 * 4 is 3, not 3.0000000000000004
    return math.ceil(Fraction(str(threshold)) * n_voters)


def find_unrewarded_ngrams(refs, voters, orders=(2, 3, 4), threshold=0.75) -> Dict[tuple, float]:
    """N-grams absent from every reference but present in enough voter outputs.

    Voting is by presence: a system votes once for an n-gram no matter how
    often it produces it. Returns ``{ngram: fraction of voters}``.
    """
    if not voters:
        raise DataError("no voter outputs")
    need = votes_needed(threshold, len(voters))
    found = {}
    for n in orders:
        in_refs = set()
        for ref in refs:
            in_refs |= ngrams_of_order(ref, n)
        tally = {}
        for out in voters:
            for g in ngrams_of_order(out, n):
                if g not in in_refs:
                    tally[g] = tally.get(g, 0) + 1
        for g, count in tally.items():
            if count >= need:
                found[g] = count / len(voters)
    return found


def is_contiguous_subsequence(short: tuple, long: tuple) -> bool:
    k = len(short)
    if k >= len(long):
        return False
    return any(long[i:i + k] == short for i in range(len(long) - k + 1))


def filter_subsequences(ngrams):
    """Keep only n-grams that are not inside a longer one from the same collection."""
    ngrams = set(ngrams)
    by_len = sorted(ngrams, key=len, reverse=True)
    kept = []
    for g in by_len:
        if not any(is_contiguous_subsequence(g, longer) for longer in kept):
            kept.append(g)
    return set(kept)


def mine_segment(refs, voters, orders=(2, 3, 4), threshold=0.75) -> ConstraintSet:
    found = find_unrewarded_ngrams(refs, voters, orders, threshold)
    kept = sorted(filter_subsequences(found), key=lambda g: (-found[g], g))
    return ConstraintSet(-1, kept, [found[g] for g in kept])


def mine_constraints(references, voter_outputs: Sequence[Sequence], orders=(2, 3, 4),
                     threshold=0.75) -> List[ConstraintSet]:
    """Mine every segment. ``voter_outputs`` holds one line-aligned output list per voting system."""
    refs = check_reference_sets(references)
    outputs = [check_segments(o) for o in voter_outputs]
    for o in outputs:
        if len(o) != len(refs):
            raise DataError(f"system output has {len(o)} lines, references have {len(refs)}")
    result = []
    for i, ref_set in enumerate(refs):
        cs = mine_segment(ref_set, [o[i] for o in outputs], orders, threshold)
        cs.segment = i + 1
        result.append(cs)
    return result


def write_constraints(constraint_sets: Sequence[ConstraintSet], path):
    lines = [json.dumps(cs.to_record(), ensure_ascii=False) for cs in constraint_sets]
    atomic_write(path, "".join(line + "\n" for line in lines))


def read_constraints(path) -> List[ConstraintSet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            out.append(ConstraintSet(rec["segment"], [tuple(c.split(" ")) for c in rec["constraints"]],
                                     rec["votes"]))
    return out


def emit_constraints(references, systems: Mapping[str, Sequence], human_scores: Mapping[str, float],
                     path=None, orders=(4,), threshold=0.75) -> List[ConstraintSet]:
    """Vote with the top half of ``systems`` and optionally write the JSON-lines file."""
    voters = select_top_half(human_scores, sorted(systems))
    sets = mine_constraints(references, [systems[v] for v in voters], orders, threshold)
    if path is not None:
        write_constraints(sets, path)
    return sets


def split_protocol(systems: Sequence[str], repeats: int = 10, seed: int = 0):
    """``repeats`` uniform random bisections into (mining half, evaluation half).

    Split ``i`` draws from its own generator seeded with ``seed + i``; the
    mining half gets ``S // 2`` systems.
    """
    seed = check_seed(seed)
    names = sorted(systems)
    if len(names) < 2:
        raise DataError("the split protocol needs at least 2 systems")
    if len(set(names)) != len(names):
        raise DataError("duplicate system names")
    splits = []
    for i in range(repeats):
        order = np.random.default_rng(seed + i).permutation(len(names))
        half = len(names) // 2
        splits.append((sorted(names[j] for j in order[:half]), sorted(names[j] for j in order[half:])))
    return splits


class ConstraintMiner(BaseEstimator):
    """Constraint mining with an estimator interface.

    ``fit`` takes ``{system: outputs}`` and ``{system: human score}`` and keeps
    the top-half systems as voters; ``transform`` mines the given references.
    """

    def __init__(self, orders=(4,), threshold=0.75, top_half=True):
        self.orders = orders
        self.threshold = threshold
        self.top_half = top_half

    def fit(self, systems, human_scores=None):
        if not 0 <= self.threshold <= 1:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.top_half:
            if human_scores is None:
                raise DataError("top-half voting needs human system scores")
            self.voters_ = select_top_half(human_scores, sorted(systems))
        else:
            self.voters_ = sorted(systems)
        self.voter_outputs_ = [check_segments(systems[v]) for v in self.voters_]
        return self

    def transform(self, references):
        check_is_fitted(self, "voters_")
        return mine_constraints(references, self.voter_outputs_, tuple(self.orders), self.threshold)

    def fit_transform(self, systems, human_scores=None, references=None):
        if references is None:
            raise ValueError("fit_transform needs references")
        return self.fit(systems, human_scores).transform(references)
