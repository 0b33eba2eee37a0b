"""Correlation with human judgments and the significance tests around it."""

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .text import extract_ngrams
from .validation import DataError, check_positive_int, check_seed

TIE_POLICIES = ("discordant", "excluded")

Pair = Tuple[int, str, str]  # (segment, better system, worse system)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"pearson needs two equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) < 3:
        raise DataError(f"pearson needs at least 3 points, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DataError("pearson is undefined for a constant input")
    return max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))


def williams_test(r12: float, r13: float, r23: float, n: int, two_sided: bool = False):
    """Williams test for two dependent correlations sharing variable 1.

    ``r12`` is the candidate metric's correlation with human scores, ``r13``
    the baseline's, and ``r23`` the correlation between the two metrics.
    Returns ``(t, p)``; the one-sided p tests ``r12 > r13`` on ``n - 3``
    degrees of freedom.
    """
    if n <= 3:
        raise ValueError(f"williams test needs n > 3, got {n}")
    for r in (r12, r13, r23):
        if not -1 < r < 1:
            raise ValueError(f"correlations must lie in (-1, 1), got {r}")
    # symmetric sub-expressions are written so that swapping r12/r13 is bit-exact
    k = 1 - (r12 * r12 + r13 * r13) - r23 * r23 + 2 * (r12 * r13) * r23
    if k <= 0:
        raise ValueError(f"degenerate correlation matrix (determinant {k})")
    denom = math.sqrt(2 * k * (n - 1) / (n - 3) + ((r12 + r13) ** 2 / 4) * (1 - r23) ** 3)
    t = (r12 - r13) * math.sqrt((n - 1) * (1 + r23)) / denom
    if two_sided:
        p = float(2 * sps.t.sf(abs(t), n - 3))
    else:
        p = float(sps.t.sf(t, n - 3))
    return t, min(1.0, p)


def da_to_relative_ranking(segment_da: Mapping[Tuple[str, int], float], min_gap: float = 25.0) -> List[Pair]:
    """Pairs of systems whose DA scores on a segment differ by at least ``min_gap``."""
    if min_gap < 0:
        raise ValueError("min_gap must be >= 0")
    by_segment: Dict[int, List[Tuple[str, float]]] = {}
    for (system, seg), score in segment_da.items():
        by_segment.setdefault(seg, []).append((system, score))
    pairs = []
    for seg in sorted(by_segment):
        entries = sorted(by_segment[seg])
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                (a, sa), (b, sb) = entries[i], entries[j]
                if abs(sa - sb) >= min_gap and sa != sb:
                    pairs.append((seg, a, b) if sa > sb else (seg, b, a))
    return pairs


def read_rr_pairs(path, lp: Optional[str] = None) -> List[Pair]:
    """Relative-ranking pairs, either ``segment<TAB>better<TAB>worse`` or the
    whitespace-separated WMT19 ``DArr-seglevel.csv`` layout (``lp data sid better worse``).

    ``lp`` keeps only the rows of one language pair in the five-column layout.
    """
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) == 5 and parts[2] == "SID":
                continue
            try:
                if len(parts) == 3:
                    pairs.append((int(parts[0]), parts[1], parts[2]))
                elif len(parts) == 5:
                    if lp is not None and parts[0] != lp:
                        continue
                    pairs.append((int(parts[2]), parts[3], parts[4]))
                else:
                    raise ValueError
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot read relative-ranking pair") from None
    return pairs


def concordance(pairs: Sequence[Pair], metric_scores: Mapping[Tuple[str, int], float]) -> np.ndarray:
    """+1 where the metric prefers the human-better output, -1 where it prefers the worse, 0 on ties."""
    out = np.empty(len(pairs), dtype=np.int8)
    for i, (seg, better, worse) in enumerate(pairs):
        try:
            sb = metric_scores[(better, seg)]
        except KeyError:
            raise DataError(f"no metric score for system {better!r}, segment {seg}") from None
        try:
            sw = metric_scores[(worse, seg)]
        except KeyError:
            raise DataError(f"no metric score for system {worse!r}, segment {seg}") from None
        out[i] = 1 if sb > sw else (-1 if sb < sw else 0)
    return out


def _tau_parts(signs: np.ndarray, ties: str):
    conc = int(np.count_nonzero(signs > 0))
    if ties == "discordant":
        disc = len(signs) - conc
    elif ties == "excluded":
        disc = int(np.count_nonzero(signs < 0))
    else:
        raise ValueError(f"ties must be one of {TIE_POLICIES}")
    return conc, disc


def kendall_tau_rr(pairs: Sequence[Pair], metric_scores, ties: str = "discordant") -> float:
    """WMT-style Kendall's tau over relative-ranking pairs."""
    conc, disc = _tau_parts(concordance(pairs, metric_scores), ties)
    if conc + disc == 0:
        raise DataError("no usable relative-ranking pairs")
    return (conc - disc) / (conc + disc)


def _signs_for_ties(signs, ties):
    # "discordant": a tie is a loss; "excluded": ties contribute to neither side
    if ties == "discordant":
        return np.where(signs > 0, 1, -1).astype(np.int64)
    return signs.astype(np.int64)


def _map_tasks(fn, tasks, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def bootstrap_tau_significance(baseline_scores, candidate_scores, pairs: Sequence[Pair],
                               iterations: int = 1000, seed: int = 0, ties: str = "discordant",
                               threads: int = 1) -> float:
    """Share of pair resamples in which the candidate's tau does not beat the baseline's.

    Resample ``i`` draws pair indices with its own generator seeded by
    ``seed + i``, so the result does not depend on ``threads``.
    """
    if not pairs:
        raise DataError("bootstrap needs at least one relative-ranking pair")
    check_positive_int(iterations, "iterations", minimum=100)
    seed = check_seed(seed)
    base = _signs_for_ties(concordance(pairs, baseline_scores), ties)
    cand = _signs_for_ties(concordance(pairs, candidate_scores), ties)
    base_abs, cand_abs = np.abs(base), np.abs(cand)
    m = len(pairs)

    def one(i):
        idx = np.random.default_rng(seed + i).integers(0, m, size=m)
        bn, bd = int(base[idx].sum()), int(base_abs[idx].sum())
        cn, cd = int(cand[idx].sum()), int(cand_abs[idx].sum())
        if bd == 0 or cd == 0:
            # an undefined tau counts as 0
            bn, bd = (bn, bd) if bd else (0, 1)
            cn, cd = (cn, cd) if cd else (0, 1)
        return cn * bd <= bn * cd

    hits = _map_tasks(one, range(iterations), threads)
    return sum(hits) / iterations


def decision_flip_analysis(baseline_scores, new_scores, pairs: Sequence[Pair]):
    """Percent of pairs the new metric fixes and percent it breaks, relative to the baseline.

    A metric tie counts as a wrong decision.
    """
    if not pairs:
        return 0.0, 0.0
    base = concordance(pairs, baseline_scores) > 0
    new = concordance(pairs, new_scores) > 0
    improved = int(np.count_nonzero(~base & new))
    degraded = int(np.count_nonzero(base & ~new))
    return 100.0 * improved / len(pairs), 100.0 * degraded / len(pairs)


def ngram_coverage_analysis(refs, extra_refs, system_outputs: Mapping[str, Sequence], orders=(1, 2, 3, 4)):
    """Which system-output n-grams the extra references newly match, and which stay unmatched.

    ``refs[j]`` and ``extra_refs[j]`` are the original and additional reference
    lists for segment ``j``. Every occurrence in every system output is
    counted. Returns two lists of ``(ngram, count)`` sorted by descending
    count: newly matched, then missing.
    """
    n_seg = len(refs)
    if len(extra_refs) != n_seg:
        raise DataError(f"{n_seg} reference segments but {len(extra_refs)} extra-reference segments")
    for name, outs in system_outputs.items():
        if len(outs) != n_seg:
            raise DataError(f"system {name!r} has {len(outs)} lines, references have {n_seg}")
    orders = sorted(set(orders))
    lo, hi = orders[0], orders[-1]
    newly, missing = Counter(), Counter()
    for j in range(n_seg):
        orig = set()
        for r in refs[j]:
            orig |= set(extract_ngrams(r, hi, lo))
        extra = set()
        for r in extra_refs[j]:
            extra |= set(extract_ngrams(r, hi, lo))
        for outs in system_outputs.values():
            for g, c in extract_ngrams(outs[j], hi, lo).items():
                if len(g) not in orders or g in orig:
                    continue
                if g in extra:
                    newly[g] += c
                else:
                    missing[g] += c

    def table(counter):
        return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))

    return table(newly), table(missing)


def mean_aggregate(rows: np.ndarray) -> float:
    return float(np.mean(rows))


def subset_correlation_curve(segment_stats: Mapping[str, np.ndarray], human: Mapping[str, float],
                             sizes: Sequence[int], samples_per_size: int = 10, seed: int = 0,
                             aggregate: Callable[[np.ndarray], float] = mean_aggregate, threads: int = 1):
    """Pearson correlation of subset-level system scores with the full human scores.

    ``segment_stats[system]`` has one row per segment; ``aggregate`` turns the
    rows of a segment subset into a system score (a mean by default, summed
    sufficient statistics for BLEU). Sample ``b`` of size index ``a`` uses
    the generator seeded by ``seed + a * samples_per_size + b``.

    Returns rows ``(size, mean_r, std_r, [r per sample])``.
    """
    seed = check_seed(seed)
    check_positive_int(samples_per_size, "samples_per_size")
    systems = sorted(human)
    missing = [s for s in systems if s not in segment_stats]
    if missing:
        raise DataError(f"no metric statistics for system(s): {', '.join(missing)}")
    arrays = {s: np.asarray(segment_stats[s]) for s in systems}
    n_seg = {a.shape[0] for a in arrays.values()}
    if len(n_seg) != 1:
        raise DataError(f"systems have differing segment counts {sorted(n_seg)}")
    n_seg = n_seg.pop()
    for size in sizes:
        if not 1 <= size <= n_seg:
            raise DataError(f"subset size {size} outside 1..{n_seg}")
    human_vec = [human[s] for s in systems]

    tasks = [(a, b, size) for a, size in enumerate(sizes) for b in range(samples_per_size)]

    def one(task):
        a, b, size = task
        rng = np.random.default_rng(seed + a * samples_per_size + b)
        idx = np.sort(rng.choice(n_seg, size=size, replace=False))
        return pearson([aggregate(arrays[s][idx]) for s in systems], human_vec)

    rs = _map_tasks(one, tasks, threads)
    rows = []
    for a, size in enumerate(sizes):
        sample = rs[a * samples_per_size:(a + 1) * samples_per_size]
        rows.append((size, float(np.mean(sample)), float(np.std(sample)), sample))
    return rows


@dataclass
class CorrelationReport:
    """Correlation cells keyed by method, then language pair.

    Each cell holds ``value`` (Pearson r or Kendall tau), ``p`` (significance
    against the baseline, or None) and ``n`` (systems or pairs), plus
    ``improved``/``degraded`` percentages at segment level.
    """

    level: str
    baseline: Optional[str] = None
    cells: Dict[str, Dict[str, dict]] = field(default_factory=dict)

    def add(self, method, lp, value, p=None, n=None, **extra):
        self.cells.setdefault(method, {})[lp] = {"value": value, "p": p, "n": n, **extra}

    @property
    def methods(self):
        return list(self.cells)

    @property
    def language_pairs(self):
        seen = []
        for row in self.cells.values():
            for lp in row:
                if lp not in seen:
                    seen.append(lp)
        return seen

    def merge(self, other: "CorrelationReport"):
        for method, row in other.cells.items():
            for lp, cell in row.items():
                self.cells.setdefault(method, {})[lp] = dict(cell)
        return self

    def to_dict(self):
        return {"level": self.level, "baseline": self.baseline, "cells": self.cells}

    @classmethod
    def from_dict(cls, d):
        return cls(d["level"], d.get("baseline"), {m: {lp: dict(c) for lp, c in row.items()}
                                                   for m, row in d.get("cells", {}).items()})


def correlate_system(metric_scores: Mapping[str, Mapping[str, float]], human: Mapping[str, float],
                     baseline: Optional[str] = None, lp: str = "all", two_sided: bool = False) -> CorrelationReport:
    """Pearson r per metric; Williams test of each metric against ``baseline``."""
    systems = sorted(human)
    report = CorrelationReport("system", baseline)
    vectors = {}
    for metric in sorted(metric_scores):
        scores = metric_scores[metric]
        missing = [s for s in systems if s not in scores]
        if missing:
            raise DataError(f"metric {metric!r} has no score for system(s): {', '.join(missing)}")
        vectors[metric] = [scores[s] for s in systems]
    if baseline is not None and baseline not in vectors:
        raise DataError(f"baseline metric {baseline!r} not among {sorted(vectors)}")
    human_vec = [human[s] for s in systems]
    r = {m: pearson(v, human_vec) for m, v in vectors.items()}
    for metric in vectors:
        p = None
        if baseline is not None and metric != baseline:
            r23 = pearson(vectors[metric], vectors[baseline])
            try:
                _, p = williams_test(r[metric], r[baseline], r23, len(systems), two_sided)
            except ValueError:
                p = None
        report.add(metric, lp, r[metric], p, len(systems))
    return report


def correlate_segment(metric_scores: Mapping[str, Mapping[Tuple[str, int], float]], pairs: Sequence[Pair],
                      baseline: Optional[str] = None, lp: str = "all", iterations: int = 1000,
                      seed: int = 0, ties: str = "discordant", threads: int = 1) -> CorrelationReport:
    """Kendall tau per metric; bootstrap p and decision flips against ``baseline``."""
    if baseline is not None and baseline not in metric_scores:
        raise DataError(f"baseline metric {baseline!r} not among {sorted(metric_scores)}")
    report = CorrelationReport("segment", baseline)
    for metric in sorted(metric_scores):
        tau = kendall_tau_rr(pairs, metric_scores[metric], ties)
        extra = {}
        p = None
        if baseline is not None and metric != baseline:
            p = bootstrap_tau_significance(metric_scores[baseline], metric_scores[metric], pairs,
                                           iterations, seed, ties, threads)
            improved, degraded = decision_flip_analysis(metric_scores[baseline], metric_scores[metric], pairs)
            extra = {"improved": improved, "degraded": degraded}
        report.add(metric, lp, tau, p, len(pairs), **extra)
    return report
