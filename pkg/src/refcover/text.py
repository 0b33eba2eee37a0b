"""Tokenization and n-gram counting shared by every scorer in the package.

The tokenizer reproduces the ``13a`` tokenization of the WMT ``mteval-v13a``
script (as implemented by sacreBLEU), which is what BLEU scores are
conventionally computed on.
"""

import re
from collections import Counter
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

Segment = Tuple[str, ...]
NGram = Tuple[str, ...]

_ENTITIES = (("&quot;", '"'), ("&amp;", "&"), ("&lt;", "<"), ("&gt;", ">"))

_V13A_RULES = (
    # punctuation and symbols: {-~ [-` space-& (-+ :-@ /
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    # period and comma unless preceded by a digit
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    # period and comma unless followed by a digit
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    # dash when preceded by a digit
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
)


@lru_cache(maxsize=2**16)
def _tokenize_line(line: str) -> Segment:
    line = line.replace("<skipped>", "")
    line = line.replace("-\n", "")
    line = line.replace("\n", " ")
    if "&" in line:
        for entity, char in _ENTITIES:
            line = line.replace(entity, char)
    line = f" {line} "
    for pattern, repl in _V13A_RULES:
        line = pattern.sub(repl, line)
    return tuple(line.split())


def tokenize_v13a(raw: str) -> Segment:
    """Tokenize one segment with the WMT ``13a`` rules.

    >>> tokenize_v13a("Hello, world!")
    ('Hello', ',', 'world', '!')
    """
    return _tokenize_line(raw)


def extract_ngrams(seg: Sequence[str], max_order: int = 4, min_order: int = 1) -> Counter:
    """Count every contiguous n-gram of ``seg`` for ``min_order <= n <= max_order``.

    Keys are token tuples, so the order of an n-gram is ``len(key)``.
    """
    if max_order < 1 or min_order < 1:
        raise ValueError(f"n-gram orders must be >= 1, got {min_order}..{max_order}")
    seg = tuple(seg)
    counts = Counter()
    for n in range(min_order, max_order + 1):
        for i in range(len(seg) - n + 1):
            counts[seg[i:i + n]] += 1
    return counts


def ngrams_of_order(seg: Sequence[str], n: int) -> set:
    """Set of distinct n-grams of exactly order ``n``."""
    seg = tuple(seg)
    return {seg[i:i + n] for i in range(len(seg) - n + 1)}


def max_reference_counts(refs: Iterable[Counter]) -> Counter:
    """Per n-gram maximum count over a set of reference multisets."""
    merged = Counter()
    for ref in refs:
        for ngram, count in ref.items():
            if count > merged[ngram]:
                merged[ngram] = count
    return merged


def clip_counts(hyp: Counter, refs: Sequence[Counter]) -> Counter:
    """Clip hypothesis n-gram counts by their maximum count in any one reference."""
    if len(refs) == 0:
        raise ValueError("clip_counts needs at least one reference")
    ceiling = max_reference_counts(refs)
    clipped = Counter()
    for ngram, count in hyp.items():
        c = min(count, ceiling.get(ngram, 0))
        if c:
            clipped[ngram] = c
    return clipped


def order_totals(counts: Counter, max_order: int) -> list:
    """Sum of counts at each order 1..max_order."""
    totals = [0] * max_order
    for ngram, count in counts.items():
        totals[len(ngram) - 1] += count
    return totals


def read_segments(path, tokenize: bool = True) -> list:
    """Read a one-segment-per-line UTF-8 file, optionally tokenizing each line."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not tokenize:
        return lines
    return [tokenize_v13a(line) for line in lines]
