"""Input validation helpers used by the estimators and the CLI."""

import numbers

import numpy as np


class DataError(ValueError):
    """Raised when input data is malformed, misaligned or incomplete."""


def check_segments(segments, name="segments"):
    """Coerce a list of token sequences (or raw strings) to a list of token tuples."""
    from .text import tokenize_v13a

    out = []
    for i, seg in enumerate(segments):
        if isinstance(seg, str):
            out.append(tokenize_v13a(seg))
        else:
            seg = tuple(seg)
            if not all(isinstance(tok, str) for tok in seg):
                raise DataError(f"{name}[{i}] contains non-string tokens")
            out.append(seg)
    return out


def check_reference_sets(refs, n_segments=None):
    """Normalize references to one tuple of token sequences per segment.

    Each entry of ``refs`` is either a single reference (a raw string or a
    tuple of token strings) or a list (or tuple) of references for that segment.
    """
    out = []
    for i, ref_set in enumerate(refs):
        if isinstance(ref_set, str) or (isinstance(ref_set, tuple) and all(isinstance(t, str) for t in ref_set)):
            ref_set = [ref_set]
        ref_set = check_segments(ref_set, name=f"refs[{i}]")
        if not ref_set:
            raise DataError(f"segment {i} has no reference")
        out.append(tuple(ref_set))
    if n_segments is not None and len(out) != n_segments:
        raise DataError(f"{n_segments} hypotheses but {len(out)} reference sets")
    return out


def check_aligned(*columns, names=None):
    """Raise DataError unless all columns have the same length."""
    lengths = [len(c) for c in columns]
    if len(set(lengths)) > 1:
        names = names or [f"input{i}" for i in range(len(columns))]
        detail = ", ".join(f"{n}={l}" for n, l in zip(names, lengths))
        raise DataError(f"inputs are not line-aligned ({detail})")
    return lengths[0] if lengths else 0


def check_embeddings(X, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains non-finite values")
    return X


def check_seed(seed):
    if not isinstance(seed, numbers.Integral) or isinstance(seed, bool):
        raise ValueError(f"seed must be an explicit integer, got {seed!r}")
    return int(seed)


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
