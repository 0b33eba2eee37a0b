"""File helpers: atomic writes, TSV score tables, system output directories."""

import os
import tempfile
from pathlib import Path

from .validation import DataError


def atomic_write(path, data, mode="w"):
    """Write ``data`` to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    binary = "b" in mode
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.rstrip("\n").rstrip("\r") for line in fh]
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None


def read_system_scores(path):
    """``system<TAB>score`` lines -> {system: float}."""
    scores = {}
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected 'system<TAB>score'")
        scores[parts[0]] = _float(parts[1], path, lineno)
    return scores


def read_segment_scores(path):
    """``system<TAB>segment_id<TAB>score`` lines -> {(system, segment): float}.

    A system/segment pair may appear several times (multiple human
    judgments); the scores are averaged.
    """
    sums, counts = {}, {}
    for lineno, line in enumerate(read_lines(path), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 'system<TAB>segment<TAB>score'")
        try:
            key = (parts[0], int(parts[1]))
        except ValueError:
            raise DataError(f"{path}:{lineno}: segment id must be an integer") from None
        sums[key] = sums.get(key, 0.0) + _float(parts[2], path, lineno)
        counts[key] = counts.get(key, 0) + 1
    return {k: sums[k] / counts[k] for k in sums}


def _float(text, path, lineno):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: not a number: {text!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise DataError(f"{path}:{lineno}: non-finite score")
    return value


def format_system_scores(scores):
    return "".join(f"{name}\t{value!r}\n" for name, value in sorted(scores.items()))


def format_segment_scores(scores):
    return "".join(f"{s}\t{seg}\t{value!r}\n" for (s, seg), value in sorted(scores.items()))


def read_system_dir(directory, suffix=".txt"):
    """``<system>.txt`` files in ``directory`` -> {system: [raw lines]}."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"no such directory: {directory}")
    systems = {p.name[: -len(suffix)]: read_lines(p) for p in sorted(directory.glob(f"*{suffix}"))}
    if not systems:
        raise DataError(f"no *{suffix} system outputs in {directory}")
    return systems
