"""Constituency trees: PTB bracket reading, depth pruning, distinct-shape
statistics and the subset-tree kernel.
"""

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple


class ParseError(ValueError):
    """Malformed bracketed tree. ``offset`` is the character position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: Tuple["ParseTree", ...] = ()
    is_lexical_leaf: bool = False

    def __post_init__(self):
        if not self.label:
            raise ValueError("tree nodes need a non-empty label")
        if self.is_lexical_leaf and self.children:
            raise ValueError("a lexical leaf cannot have children")

    def __str__(self):
        return serialize(self)

    @property
    def height(self):
        """Number of levels; a single node has height 1."""
        h, stack = 0, [(self, 1)]
        while stack:
            node, d = stack.pop()
            h = max(h, d)
            stack.extend((c, d + 1) for c in node.children)
        return h

    def nodes(self):
        """All nodes in post-order (children before parents)."""
        out, stack = [], [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                out.append(node)
            else:
                stack.append((node, True))
                stack.extend((c, False) for c in reversed(node.children))
        return out

    def leaves(self):
        return [n.label for n in self.nodes() if n.is_lexical_leaf]


@dataclass(frozen=True)
class KernelConfig:
    decay: float = 0.5
    sigma: int = 0
    include_leaves: bool = False

    def __post_init__(self):
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        if self.sigma not in (0, 1):
            raise ValueError(f"sigma must be 0 or 1, got {self.sigma}")


_DELIMS = "() \t\n\r"


def parse_ptb(text: str, strip_empty_root: bool = False) -> ParseTree:
    """Read one bracketed tree such as ``(S (NP (DT the) (NN cat)) (VP (VBD sat)))``.

    Bare atoms in child position become lexical leaves. With
    ``strip_empty_root`` the unlabeled wrapper that treebank files and the
    Berkeley parser emit, ``( (S ...) )``, is removed.
    """
    n = len(text)
    pos = 0

    def skip_ws(p):
        while p < n and text[p] in " \t\n\r":
            p += 1
        return p

    def read_atom(p):
        start = p
        while p < n and text[p] not in _DELIMS:
            p += 1
        return text[start:p], p

    pos = skip_ws(pos)
    if pos >= n:
        raise ParseError("empty input", pos)
    if text[pos] != "(":
        raise ParseError("expected '('", pos)

    # stack of [label, children, open_offset]
    stack = []
    root = None
    while True:
        pos = skip_ws(pos)
        if pos >= n:
            if stack:
                raise ParseError("unbalanced parentheses", pos)
            break
        ch = text[pos]
        if root is not None:
            raise ParseError("trailing characters after tree", pos)
        if ch == "(":
            open_at = pos
            pos = skip_ws(pos + 1)
            label, pos = read_atom(pos)
            if not label:
                if not (strip_empty_root and not stack):
                    raise ParseError("empty label", pos)
                label = None
            stack.append([label, [], open_at])
        elif ch == ")":
            if not stack:
                raise ParseError("unmatched ')'", pos)
            label, children, open_at = stack.pop()
            pos += 1
            if label is None:
                if len(children) != 1 or children[0].is_lexical_leaf:
                    raise ParseError("unlabeled root must wrap exactly one tree", open_at)
                node = children[0]
            else:
                node = ParseTree(label, tuple(children))
            if stack:
                stack[-1][1].append(node)
            else:
                root = node
        else:
            if not stack:
                raise ParseError("atom outside brackets", pos)
            atom, pos = read_atom(pos)
            stack[-1][1].append(ParseTree(atom, (), True))
    return root


def read_parse_file(path) -> list:
    """One bracketed tree per line; the unlabeled outer bracket is tolerated."""
    trees = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                trees.append(parse_ptb(line, strip_empty_root=True))
            except ParseError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.args[0].rsplit(' at offset', 1)[0]}", exc.offset) from None
    return trees


def serialize(tree: ParseTree) -> str:
    """Minimal single-space bracketed form; lexical leaves are bare atoms."""
    tokens = []
    stack = [tree]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            tokens.append(item)
        elif item.is_lexical_leaf:
            tokens.append(item.label)
        else:
            tokens.append("(" + item.label)
            stack.append(")")
            stack.extend(reversed(item.children))
    out = [tokens[0]]
    for tok in tokens[1:]:
        out.append(tok if tok == ")" else " " + tok)
    return "".join(out)


def strip_leaves(tree: ParseTree) -> ParseTree:
    """Drop all lexical leaves (pre-terminals become childless nodes)."""
    if tree.is_lexical_leaf:
        raise ValueError("cannot strip a tree that is itself a single word")
    return _rebuild(tree, lambda node, depth: not node.is_lexical_leaf, 1)


def prune_depth(tree: ParseTree, d: Optional[int], keep_leaves: bool = False) -> ParseTree:
    """Remove every node deeper than ``d`` (root has depth 1). ``None`` keeps all levels."""
    if d is not None and d < 1:
        raise ValueError(f"depth must be >= 1, got {d}")
    if d is None:
        keep = (lambda node, depth: True) if keep_leaves else (lambda node, depth: not node.is_lexical_leaf)
    elif keep_leaves:
        keep = lambda node, depth: depth <= d  # noqa: E731
    else:
        keep = lambda node, depth: depth <= d and not node.is_lexical_leaf  # noqa: E731
    return _rebuild(tree, keep, 1)


def _rebuild(node, keep, depth):
    kids = tuple(_rebuild(c, keep, depth + 1) for c in node.children if keep(c, depth + 1))
    if len(kids) == len(node.children) and all(a is b for a, b in zip(kids, node.children)):
        return node
    return ParseTree(node.label, kids, node.is_lexical_leaf)


def _digest(s: str) -> bytes:
    return hashlib.blake2b(s.encode("utf-8"), digest_size=16).digest()


def distinct_tree_stats(trees: Iterable[ParseTree], depths: Sequence[Optional[int]]):
    """Count distinct pruned-tree shapes per depth, with and without leaves.

    Returns rows ``(depth, count_no_leaves, count_with_leaves, type_token_ratio)``
    where the ratio is distinct leafless shapes over trees seen. Shapes are
    deduplicated through a 128-bit digest of their canonical serialization so
    memory stays bounded on large treebanks.
    """
    depths = list(depths)
    seen_plain = [set() for _ in depths]
    seen_leaves = [set() for _ in depths]
    total = 0
    for tree in trees:
        total += 1
        for i, d in enumerate(depths):
            seen_plain[i].add(_digest(serialize(prune_depth(tree, d, keep_leaves=False))))
            seen_leaves[i].add(_digest(serialize(prune_depth(tree, d, keep_leaves=True))))
    return [
        (d, len(seen_plain[i]), len(seen_leaves[i]), len(seen_plain[i]) / total if total else 0.0)
        for i, d in enumerate(depths)
    ]


def _production(node):
    if not node.children:
        return (node.label, node.is_lexical_leaf)
    return (node.label, tuple((c.label, c.is_lexical_leaf) for c in node.children))


def tree_kernel(t1: ParseTree, t2: ParseTree, cfg: KernelConfig = KernelConfig()) -> float:
    """Sum of the decayed fragment-match recursion over all node pairs.

    Nodes with equal productions match; a childless pair contributes the decay,
    an internal pair ``decay * prod_j(sigma + match(child_j, child_j'))``.
    """
    if not cfg.include_leaves:
        t1, t2 = strip_leaves(t1), strip_leaves(t2)
    lam, sigma = cfg.decay, cfg.sigma

    by_prod = defaultdict(list)
    for node in t2.nodes():
        by_prod[_production(node)].append(node)

    memo = {}

    def delta(a, b):
        key = (id(a), id(b))
        if key in memo:
            return memo[key]
        if not a.children:
            value = lam
        else:
            value = lam
            for ca, cb in zip(a.children, b.children):
                if _production(ca) != _production(cb):
                    value *= sigma
                else:
                    value *= sigma + delta(ca, cb)
                if value == 0:
                    break
        memo[key] = value
        return value

    total = 0.0
    for a in t1.nodes():
        for b in by_prod.get(_production(a), ()):
            total += delta(a, b)
    return total


def normalized_tree_similarity(t1: ParseTree, t2: ParseTree, cfg: KernelConfig = KernelConfig()) -> float:
    k11 = tree_kernel(t1, t1, cfg)
    k22 = tree_kernel(t2, t2, cfg)
    if k11 <= 0 or k22 <= 0:
        raise ValueError("tree has zero self-kernel; cannot normalize")
    if t1 == t2:
        return 1.0
    return min(1.0, tree_kernel(t1, t2, cfg) / math.sqrt(k11 * k22))
