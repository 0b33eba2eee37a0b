"""``refcover`` command line: one executable, one subcommand per pipeline.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on data
errors (missing files, misaligned inputs, malformed records).
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bleu import BleuConfig, bleu_from_stats, corpus_bleu, corpus_stats, sentence_bleu
from .clustering import (assign_codes, kmeans, load_model, prefix_codes, read_matrix, save_model,
                         strip_codes)
from .diversity import corpus_diversity, paraphrase_sets_from_columns
from .io import (atomic_write, format_segment_scores, format_system_scores, read_lines, read_segment_scores,
                 read_system_dir, read_system_scores)
from .mining import emit_constraints, mine_constraints, select_top_half, split_protocol, write_constraints
from .reporting import emit_report_tables
from .stats import (correlate_segment, correlate_system, da_to_relative_ranking, decision_flip_analysis,
                    ngram_coverage_analysis, read_rr_pairs, subset_correlation_curve)
from .text import tokenize_v13a
from .trees import KernelConfig, ParseError, distinct_tree_stats, read_parse_file
from .validation import DataError

logger = logging.getLogger("refcover")

THREADS_ENV = "REFCOVER_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# Defaults applied after config-file values and explicit flags.
DEFAULTS = {
    "score": {"max_order": 4, "smooth": "none", "ref_length": "closest", "sentence": False},
    "diversity": {"decay": 0.5, "sigma": 0, "include_leaves": False, "ragged": False},
    "tree-stats": {"depths": "1,2,3,4,5"},
    "mine": {"order": 4, "threshold": 0.75, "split_repeats": 0},
    "cluster fit": {"k": 256, "max_iters": 300},
    "correlate": {"min_gap": 25.0, "bootstrap": 1000, "ties": "discordant", "two_sided": False, "lp": "all"},
    "analyze flips": {"min_gap": 25.0},
    "analyze coverage": {"orders": "1,2,3,4", "top": 50},
    "analyze subsets": {"samples": 10, "max_order": 4, "metric": "bleu"},
}

REQUIRED = {
    "score": ["hyp", "ref", "out"],
    "diversity": ["paraphrases", "out"],
    "tree-stats": ["parses", "out"],
    "mine": ["refs", "systems", "scores", "out"],
    "cluster fit": ["embeddings", "out"],
    "cluster assign": ["embeddings", "model", "out"],
    "cluster prefix": ["sentences", "codes", "out"],
    "cluster strip": ["input", "out"],
    "correlate": ["level", "metric_scores", "da", "out"],
    "analyze flips": ["baseline_scores", "new_scores", "out"],
    "analyze coverage": ["ref", "extra_refs", "systems", "out"],
    "analyze subsets": ["hyps", "ref", "da", "sizes", "out"],
}

# parameters naming input files (comma lists allowed); checked before dispatch
INPUT_PATHS = {"hyp", "ref", "paraphrases", "parses", "systems", "scores", "refs", "embeddings", "model",
               "sentences", "codes", "input", "metric_scores", "da", "pairs", "baseline_scores",
               "new_scores", "extra_refs", "hyps"}


@dataclass
class RunConfig:
    """Resolved parameters of one invocation (defaults < config file < flags)."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    def validate(self):
        missing = [k for k in REQUIRED.get(self.command, []) if self.params.get(k) in (None, "")]
        if missing:
            flags = ", ".join("--" + k.replace("_", "-").replace("input", "in") for k in missing)
            raise UsageError(f"{self.command}: missing required option(s) {flags}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise UsageError(f"seed must be an integer, got {self.seed!r}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise UsageError(f"threads must be a positive integer, got {self.threads!r}")
        for key in INPUT_PATHS:
            value = self.params.get(key)
            if value in (None, ""):
                continue
            for p in str(value).split(","):
                if not Path(p).exists():
                    raise DataError(f"no such file or directory: {p}")
        return self


def _split(value):
    return [v for v in str(value).split(",") if v]


def _ints(value):
    try:
        return [int(v) for v in _split(value)]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {value!r}") from None


def _write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n")


def _reference_sets(paths):
    columns = [read_lines(p) for p in _split(paths)]
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise DataError(f"reference files are not line-aligned (lengths {sorted(lengths)})")
    return [[tokenize_v13a(col[j]) for col in columns] for j in range(len(columns[0]))]


def _bleu_config(p, smoothing=None):
    return BleuConfig(max_order=int(p["max_order"]), smoothing=smoothing or p.get("smooth", "none"),
                      ref_length_policy=p.get("ref_length", "closest"))


# ---------------------------------------------------------------- commands

def cmd_score(cfg: RunConfig):
    p = cfg.params
    refs = _reference_sets(p["ref"])
    hyp_path = Path(p["hyp"])
    if hyp_path.is_dir():
        systems = {name: [tokenize_v13a(x) for x in lines] for name, lines in read_system_dir(hyp_path).items()}
    else:
        systems = {hyp_path.stem: [tokenize_v13a(x) for x in read_lines(hyp_path)]}
    report, table = {}, {}
    for name, hyps in systems.items():
        if len(hyps) != len(refs):
            raise DataError(f"{name}: {len(hyps)} hypothesis lines but {len(refs)} reference lines")
        if p["sentence"]:
            config = _bleu_config(p, "exp")
            scores = [sentence_bleu(h, r, config) for h, r in zip(hyps, refs)]
            report[name] = {"segments": [s.to_dict() for s in scores],
                            "mean": 100 * float(np.mean([s.score for s in scores]))}
            for j, s in enumerate(scores, 1):
                table[(name, j)] = 100 * s.score
        else:
            result = corpus_bleu(hyps, refs, _bleu_config(p))
            report[name] = result.to_dict()
            table[name] = 100 * result.score
    out = report[next(iter(report))] if not hyp_path.is_dir() else {"systems": report}
    out["config"] = {"max_order": p["max_order"], "smooth": "exp" if p["sentence"] else p["smooth"],
                     "ref_length": p["ref_length"], "references": len(refs[0]) if refs else 0,
                     "tokenize": "13a"}
    _write_json(p["out"], out)
    if p.get("scores_out"):
        text = format_segment_scores(table) if p["sentence"] else format_system_scores(table)
        atomic_write(p["scores_out"], text)


def cmd_diversity(cfg: RunConfig):
    p = cfg.params
    columns = [read_lines(f) for f in _split(p["paraphrases"])]
    parse_columns = None
    tree_cfg = None
    if p.get("parses"):
        parse_columns = [read_parse_file(f) for f in _split(p["parses"])]
        tree_cfg = KernelConfig(float(p["decay"]), int(p["sigma"]), bool(p["include_leaves"]))
    sets = paraphrase_sets_from_columns(columns, parse_columns)
    report = corpus_diversity(sets, tree_cfg, ragged=bool(p["ragged"]))
    _write_json(p["out"], report.to_dict())


def cmd_tree_stats(cfg: RunConfig):
    p = cfg.params
    depths = []
    for d in _split(p["depths"]):
        depths.append(None if d in ("inf", "all") else int(d))
    rows = distinct_tree_stats(read_parse_file(p["parses"]), depths)
    lines = ["depth\tno_leaves\ttype_token\twith_leaves\n"]
    for d, plain, leaves, ratio in rows:
        lines.append(f"{'inf' if d is None else d}\t{plain}\t{ratio:.6f}\t{leaves}\n")
    atomic_write(p["out"], "".join(lines))


def cmd_mine(cfg: RunConfig):
    p = cfg.params
    refs = _reference_sets(p["refs"])
    systems = {n: [tokenize_v13a(x) for x in lines] for n, lines in read_system_dir(p["systems"]).items()}
    human = read_system_scores(p["scores"])
    orders = tuple(_ints(p["order"]))
    threshold = float(p["threshold"])
    repeats = int(p["split_repeats"])
    if not repeats:
        emit_constraints(refs, systems, human, p["out"], orders, threshold)
        return
    out = Path(p["out"])
    splits = split_protocol(sorted(systems), repeats, cfg.seed)
    manifest = []
    for i, (mining, evaluation) in enumerate(splits):
        voters = select_top_half(human, mining)
        sets = mine_constraints(refs, [systems[v] for v in voters], orders, threshold)
        path = out.with_name(f"{out.stem}.split{i}{out.suffix}")
        write_constraints(sets, path)
        manifest.append({"split": i, "mining": mining, "evaluation": evaluation, "voters": voters,
                         "constraints": path.name})
    _write_json(out.with_name(f"{out.stem}.splits.json"), {"seed": cfg.seed, "splits": manifest})


def cmd_cluster_fit(cfg: RunConfig):
    p = cfg.params
    model = kmeans(read_matrix(p["embeddings"]), int(p["k"]), int(p["max_iters"]), cfg.seed, cfg.threads)
    save_model(model, p["out"])


def cmd_cluster_assign(cfg: RunConfig):
    p = cfg.params
    codes = assign_codes(read_matrix(p["embeddings"]), load_model(p["model"]), cfg.threads)
    atomic_write(p["out"], "".join(f"{int(c)}\n" for c in codes))


def cmd_cluster_prefix(cfg: RunConfig):
    p = cfg.params
    try:
        codes = [int(c) for c in read_lines(p["codes"])]
    except ValueError:
        raise DataError(f"{p['codes']}: codes must be integers, one per line") from None
    k = int(p["k"]) if p.get("k") is not None else None
    atomic_write(p["out"], "".join(line + "\n" for line in prefix_codes(read_lines(p["sentences"]), codes, k)))


def cmd_cluster_strip(cfg: RunConfig):
    p = cfg.params
    lines, codes = strip_codes(read_lines(p["input"]))
    atomic_write(p["out"], "".join(line + "\n" for line in lines))
    if p.get("codes_out"):
        atomic_write(p["codes_out"], "".join(("" if c is None else str(c)) + "\n" for c in codes))


def _metric_dir(directory, level):
    files = sorted(Path(directory).glob("*.tsv"))
    if not files:
        raise DataError(f"no <metric>.tsv files in {directory}")
    reader = read_system_scores if level == "system" else read_segment_scores
    return {f.stem: reader(f) for f in files}


def _pairs(p):
    if not p.get("pairs") and not p.get("da"):
        raise UsageError("relative-ranking pairs need --da or --pairs")
    if p.get("pairs"):
        lp = p.get("lp")
        return read_rr_pairs(p["pairs"], None if lp in (None, "all") else lp)
    return da_to_relative_ranking(read_segment_scores(p["da"]), float(p["min_gap"]))


def cmd_correlate(cfg: RunConfig):
    p = cfg.params
    level = p["level"]
    if level not in ("system", "segment"):
        raise UsageError(f"--level must be 'system' or 'segment', got {level!r}")
    metrics = _metric_dir(p["metric_scores"], level)
    if level == "system":
        report = correlate_system(metrics, read_system_scores(p["da"]), p.get("baseline"), p["lp"],
                                  bool(p["two_sided"]))
    else:
        report = correlate_segment(metrics, _pairs(p), p.get("baseline"), p["lp"], int(p["bootstrap"]),
                                   cfg.seed, p["ties"], cfg.threads)
    out = Path(p["out"])
    atomic_write(out, emit_report_tables(report, "json"))
    atomic_write(out.with_suffix(".tsv"), emit_report_tables(report, "tsv"))
    atomic_write(out.with_suffix(".md"), emit_report_tables(report, "markdown"))


def cmd_analyze_flips(cfg: RunConfig):
    p = cfg.params
    pairs = _pairs(p)
    base = read_segment_scores(p["baseline_scores"])
    new = read_segment_scores(p["new_scores"])
    improved, degraded = decision_flip_analysis(base, new, pairs)
    _write_json(p["out"], {"pairs": len(pairs), "improved_pct": improved, "degraded_pct": degraded})


def cmd_analyze_coverage(cfg: RunConfig):
    p = cfg.params
    refs = _reference_sets(p["ref"])
    extra = _reference_sets(p["extra_refs"])
    systems = {n: [tokenize_v13a(x) for x in lines] for n, lines in read_system_dir(p["systems"]).items()}
    newly, missing = ngram_coverage_analysis(refs, extra, systems, _ints(p["orders"]))
    top = int(p["top"])

    def rows(table):
        return [{"ngram": " ".join(g), "order": len(g), "count": c} for g, c in table[:top]]

    _write_json(p["out"], {"newly_matched": rows(newly), "missing": rows(missing),
                           "totals": {"newly_matched": sum(c for _, c in newly),
                                      "missing": sum(c for _, c in missing)}})


def cmd_analyze_subsets(cfg: RunConfig):
    p = cfg.params
    refs = _reference_sets(p["ref"])
    systems = {n: [tokenize_v13a(x) for x in lines] for n, lines in read_system_dir(p["hyps"]).items()}
    human = read_system_scores(p["da"])
    config = BleuConfig(max_order=int(p["max_order"]))
    if p["metric"] == "bleu":
        stats = {s: corpus_stats(systems[s], refs, config) for s in human if s in systems}

        def aggregate(rows):
            return bleu_from_stats(rows.sum(axis=0), config).score
    elif p["metric"] == "sentbleu":
        sconf = BleuConfig(max_order=int(p["max_order"]), smoothing="exp")
        stats = {s: np.array([sentence_bleu(h, r, sconf).score for h, r in zip(systems[s], refs)])
                 for s in human if s in systems}
        aggregate = None
    else:
        raise UsageError(f"--metric must be 'bleu' or 'sentbleu', got {p['metric']!r}")
    kwargs = {"aggregate": aggregate} if aggregate else {}
    rows = subset_correlation_curve(stats, human, _ints(p["sizes"]), int(p["samples"]), cfg.seed,
                                    threads=cfg.threads, **kwargs)
    lines = ["size\tmean_r\tstd_r\tsamples\n"]
    lines += [f"{size}\t{mean!r}\t{std!r}\t{','.join(repr(r) for r in rs)}\n" for size, mean, std, rs in rows]
    atomic_write(p["out"], "".join(lines))


COMMANDS = {
    "score": cmd_score,
    "diversity": cmd_diversity,
    "tree-stats": cmd_tree_stats,
    "mine": cmd_mine,
    "cluster fit": cmd_cluster_fit,
    "cluster assign": cmd_cluster_assign,
    "cluster prefix": cmd_cluster_prefix,
    "cluster strip": cmd_cluster_strip,
    "correlate": cmd_correlate,
    "analyze flips": cmd_analyze_flips,
    "analyze coverage": cmd_analyze_coverage,
    "analyze subsets": cmd_analyze_subsets,
}


# ---------------------------------------------------------------- parsing

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None, help=f"worker cap (else ${THREADS_ENV}, else 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="refcover", description="Multi-reference MT evaluation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("score", parents=[common], help="corpus or sentence BLEU")
    sp.add_argument("--hyp", help="hypothesis file, or a directory of <system>.txt files")
    sp.add_argument("--ref", help="reference file(s), comma-separated and line-aligned")
    sp.add_argument("--sentence", action="store_true", default=None, help="sentence-level BLEU (exp smoothing)")
    sp.add_argument("--max-order", type=int)
    sp.add_argument("--smooth", choices=["none", "exp"])
    sp.add_argument("--ref-length", choices=["closest", "shortest"])
    sp.add_argument("--out")
    sp.add_argument("--scores-out", help="also write a metric-score TSV for `correlate`")

    sp = sub.add_parser("diversity", parents=[common], help="DS_BOW / DS_tree of paraphrase sets")
    sp.add_argument("--paraphrases")
    sp.add_argument("--parses")
    sp.add_argument("--decay", type=float)
    sp.add_argument("--sigma", type=int, choices=[0, 1])
    sp.add_argument("--include-leaves", action="store_true", default=None)
    sp.add_argument("--ragged", action="store_true", default=None)
    sp.add_argument("--out")

    sp = sub.add_parser("tree-stats", parents=[common], help="distinct pruned trees per depth")
    sp.add_argument("--parses")
    sp.add_argument("--depths")
    sp.add_argument("--out")

    sp = sub.add_parser("mine", parents=[common], help="unrewarded n-gram constraints")
    sp.add_argument("--refs")
    sp.add_argument("--systems")
    sp.add_argument("--scores")
    sp.add_argument("--order", help="n-gram order (comma list mines the orders jointly)")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--split-repeats", type=int, help="run the random system-split protocol this many times")
    sp.add_argument("--out")

    cp = sub.add_parser("cluster", help="k-means cluster codes")
    csub = cp.add_subparsers(dest="subcommand", parser_class=_Parser)
    sp = csub.add_parser("fit", parents=[common])
    sp.add_argument("--embeddings")
    sp.add_argument("--k", type=int)
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--out")
    sp = csub.add_parser("assign", parents=[common])
    sp.add_argument("--embeddings")
    sp.add_argument("--model")
    sp.add_argument("--out")
    sp = csub.add_parser("prefix", parents=[common])
    sp.add_argument("--sentences")
    sp.add_argument("--codes")
    sp.add_argument("--k", type=int)
    sp.add_argument("--out")
    sp = csub.add_parser("strip", parents=[common])
    sp.add_argument("--in", dest="input")
    sp.add_argument("--out")
    sp.add_argument("--codes-out")

    sp = sub.add_parser("correlate", parents=[common], help="correlation with human judgments")
    sp.add_argument("--level", choices=["system", "segment"])
    sp.add_argument("--metric-scores", help="directory of <metric>.tsv files")
    sp.add_argument("--da", help="human DA scores (system or segment TSV)")
    sp.add_argument("--pairs", help="precomputed relative-ranking pairs (segment level)")
    sp.add_argument("--baseline")
    sp.add_argument("--lp", help="language-pair label for the report column")
    sp.add_argument("--min-gap", type=float)
    sp.add_argument("--bootstrap", type=int)
    sp.add_argument("--ties", choices=["discordant", "excluded"])
    sp.add_argument("--two-sided", action="store_true", default=None)
    sp.add_argument("--out")

    ap = sub.add_parser("analyze", help="decision flips, n-gram coverage, subset curves")
    asub = ap.add_subparsers(dest="subcommand", parser_class=_Parser)
    sp = asub.add_parser("flips", parents=[common])
    sp.add_argument("--baseline-scores")
    sp.add_argument("--new-scores")
    sp.add_argument("--da")
    sp.add_argument("--pairs")
    sp.add_argument("--min-gap", type=float)
    sp.add_argument("--out")
    sp = asub.add_parser("coverage", parents=[common])
    sp.add_argument("--ref")
    sp.add_argument("--extra-refs")
    sp.add_argument("--systems")
    sp.add_argument("--orders")
    sp.add_argument("--top", type=int)
    sp.add_argument("--out")
    sp = asub.add_parser("subsets", parents=[common])
    sp.add_argument("--hyps")
    sp.add_argument("--ref")
    sp.add_argument("--da")
    sp.add_argument("--sizes")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--metric", choices=["bleu", "sentbleu"])
    sp.add_argument("--max-order", type=int)
    sp.add_argument("--out")
    return parser


_META = {"command", "subcommand", "config", "seed", "threads", "verbose"}


def resolve_config(args) -> RunConfig:
    command = args.command + (f" {args.subcommand}" if getattr(args, "subcommand", None) else "")
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"no such config file: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError(f"config {args.config}: top level must be an object")
    block = file_cfg.get(command, {})
    params = dict(DEFAULTS.get(command, {}))
    params.update({k.replace("-", "_"): v for k, v in block.items()})
    for key, value in vars(args).items():
        if key not in _META and value is not None:
            params[key] = value
    seed = args.seed if args.seed is not None else block.get("seed", file_cfg.get("seed", 0))
    if args.threads is not None:
        threads = args.threads
    elif os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            raise UsageError(f"${THREADS_ENV} must be an integer") from None
    else:
        threads = file_cfg.get("threads", 1)
    return RunConfig(command, params, seed, threads)


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    if args.command in ("cluster", "analyze") and not getattr(args, "subcommand", None):
        print(f"refcover {args.command}: a subcommand is required", file=sys.stderr)
        return 1
    _setup_logging(getattr(args, "verbose", False))
    try:
        cfg = resolve_config(args).validate()
        logger.info("running %s", cfg.command)
        COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        logger.error("%s", exc)
        return 1
    except (DataError, ParseError, OSError, UnicodeDecodeError) as exc:
        logger.error("%s", exc)
        return 2
    except ValueError as exc:
        logger.error("invalid parameter: %s", exc)
        return 1
    logger.info("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
