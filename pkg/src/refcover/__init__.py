"""Multi-reference MT evaluation: BLEU, paraphrase diversity, constraint
mining, cluster codes and correlation with human judgments."""

__version__ = "0.1.0"

from .bleu import BleuConfig, BleuScore, BleuScorer, corpus_bleu, sentence_bleu
from .clustering import KMeansCoder, kmeans
from .diversity import DiversityScorer, corpus_diversity, diversity_score
from .mining import ConstraintMiner, find_unrewarded_ngrams, filter_subsequences
from .stats import CorrelationReport, kendall_tau_rr, pearson, williams_test
from .text import tokenize_v13a
from .trees import KernelConfig, ParseTree, parse_ptb, tree_kernel
from .validation import DataError

__all__ = [
    "BleuConfig", "BleuScore", "BleuScorer", "ConstraintMiner", "CorrelationReport", "DataError",
    "DiversityScorer", "KMeansCoder", "KernelConfig", "ParseTree", "corpus_bleu", "corpus_diversity",
    "diversity_score", "filter_subsequences", "find_unrewarded_ngrams", "kendall_tau_rr", "kmeans",
    "parse_ptb", "pearson", "sentence_bleu", "tokenize_v13a", "tree_kernel", "williams_test",
]
