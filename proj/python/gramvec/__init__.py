"""Collocation-aware masked language modeling toolkit.

The package mines statistically associated n-grams from a corpus, corrupts
whole collocations for span-level masked-LM training, trains a small
transformer encoder on that objective, and evaluates the resulting vectors
on analogy, retrieval, and embedding-geometry tasks.  All behavior lives in
the C++ core; this package is a thin binding over it.
"""

from ._core import (
    GramvecError,
    Model,
    NgramVocab,
    SearchIndex,
    WordVectors,
    build_analogy_questions,
    build_ngram_vocab,
    cosine,
    evaluate_analogy,
    evaluate_faq,
    mask_instances,
    pair_differences,
    pca,
    rank_by_embedding,
    score_ngram,
    solve_analogy,
    split_documents,
    tokenize,
    two_stage_retrieve,
)

__all__ = [
    "GramvecError",
    "Model",
    "NgramVocab",
    "SearchIndex",
    "WordVectors",
    "build_analogy_questions",
    "build_ngram_vocab",
    "cosine",
    "evaluate_analogy",
    "evaluate_faq",
    "mask_instances",
    "pair_differences",
    "pca",
    "rank_by_embedding",
    "score_ngram",
    "solve_analogy",
    "split_documents",
    "tokenize",
    "two_stage_retrieve",
]
