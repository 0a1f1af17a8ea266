"""Hashtag embedding, t-SNE projection and nearest-neighbor search."""

from ._core import (
    Atlas,
    HashvizError,
    Model,
    Vocabulary,
    build_atlas,
    build_vocab,
    calibrate_affinities,
    cosine,
    extract_hashtags,
    fnv1a_32,
    ingest,
    load_atlas,
    load_model,
    normalize,
    normalize_query,
    pca_reduce,
    run_tsne,
    subword_ngrams,
    train,
)

__all__ = [
    "Atlas",
    "HashvizError",
    "Model",
    "Vocabulary",
    "build_atlas",
    "build_vocab",
    "calibrate_affinities",
    "cosine",
    "extract_hashtags",
    "fnv1a_32",
    "ingest",
    "load_atlas",
    "load_model",
    "normalize",
    "normalize_query",
    "pca_reduce",
    "run_tsne",
    "subword_ngrams",
    "train",
]
