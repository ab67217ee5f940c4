"""Python bindings for the advattrib C++ core."""

from ._advattrib import (  # noqa: F401
    AdvattribError,
    CorpusConfig,
    Document,
    GaRunResult,
    TrainedModel,
    accuracy,
    extract_unigrams,
    generate_corpus,
    generate_heldout,
    load_model,
    predict,
    run_ssga,
    stats,
    train,
)

__all__ = [
    "AdvattribError",
    "CorpusConfig",
    "Document",
    "GaRunResult",
    "TrainedModel",
    "accuracy",
    "extract_unigrams",
    "generate_corpus",
    "generate_heldout",
    "load_model",
    "predict",
    "run_ssga",
    "stats",
    "train",
]
