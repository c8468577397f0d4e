"""Noise estimation for paired two-modality embeddings.

Scores each (video, caption)-style pair by the density of its joint
neighborhood, weights a margin ranking loss with the scores, and evaluates
the matching probabilistic error bound on synthetic mixture data.
"""

from ._mmde import (
    DataError,
    NumericError,
    UsageError,
    cosine_sim,
    evaluate,
    folded_mgf,
    generate_scalar_pairs,
    hard_threshold,
    log_folded_mgf,
    neg_abs_sim,
    normalize_phat,
    optimal_bound,
    retrieval_eval,
    run_cli,
    score_pipeline,
    simulate_toy,
    soft_rank_loss,
    sweep_bound,
    train_toy,
)

__all__ = [
    "DataError",
    "NumericError",
    "UsageError",
    "cosine_sim",
    "evaluate",
    "folded_mgf",
    "generate_scalar_pairs",
    "hard_threshold",
    "log_folded_mgf",
    "neg_abs_sim",
    "normalize_phat",
    "optimal_bound",
    "retrieval_eval",
    "run_cli",
    "score_pipeline",
    "simulate_toy",
    "soft_rank_loss",
    "sweep_bound",
    "train_toy",
]

__version__ = "0.1.0"
