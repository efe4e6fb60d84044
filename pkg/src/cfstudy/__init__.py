"""Counterfactual-feedback study platform.

Synthetic growth data and tree models, counterfactual suggestions, the
twelve-trial feeding game, an HTTP study service with an append-only event
log, simulated participant cohorts, and the quality/statistics pipeline.
"""

__version__ = "0.1.0"

from .cfe import CfeConfig, Counterfactual, brute_force_cfe, compute_cfe
from .datagen import (
    Dataset,
    full_grid,
    generate_grid,
    growth_truth,
    read_csv,
    smote_balance,
    train_test_split,
    write_csv,
)
from .game import Condition, GameConfig, Phase, Session, create_session
from .stats import (
    LmmFit,
    QualityFlags,
    SessionData,
    TestResult,
    fit_lmm_random_intercept,
    mann_whitney_u,
    match_score,
    per_trial_summary,
    quality_flags,
    welch_t,
)
from .tree import GrowthModel, evaluate, fit_tree, load_model, predict, save_model

__all__ = [
    "__version__",
    "CfeConfig",
    "Counterfactual",
    "brute_force_cfe",
    "compute_cfe",
    "Dataset",
    "full_grid",
    "generate_grid",
    "growth_truth",
    "read_csv",
    "smote_balance",
    "train_test_split",
    "write_csv",
    "Condition",
    "GameConfig",
    "Phase",
    "Session",
    "create_session",
    "LmmFit",
    "QualityFlags",
    "SessionData",
    "TestResult",
    "fit_lmm_random_intercept",
    "mann_whitney_u",
    "match_score",
    "per_trial_summary",
    "quality_flags",
    "welch_t",
    "GrowthModel",
    "evaluate",
    "fit_tree",
    "load_model",
    "predict",
    "save_model",
]
