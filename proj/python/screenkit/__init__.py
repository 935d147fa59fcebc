"""Citation screening with imbalance-aware linear classifiers."""

from ._screenkit import (
    Corpus,
    DataError,
    UsageError,
    __version__,
    anova_two_factor,
    assign_stars,
    combined_scores,
    equivalence_groups,
    evaluate,
    load_corpus,
    lsu_select,
    paired_t_test,
    prevalence_group,
    ranking_auc,
    ranking_auprc,
    run_cli,
    screened_histogram,
    train,
)

__all__ = [
    "Corpus",
    "DataError",
    "UsageError",
    "__version__",
    "anova_two_factor",
    "assign_stars",
    "combined_scores",
    "equivalence_groups",
    "evaluate",
    "load_corpus",
    "lsu_select",
    "paired_t_test",
    "prevalence_group",
    "ranking_auc",
    "ranking_auprc",
    "run_cli",
    "screened_histogram",
    "train",
]
