"""Python access to the forge ensemble harness."""

from ._core import (
    ForgeError,
    class_weights,
    collapse_elongation,
    confusion,
    format_predictions,
    generate_synthetic,
    hard_vote,
    macro_scores,
    max_value,
    normalize,
    parse_predictions,
    run_cli,
    segment_hashtag,
    soft_vote,
    stack_features,
    stratified_split,
)

CLASS_NAMES = ("hateful", "offensive", "neither")

__all__ = [
    "CLASS_NAMES",
    "ForgeError",
    "class_weights",
    "collapse_elongation",
    "confusion",
    "format_predictions",
    "generate_synthetic",
    "hard_vote",
    "macro_scores",
    "max_value",
    "normalize",
    "parse_predictions",
    "run_cli",
    "segment_hashtag",
    "soft_vote",
    "stack_features",
    "stratified_split",
]
