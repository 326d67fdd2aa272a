"""Python access to the hydra data quality monitoring core.

Functions return plain dicts and lists in the same shapes as the HTTP API.
Errors raise HydraError with args (error class name, message).
"""

from ._hydra import (
    Catalog,
    Gatekeeper,
    HydraError,
    apply_label,
    apply_range_label,
    calibrate_thresholds,
    confusion,
    disagreements,
    generate_corpus,
    infer_all,
    load_config,
    replay_fpr,
    train,
    unlabeled_grid,
)

__all__ = [
    "Catalog",
    "Gatekeeper",
    "HydraError",
    "apply_label",
    "apply_range_label",
    "calibrate_thresholds",
    "confusion",
    "disagreements",
    "generate_corpus",
    "infer_all",
    "load_config",
    "replay_fpr",
    "train",
    "unlabeled_grid",
    "import_truth",
]


def import_truth(catalog, corpus):
    """Record the generator's classes as labels; returns the count labeled."""
    n = 0
    for entry in corpus:
        ref = catalog.find_image_by_path(entry["path"])
        if ref is not None:
            catalog.record_label(ref["image_id"], entry["class_name"], "truth")
            n += 1
    return n
