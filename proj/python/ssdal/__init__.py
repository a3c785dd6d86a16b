"""Semi-supervised deep attribute learning for person re-identification.

Thin Python layer over the C++ core in ``ssdal._ssdal``. Arrays go in and
come out as numpy arrays; command-style calls take a flat ``{key: value}``
config matching the ``key = value`` file format and return parsed JSON.
"""

import json

from ._ssdal import (
    Network,
    SsdalError,
    attribute_accuracy,
    attributes_triplet_loss,
    averaged_cmc,
    binarize_threshold,
    binarize_top_p,
    cmc,
    config_keys,
    evaluate_retrieval,
    forward,
    hinge_triplet_loss,
    init_network,
    load_checkpoint,
    mean_average_precision,
    parse_checkpoint,
    predict_deep_attributes,
    predict_initial_labels,
    rank_gallery,
    save_checkpoint,
    sigmoid_cross_entropy,
)
from . import _ssdal

__all__ = [
    "Network",
    "SsdalError",
    "attribute_accuracy",
    "attributes_triplet_loss",
    "averaged_cmc",
    "binarize_threshold",
    "binarize_top_p",
    "cmc",
    "config_keys",
    "evaluate_retrieval",
    "forward",
    "gradcheck",
    "hinge_triplet_loss",
    "init_network",
    "load_checkpoint",
    "mean_average_precision",
    "parse_checkpoint",
    "predict_deep_attributes",
    "predict_initial_labels",
    "rank_gallery",
    "run_all",
    "save_checkpoint",
    "sigmoid_cross_entropy",
    "synth",
    "train",
]


def _config(config):
    return {str(k): str(v).lower() if isinstance(v, bool) else str(v) for k, v in (config or {}).items()}


def gradcheck(config=None):
    """Finite-difference check of every registered loss."""
    return json.loads(_ssdal.gradcheck_json(_config(config)))


def synth(config):
    """Write the synthetic splits into ``config["data_dir"]``; returns row counts."""
    return json.loads(_ssdal.synth_json(_config(config)))


def train(config, stage="all"):
    """Train ``stage`` ("1", "2", "3", "all" or "baseline-fc") from files in data_dir."""
    return json.loads(_ssdal.train_json(_config(config), str(stage)))


def run_all(config):
    """synth, all stages, the embedding baseline and evaluation in one call."""
    return json.loads(_ssdal.run_all_json(_config(config)))
