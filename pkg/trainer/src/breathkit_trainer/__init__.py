"""breathkit-trainer: training pipeline for the mindfulness-skill classifier."""

__version__ = "0.1.0"

from .netspec import NetSpec
from .data import SegmentDataset, load_corpus, rebalance, stratified_split
from .train import TrainConfig, TrainingDiverged, export_bundle, train
from .gradcheck import gradient_check
from .fixtures import export_reference_fixtures

__all__ = [
    "NetSpec",
    "SegmentDataset",
    "load_corpus",
    "rebalance",
    "stratified_split",
    "TrainConfig",
    "TrainingDiverged",
    "export_bundle",
    "train",
    "gradient_check",
    "export_reference_fixtures",
]
