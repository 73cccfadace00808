"""Desk-scale texture-to-heightfield model: training, inference, serving."""

from .errors import HeightgenError
from .model import HeightgenModel, encoder_checksum, freeze_encoder, infer
from .serve import create_app
from .train import TrainingConfig, TrainResult, load_artifact, train, train_from_paths

__all__ = [
    "HeightgenError",
    "HeightgenModel",
    "TrainingConfig",
    "TrainResult",
    "create_app",
    "encoder_checksum",
    "freeze_encoder",
    "infer",
    "load_artifact",
    "train",
    "train_from_paths",
]
