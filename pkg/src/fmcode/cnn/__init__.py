from .augment import augment_registration, stretch_to_fixed
from .model import CnnModel, build_identifier, build_mini
from .train import TrainConfig, predict_topk, train_cnn

__all__ = [
    "CnnModel",
    "TrainConfig",
    "augment_registration",
    "build_identifier",
    "build_mini",
    "predict_topk",
    "stretch_to_fixed",
    "train_cnn",
]
