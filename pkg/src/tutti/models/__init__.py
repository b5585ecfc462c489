from .base import EnergyModel, SamplingConfig, TrainingDiverged, binarize, sigmoid
from .crbm import ConditionalRBM
from .fgcrbm import FactoredGatedRBM
from .rbm import RBM
from .serialize import ModelBundle, SerializationError, load_model, save_model

__all__ = [
    "ConditionalRBM",
    "EnergyModel",
    "FactoredGatedRBM",
    "ModelBundle",
    "RBM",
    "SamplingConfig",
    "SerializationError",
    "TrainingDiverged",
    "binarize",
    "load_model",
    "save_model",
    "sigmoid",
]
