"""tutti: learn to project piano scores onto a full orchestra, live.

Conditional energy-based models map an 88-key piano frame plus recent
orchestral history to the next orchestral frame; the package covers score
ingestion, training, evaluation, and a realtime WebSocket player.
"""

from .models import (
    ConditionalRBM,
    FactoredGatedRBM,
    ModelBundle,
    RBM,
    SamplingConfig,
    load_model,
    save_model,
)
from .pianoroll import OrchestraLayout, PianoRoll, StateSequence

__version__ = "0.1.0"

__all__ = [
    "ConditionalRBM",
    "FactoredGatedRBM",
    "ModelBundle",
    "OrchestraLayout",
    "PianoRoll",
    "RBM",
    "SamplingConfig",
    "StateSequence",
    "__version__",
    "load_model",
    "save_model",
]
