"""Streaming EEG seizure detection and early prediction."""

from .config import EngineConfig
from .decision import DecisionEvent
from .errors import EngineError
from .immune import AisParams, Population, load_bundle, save_bundle
from .pipeline import Pipeline, run_recording
from .recording import (
    EegRecording,
    SeizureAnnotation,
    SynthSpec,
    generate_synthetic,
    load_recording,
    write_recording,
)
from .signature import Signature
from .training import train_population

__all__ = [
    "AisParams",
    "DecisionEvent",
    "EegRecording",
    "EngineConfig",
    "EngineError",
    "Pipeline",
    "Population",
    "SeizureAnnotation",
    "Signature",
    "SynthSpec",
    "generate_synthetic",
    "load_bundle",
    "load_recording",
    "run_recording",
    "save_bundle",
    "train_population",
    "write_recording",
]

__version__ = "0.1.0"
