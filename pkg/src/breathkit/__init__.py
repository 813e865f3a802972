"""breathkit: respiration-rate estimation and mindfulness-skill inference
from chest-mounted accelerometer recordings."""

__version__ = "0.1.0"

from .session_io import RateSeries, SessionRecording, read_session, write_session
from .signal_core import Signal1D
from .reliability import QualityParams, ReliabilityReport, Verdict
from .respiration import PeakParams, RespirationEstimate, estimate_session
from .network import NetworkSpec, forward
from .weights import WeightBundle, read_weights, write_weights
from .mind import SKILLS, SkillPrediction, predict_session
from .synth import SynthProfile, generate, generate_corpus, make_labeled_segments

__all__ = [
    "RateSeries",
    "SessionRecording",
    "read_session",
    "write_session",
    "Signal1D",
    "QualityParams",
    "ReliabilityReport",
    "Verdict",
    "PeakParams",
    "RespirationEstimate",
    "estimate_session",
    "NetworkSpec",
    "forward",
    "WeightBundle",
    "read_weights",
    "write_weights",
    "SKILLS",
    "SkillPrediction",
    "predict_session",
    "SynthProfile",
    "generate",
    "generate_corpus",
    "make_labeled_segments",
]
