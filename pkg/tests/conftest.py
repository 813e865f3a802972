import numpy as np
import pytest

from breathkit import synth


@pytest.fixture(scope="session")
def clean_6bpm():
    """300 s clean breathing session at 6 bpm with its ground truth."""
    profile = synth.SynthProfile(
        duration_s=300.0, rate_profile=((0.0, 6.0),), jitter_rms_g=0.0, seed=7,
        session_id="clean-6bpm",
    )
    return synth.generate(profile)


@pytest.fixture(scope="session")
def noisy_6bpm():
    profile = synth.SynthProfile(
        duration_s=300.0, rate_profile=((0.0, 6.0),),
        jitter_rms_g=0.005, burst_rate_per_min=2.0, burst_amplitude_g=0.2,
        seed=11, session_id="noisy-6bpm",
    )
    return synth.generate(profile)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
