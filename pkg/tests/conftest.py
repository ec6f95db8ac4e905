import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_timeline(valences, video_id="vid", confidences=None, mood=None, start=0):
    from moodval.annotations import FrameRecord, ValenceTimeline

    if confidences is None:
        confidences = [1.0] * len(valences)
    frames = tuple(
        FrameRecord(frame_index=start + i, valence=float(v), confidence=float(c))
        for i, (v, c) in enumerate(zip(valences, confidences))
    )
    return ValenceTimeline(video_id, frames, mood=mood)
