"""Latent video upscaling toolkit.

Videos are float64 arrays shaped (T, C, H, W) with samples in [0, 1]. Flow
sequences are lists of (forward, backward) float32 arrays shaped (H, W, 2),
one pair per adjacent frame pair.
"""

from ._uav import *  # noqa: F401,F403
from ._uav import UavError, upscale  # noqa: F401
