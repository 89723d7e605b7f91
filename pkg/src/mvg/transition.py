"""Mask-guided transition clips between consecutive edit states.

A clip skeleton is [x_start, ε, …, ε, x_end]. Middle frames are denoised from
step k=⌊γT⌋ down to 1 with the condition interpolated by frame position, the
endpoint frames re-clamped to their noised versions at every step (inpainting
style). The finished frames are composited against the endpoint average
outside the ROI, and the endpoints are restored exactly last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .denoiser import blend_conditions
from .errors import InvalidArgument, SeamMismatch, ShapeMismatch
from .pie import validate_mask
from .scheduler import NoiseSchedule, ddim_step, forward_diffuse


@dataclass
class VideoClip:
    """K×(image shape) frame stack, K ≥ 2."""

    frames: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim < 2 or self.frames.shape[0] < 2:
            raise InvalidArgument("a clip needs at least two frames")
        if not np.all(np.isfinite(self.frames)):
            raise InvalidArgument("clip frames must be finite")

    @property
    def K(self) -> int:
        return int(self.frames.shape[0])


def make_clip_skeleton(x_start, x_end, K: int, seed: int) -> VideoClip:
    """[x_start, noise…, x_end] with unit-normal middle frames from the seed."""
    if K < 2:
        raise InvalidArgument(f"K must be >= 2, got {K}")
    x_start = np.asarray(x_start, dtype=np.float64)
    x_end = np.asarray(x_end, dtype=np.float64)
    if x_start.shape != x_end.shape:
        raise ShapeMismatch(f"x_start {x_start.shape} vs x_end {x_end.shape}")
    frames = np.empty((K,) + x_start.shape)
    frames[0] = x_start
    frames[K - 1] = x_end
    for j in range(1, K - 1):
        frames[j] = rng.normal(x_start.shape, seed, stage=j)
    return VideoClip(frames=frames, seed=seed)


def _masked_average_composite(gen, avg, mask):
    m = mask[..., None] if gen.ndim == mask.ndim + 1 else mask
    blended = (1.0 - m) * avg + m * gen
    return np.where(m == 0.0, avg, np.where(m == 1.0, gen, blended))


def generate_transition(skel: VideoClip, m, d, s: NoiseSchedule, y_start, y_end,
                        gamma: float) -> VideoClip:
    """Denoise the skeleton's middle frames into a coherent transition clip."""
    k = math.floor(gamma * s.T)
    if not (1 <= k <= s.T):
        raise InvalidArgument(f"gamma={gamma} gives k={k} outside 1..{s.T}")
    K = skel.K
    x_start = skel.frames[0].copy()
    x_end = skel.frames[K - 1].copy()
    plane = x_start.shape[:2] if x_start.ndim == 3 else x_start.shape
    mask = validate_mask(m, plane)

    frames = skel.frames.copy()
    seed = skel.seed if skel.seed is not None else 0
    eps_start = rng.normal(x_start.shape, seed, stage=K)      # clamp noise, fixed per clip
    eps_end = rng.normal(x_end.shape, seed, stage=K + 1)
    for t in range(k, 0, -1):
        frames[0] = forward_diffuse(x_start, t, eps_start, s)
        frames[K - 1] = forward_diffuse(x_end, t, eps_end, s)
        for j in range(1, K - 1):
            y_j = blend_conditions(y_start, y_end, j / (K - 1))
            frames[j] = ddim_step(frames[j], t, d.predict(frames[j], t, y_j), s)

    avg = 0.5 * (x_start + x_end)
    for j in range(K):
        frames[j] = _masked_average_composite(frames[j], avg, mask)
    frames[0] = x_start
    frames[K - 1] = x_end
    return VideoClip(frames=frames, seed=skel.seed)


def concat_clips(clips: list[VideoClip]) -> VideoClip:
    """Concatenate clips, dropping each duplicated seam frame once."""
    if not clips:
        raise InvalidArgument("need at least one clip")
    if len(clips) == 1:
        return clips[0]
    shapes = {c.frames.shape[1:] for c in clips}
    if len(shapes) != 1:
        raise ShapeMismatch(f"clips disagree on frame shape: {sorted(map(str, shapes))}")
    parts = [clips[0].frames]
    for i, (prev, nxt) in enumerate(zip(clips, clips[1:])):
        gap = np.max(np.abs(prev.frames[-1] - nxt.frames[0]))
        if gap > 1e-9:
            raise SeamMismatch(
                f"clip {i} last frame vs clip {i + 1} first frame differ by {gap:.3e}")
        parts.append(nxt.frames[1:])
    return VideoClip(frames=np.concatenate(parts, axis=0))
