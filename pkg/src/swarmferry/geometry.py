"""Planar geometry helpers shared by the clustering, ferrying and mobility code.

Positions are float arrays of shape (2,) or (n, 2), in meters.
"""

from __future__ import annotations

import numpy as np


def distance(a, b) -> float:
    """Euclidean distance between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def pairwise_distances(a, b) -> np.ndarray:
    """All-pairs Euclidean distances, shape (len(a), len(b))."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def move_toward(pos, target, speed: float, dt: float) -> np.ndarray:
    """One bounded step from pos toward target.

    Covers at most speed*dt and never overshoots: once the remaining gap
    fits in one step the result is exactly the target.
    """
    pos = np.asarray(pos, dtype=float)
    target = np.asarray(target, dtype=float)
    step = speed * dt
    gap = float(np.hypot(target[0] - pos[0], target[1] - pos[1]))
    if gap <= step:
        return target.copy()
    return pos + (target - pos) * (step / gap)


def move_toward_many(pos, targets, speed: float, dt: float) -> np.ndarray:
    """Vectorized move_toward over matching (n, 2) arrays."""
    pos = np.asarray(pos, dtype=float)
    targets = np.asarray(targets, dtype=float)
    delta = targets - pos
    gap = np.hypot(delta[:, 0], delta[:, 1])
    step = speed * dt
    out = targets.copy()
    far = gap > step
    if np.any(far):
        scale = (step / gap[far])[:, None]
        out[far] = pos[far] + delta[far] * scale
    return out


def clamp_to_area(points, half_width: float) -> np.ndarray:
    """Clip coordinates into the square [-half_width, half_width]^2."""
    return np.clip(np.asarray(points, dtype=float), -half_width, half_width)
