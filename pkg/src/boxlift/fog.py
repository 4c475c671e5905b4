"""Depth-aware fog augmentation of RGB images.

Each pixel is attenuated by the exponential transmittance t = exp(-beta * d)
and blended toward the ambient atmospheric light:

    out = image * t + ambient * (1 - t)

computed per channel in floating point on raw 8-bit intensities, then
rounded half-up and clamped to [0, 255]. Pixels with unknown depth (d = 0)
are treated as infinitely far away and become pure ambient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lifting import DepthMap

DEFAULT_BETA = 0.03


@dataclass(frozen=True)
class FogParams:
    """Fog density in 1/m and ambient light per channel in [0, 255]."""

    beta: float = DEFAULT_BETA
    ambient: tuple[float, float, float] = (255.0, 255.0, 255.0)

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if any(not 0 <= a <= 255 for a in self.ambient):
            raise ValueError("ambient channels must be in [0, 255]")


def transmittance(beta: float, depth: np.ndarray) -> np.ndarray:
    """exp(-beta * d), with d = 0 (invalid) treated as full extinction."""
    d = np.asarray(depth, dtype=float)
    t = np.exp(-beta * d)
    return np.where(d == 0, 0.0 if beta > 0 else 1.0, t)


def fog_blend(img: np.ndarray, depth: np.ndarray, params: FogParams) -> np.ndarray:
    """Float per-channel blend before quantization.

    Evaluated as ambient + (image - ambient) * t, which is the same equation
    rearranged so the result is exactly monotone in t under rounding.
    """
    t = transmittance(params.beta, depth)[:, :, None]
    ambient = np.asarray(params.ambient, dtype=float)
    return ambient + (np.asarray(img, dtype=float) - ambient) * t


def apply_fog(img: np.ndarray, depth: DepthMap, params: FogParams) -> np.ndarray:
    """Blend an (H, W, 3) uint8 image toward ambient light by scene depth."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("image must have shape (height, width, 3)")
    if img.shape[:2] != depth.depth.shape:
        raise ValueError(f"image {img.shape[:2]} and depth {depth.depth.shape} dimensions differ")
    blended = fog_blend(img, depth.depth, params)
    return np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)
