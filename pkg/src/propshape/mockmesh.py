"""Deterministic offline stand-in for the generative image->mesh stages.

The mock reconstruction extrudes a depth image as a heightfield: pixel (i, j)
with value v becomes a vertex at (x, y, v * thickness) on a [-1, 1]^2 grid,
background pixels are dropped, and the grid is triangulated. A flat vertex
color derived from the prompt hash makes prompt changes observable in the
artifact chain.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .depthmap import DepthImage, grid_mesh
from .errors import EmptyForeground
from .mesh import TriangleMesh
from .prompts import PromptSpec

# Extrusion depth for a full-range depth value. Calibrated once against the
# rendered-sphere experiment (scripts/calibrate_extrusion.py) so heightfields
# of standard-viewpoint renders track the true visible surface.
DEFAULT_THICKNESS = 0.9

# Seed-dependent surface jitter, a stand-in for generative variation. Kept
# two orders below the thickness so shape metrics stay stable.
JITTER_AMPLITUDE = 0.005

# Red is not hash-derived: the mock text-to-image stage reserves the red
# channel for depth, so only green/blue survive the stage images.
FIXED_RED = 204 / 255.0


def color_from_prompt(text: str) -> tuple[float, float, float]:
    """Flat RGB for a prompt; green/blue carry the hash, red is fixed."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    g = 64 + digest[0] % 192
    b = 64 + digest[1] % 192
    return (FIXED_RED, g / 255.0, b / 255.0)


def extrude_heightfield(depth: DepthImage, color: tuple[float, float, float],
                        seed: int,
                        thickness: float = DEFAULT_THICKNESS) -> TriangleMesh:
    """Shared engine behind the mock reconstruction paths."""
    mask = depth.foreground
    if not mask.any():
        raise EmptyForeground("depth image has no foreground pixels")
    h, w = depth.values.shape
    cols = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    rows = 1.0 - (np.arange(h) + 0.5) / h * 2.0
    gx, gy = np.meshgrid(cols, rows)
    gz = depth.values * thickness
    if JITTER_AMPLITUDE > 0:
        rng = np.random.default_rng(seed)
        gz = gz + np.where(mask, rng.uniform(-JITTER_AMPLITUDE,
                                             JITTER_AMPLITUDE, size=(h, w)), 0.0)
    positions = np.stack([gx, gy, gz], axis=-1)
    colors = np.broadcast_to(np.asarray(color), (h, w, 3))
    try:
        return grid_mesh(mask, positions, colors)
    except ValueError as exc:
        raise EmptyForeground("foreground has no triangulatable pixels") from exc


def mock_generate_mesh(depth: DepthImage, prompt: PromptSpec | str, seed: int,
                       thickness: float = DEFAULT_THICKNESS) -> TriangleMesh:
    """What the combined mock text-to-image + image-to-3D stages produce."""
    text = prompt.text if isinstance(prompt, PromptSpec) else prompt
    return extrude_heightfield(depth, color_from_prompt(text), seed, thickness)
