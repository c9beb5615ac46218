"""Bounding-box anchoring: fit a generated mesh onto a reference extent.

Scaling is per-axis so the maximum extents line up independently along x, y,
and z; a uniform (aspect-preserving) mode using the minimum ratio is
available for overlays that must not stretch.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroExtentAxisWarning
from .mesh import Aabb, TriangleMesh, bounding_box


@dataclass(frozen=True)
class AnchorTransform:
    per_axis_scale: np.ndarray
    translation: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        s = np.asarray(self.per_axis_scale, dtype=np.float64).reshape(3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if not np.isfinite(s).all() or (s <= 0).any():
            raise ValueError("scales must be positive and finite")
        for a in (s, t, r):
            a.flags.writeable = False
        object.__setattr__(self, "per_axis_scale", s)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", r)

    @classmethod
    def identity(cls) -> "AnchorTransform":
        return cls(np.ones(3), np.zeros(3))


def compute_anchor(generated: TriangleMesh, runtime_reference: Aabb,
                   uniform: bool = False) -> AnchorTransform:
    """Transform that maps the generated mesh's box onto the reference box.

    Per-axis scale = reference extent / generated extent; a flat generated
    axis keeps scale 1 and raises ZeroExtentAxisWarning. With uniform=True a
    single minimum ratio is used on all axes instead.
    """
    ref = runtime_reference
    if (ref.extents <= 0).any():
        raise ValueError("reference box must be non-degenerate on all axes")
    box = bounding_box(generated)
    extents = box.extents
    flat = extents <= 0
    scale = np.ones(3)
    scale[~flat] = ref.extents[~flat] / extents[~flat]
    if flat.any():
        warnings.warn(
            f"generated mesh is flat on axes {tuple(np.nonzero(flat)[0])}; "
            "those axes keep scale 1", ZeroExtentAxisWarning, stacklevel=2)
    if uniform:
        scale = np.full(3, scale[~flat].min() if (~flat).any() else 1.0)
    return AnchorTransform(per_axis_scale=scale,
                           translation=ref.center - box.center)


def apply_anchor(mesh: TriangleMesh, transform: AnchorTransform) -> TriangleMesh:
    """Scale per axis about the mesh's own box center, then translate."""
    center = bounding_box(mesh).center
    verts = (mesh.vertices - center) @ transform.rotation.T
    verts = verts * transform.per_axis_scale + center + transform.translation
    return TriangleMesh(verts, mesh.faces, mesh.vertex_colors)
