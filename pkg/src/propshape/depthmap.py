"""Software z-buffer depth rasterizer for conditioning-image generation.

Depth convention: 1 = nearest rendered surface, 0 = background; the farthest
rendered surface maps to a small positive floor so silhouette interiors stay
strictly positive. One sample per pixel center, no anti-aliasing, fully
deterministic.
"""
from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DegenerateCameraWarning
from .mesh import TriangleMesh

DEPTH_FLOOR = 0.05


@dataclass(frozen=True)
class Perspective:
    fov_deg: float = 40.0

    def __post_init__(self):
        if not 10.0 < self.fov_deg < 120.0:
            raise ValueError("fov must lie in (10, 120) degrees")


@dataclass(frozen=True)
class Orthographic:
    half_extent: float = 1.2

    def __post_init__(self):
        if self.half_extent <= 0:
            raise ValueError("half_extent must be > 0")


@dataclass(frozen=True)
class CameraPose:
    """Camera on a sphere around the origin, looking at the origin, +y up.

    distance is in multiples of the normalized unit radius.
    """

    elevation_deg: float
    azimuth_deg: float
    distance: float
    projection: Perspective | Orthographic

    def __post_init__(self):
        if isinstance(self.projection, Perspective) and self.distance <= 1.0:
            raise ValueError("perspective camera must sit outside the unit sphere")

    @property
    def eye(self) -> np.ndarray:
        el = np.deg2rad(self.elevation_deg)
        az = np.deg2rad(self.azimuth_deg)
        return self.distance * np.array([
            np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up, forward) world-space unit vectors."""
        eye = self.eye
        forward = -eye / np.linalg.norm(eye)
        hint = np.array([0.0, 1.0, 0.0])
        if abs(forward @ hint) > 0.999:
            hint = np.array([0.0, 0.0, 1.0])
        right = np.cross(forward, hint)
        right /= np.linalg.norm(right)
        up = np.cross(right, forward)
        return right, up, forward

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Camera space: x right, y up, camera looks down -z."""
        right, up, forward = self.basis()
        rot = np.stack([right, up, -forward])
        return (np.asarray(points) - self.eye) @ rot.T


@dataclass(frozen=True)
class DepthImage:
    """Single-channel depth raster, row-major values in [0, 1]."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        v = np.asarray(self.values, dtype=np.float64).reshape(self.height, self.width)
        if not np.isfinite(v).all() or v.min() < 0 or v.max() > 1:
            raise ValueError("depth values must be finite and in [0, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def foreground(self) -> np.ndarray:
        return self.values > 0


def standard_viewpoint() -> CameraPose:
    """The fixed evaluation viewpoint: 35 degrees above ground, rotated 30
    degrees horizontally, at 3x the normalized radius with a 40-degree fov."""
    return CameraPose(elevation_deg=35.0, azimuth_deg=30.0, distance=3.0,
                      projection=Perspective(fov_deg=40.0))


def _project(camera: CameraPose, pts_cam: np.ndarray, width: int,
             height: int) -> np.ndarray:
    """Camera space -> continuous pixel coordinates (pixel centers at ints)."""
    aspect = width / height
    if isinstance(camera.projection, Perspective):
        f = 1.0 / np.tan(np.deg2rad(camera.projection.fov_deg) / 2.0)
        z = -pts_cam[:, 2]
        ndc_x = f / aspect * pts_cam[:, 0] / z
        ndc_y = f * pts_cam[:, 1] / z
    else:
        he = camera.projection.half_extent
        ndc_x = pts_cam[:, 0] / (he * aspect)
        ndc_y = pts_cam[:, 1] / he
    px = (ndc_x + 1.0) * 0.5 * width - 0.5
    py = (1.0 - ndc_y) * 0.5 * height - 0.5
    return np.stack([px, py], axis=1)


def _rasterize(mesh: TriangleMesh, camera: CameraPose, width: int,
               height: int) -> np.ndarray:
    """Z-buffer pass returning per-pixel view depth (+inf = background)."""
    pts_cam = camera.world_to_camera(mesh.vertices)
    view_depth = -pts_cam[:, 2]
    perspective = isinstance(camera.projection, Perspective)

    # geometry behind the camera plane is culled for both projections
    projectable = view_depth > 1e-9
    pix = np.full((len(view_depth), 2), np.nan)
    pix[projectable] = _project(camera, pts_cam[projectable], width, height)

    zbuf = np.full((height, width), np.inf)
    for tri in mesh.faces:
        if not projectable[tri].all():
            continue
        p0, p1, p2 = pix[tri]
        lo = np.maximum(np.ceil(np.minimum(np.minimum(p0, p1), p2)), 0).astype(int)
        hi = np.minimum(np.floor(np.maximum(np.maximum(p0, p1), p2)),
                        [width - 1, height - 1]).astype(int)
        if (hi < lo).any():
            continue
        area = ((p1[0] - p0[0]) * (p2[1] - p0[1])
                - (p1[1] - p0[1]) * (p2[0] - p0[0]))
        if area == 0.0:
            continue
        xs = np.arange(lo[0], hi[0] + 1)
        ys = np.arange(lo[1], hi[1] + 1)
        gx, gy = np.meshgrid(xs, ys)
        w0 = ((p2[0] - p1[0]) * (gy - p1[1]) - (p2[1] - p1[1]) * (gx - p1[0])) / area
        w1 = ((p0[0] - p2[0]) * (gy - p2[1]) - (p0[1] - p2[1]) * (gx - p2[0])) / area
        w2 = 1.0 - w0 - w1
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not inside.any():
            continue
        d0, d1, d2 = view_depth[tri]
        if perspective:
            inv = w0 * (1.0 / d0) + w1 * (1.0 / d1) + w2 * (1.0 / d2)
            depth = 1.0 / inv[inside]
        else:
            depth = (w0 * d0 + w1 * d1 + w2 * d2)[inside]
        rows, cols = gy[inside], gx[inside]
        current = zbuf[rows, cols]
        closer = depth < current
        zbuf[rows[closer], cols[closer]] = depth[closer]
    return zbuf


def render_depth(mesh: TriangleMesh, camera: CameraPose, width: int = 512,
                 height: int = 512, floor: float = DEPTH_FLOOR,
                 near_is_bright: bool = True) -> DepthImage:
    """Render a normalized depth map from the camera.

    Covered pixels are remapped linearly so the nearest rendered depth is 1
    and the farthest is `floor` (the polarity flips when near_is_bright is
    False); background pixels are exactly 0. A mesh wholly outside the view
    yields an all-background image and a DegenerateCameraWarning.
    """
    zbuf = _rasterize(mesh, camera, width, height)
    covered = np.isfinite(zbuf)
    values = np.zeros((height, width))
    if not covered.any():
        warnings.warn("mesh projects to no pixels; depth image is empty",
                      DegenerateCameraWarning, stacklevel=2)
        return DepthImage(width, height, values)
    near = zbuf[covered].min()
    far = zbuf[covered].max()
    if far - near <= 1e-9 * max(far, 1.0):  # constant-depth surface
        values[covered] = 1.0
    else:
        t = (far - zbuf[covered]) / (far - near)  # 1 at near, 0 at far
        if not near_is_bright:
            t = 1.0 - t
        values[covered] = floor + (1.0 - floor) * t
    return DepthImage(width, height, values)


def backproject(camera: CameraPose, zbuf: np.ndarray, width: int,
                height: int) -> np.ndarray:
    """World-space position for every pixel of a raw depth buffer.

    Background (+inf) pixels come back as nan.
    """
    gx, gy = np.meshgrid(np.arange(width), np.arange(height))
    ndc_x = (gx + 0.5) / width * 2.0 - 1.0
    ndc_y = 1.0 - (gy + 0.5) / height * 2.0
    aspect = width / height
    t = np.where(np.isfinite(zbuf), zbuf, np.nan)
    if isinstance(camera.projection, Perspective):
        f = 1.0 / np.tan(np.deg2rad(camera.projection.fov_deg) / 2.0)
        x_cam = ndc_x * aspect * t / f
        y_cam = ndc_y * t / f
    else:
        he = camera.projection.half_extent
        nan_mask = 0.0 * t  # keeps background pixels nan
        x_cam = ndc_x * he * aspect + nan_mask
        y_cam = ndc_y * he + nan_mask
    z_cam = -t
    right, up, forward = camera.basis()
    rot = np.stack([right, up, -forward])  # world->camera; transpose inverts
    cam = np.stack([x_cam, y_cam, z_cam], axis=-1)
    return cam @ rot + camera.eye


def grid_mesh(mask: np.ndarray, positions: np.ndarray,
              colors: np.ndarray | None = None) -> TriangleMesh:
    """Triangulate per-pixel 3D positions over a foreground mask.

    Every 2x2 pixel quad with at least 3 covered corners contributes
    triangles; isolated pixels are dropped.
    """
    h, w = mask.shape
    index = np.full((h, w), -1, dtype=np.int64)
    ys, xs = np.nonzero(mask)
    index[ys, xs] = np.arange(len(ys))
    verts = positions[ys, xs]
    vcolors = colors[ys, xs] if colors is not None else None

    a = index[:-1, :-1]
    b = index[:-1, 1:]
    c = index[1:, :-1]
    d = index[1:, 1:]
    quads = np.stack([a, b, c, d], axis=-1).reshape(-1, 4)
    n_cov = (quads >= 0).sum(axis=1)

    faces = []
    full = quads[n_cov == 4]
    if len(full):
        faces.append(np.stack([full[:, 0], full[:, 2], full[:, 1]], axis=1))
        faces.append(np.stack([full[:, 1], full[:, 2], full[:, 3]], axis=1))
    tri3 = quads[n_cov == 3]
    if len(tri3):
        kept = np.stack([row[row >= 0] for row in tri3])
        faces.append(kept)
    if not faces:
        raise ValueError("mask has no triangulatable pixels")
    face_arr = np.vstack(faces)

    used = np.zeros(len(verts), dtype=bool)
    used[face_arr.reshape(-1)] = True
    remap = np.cumsum(used) - 1
    return TriangleMesh(verts[used], remap[face_arr],
                        vcolors[used] if vcolors is not None else None)


def visible_surface_mesh(mesh: TriangleMesh, camera: CameraPose,
                         width: int = 256, height: int = 256) -> TriangleMesh:
    """The part of `mesh` visible from `camera`, as a world-space pixel grid
    mesh. Serves as ground truth for depth-derived reconstructions."""
    zbuf = _rasterize(mesh, camera, width, height)
    if not np.isfinite(zbuf).any():
        warnings.warn("mesh projects to no pixels", DegenerateCameraWarning,
                      stacklevel=2)
        raise ValueError("no visible surface")
    positions = backproject(camera, zbuf, width, height)
    return grid_mesh(np.isfinite(zbuf), positions)


def encode_depth_png(image: DepthImage) -> bytes:
    """8-bit grayscale PNG; each value stored as round(255 * v)."""
    quantized = np.rint(image.values * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(quantized, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_depth_png(data: bytes) -> DepthImage:
    img = Image.open(io.BytesIO(data)).convert("L")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return DepthImage(img.width, img.height, arr)


def write_depth_raw(image: DepthImage) -> bytes:
    """Raw dump: little-endian uint32 width, height, then row-major float32."""
    return (struct.pack("<II", image.width, image.height)
            + image.values.astype("<f4").tobytes())


def read_depth_raw(data: bytes) -> DepthImage:
    width, height = struct.unpack_from("<II", data, 0)
    values = np.frombuffer(data, dtype="<f4", offset=8).reshape(height, width)
    return DepthImage(width, height, values.astype(np.float64))
