"""Triangle mesh and point cloud types plus the geometry ops built on them.

Meshes are immutable after construction (the underlying numpy arrays are
marked read-only) so they can be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMesh, IndexOutOfRange, ZeroAreaMesh, ZeroExtent


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle geometry with optional per-vertex RGB colors.

    vertices: (n, 3) float64, model units.
    faces: (m, 3) int64 vertex indices.
    vertex_colors: optional (n, 3) float64 in [0, 1].
    """

    vertices: np.ndarray
    faces: np.ndarray
    vertex_colors: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if v.shape[0] == 0:
            raise EmptyMesh("mesh has no vertices")
        if not np.isfinite(v).all():
            raise ValueError("mesh has non-finite vertex coordinates")
        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            raise IndexOutOfRange(
                f"face index out of range (vertex count {v.shape[0]})"
            )
        object.__setattr__(self, "vertices", _readonly(v))
        object.__setattr__(self, "faces", _readonly(f))
        if self.vertex_colors is not None:
            c = np.asarray(self.vertex_colors, dtype=np.float64).reshape(-1, 3)
            if c.shape[0] != v.shape[0]:
                raise ValueError("vertex_colors length must match vertices")
            if not np.isfinite(c).all() or c.min() < 0 or c.max() > 1:
                raise ValueError("vertex_colors must be finite and in [0, 1]")
            object.__setattr__(self, "vertex_colors", _readonly(c))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                            self.faces, self.vertex_colors)

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * float(factor), self.faces,
                            self.vertex_colors)

    def transformed(self, rotation: np.ndarray, translation) -> "TriangleMesh":
        """Apply v -> R v + t to every vertex."""
        r = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        return TriangleMesh(self.vertices @ r.T + t, self.faces, self.vertex_colors)


@dataclass(frozen=True)
class PointCloud:
    """Surface samples; `seed` records how they were drawn."""

    points: np.ndarray
    seed: int = 0

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if p.shape[0] == 0:
            raise ValueError("point cloud is empty")
        if not np.isfinite(p).all():
            raise ValueError("point cloud has non-finite coordinates")
        object.__setattr__(self, "points", _readonly(p))

    def __len__(self) -> int:
        return self.points.shape[0]

    def transformed(self, rotation: np.ndarray, translation) -> "PointCloud":
        r = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        return PointCloud(self.points @ r.T + t, self.seed)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box (componentwise min/max corners)."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if (lo > hi).any():
            raise ValueError("Aabb min must be <= max componentwise")
        object.__setattr__(self, "min", _readonly(lo))
        object.__setattr__(self, "max", _readonly(hi))

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)


@dataclass(frozen=True)
class NormalizationResult:
    """Mesh centered and scaled so its farthest vertex sits at distance 1."""

    mesh: TriangleMesh
    center: np.ndarray
    scale: float


def triangle_areas(mesh: TriangleMesh) -> np.ndarray:
    """Per-face areas; degenerate faces yield 0."""
    v = mesh.vertices
    a, b, c = v[mesh.faces[:, 0]], v[mesh.faces[:, 1]], v[mesh.faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def surface_area(mesh: TriangleMesh) -> float:
    return float(triangle_areas(mesh).sum())


def bounding_box(mesh: TriangleMesh) -> Aabb:
    if mesh.n_vertices == 0:
        raise EmptyMesh("cannot bound an empty mesh")
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> PointCloud:
    """Draw `n` points uniformly by area from the mesh surface.

    Triangles are chosen with probability proportional to their area and the
    point inside each is uniform via the square-root barycentric trick.
    Zero-area faces are dropped first. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    areas = triangle_areas(mesh)
    keep = areas > 0
    if not keep.any():
        raise ZeroAreaMesh("mesh has no triangle with positive area")
    areas = areas[keep]
    faces = mesh.faces[keep]

    rng = np.random.default_rng(seed)
    choice = rng.choice(len(areas), size=n, p=areas / areas.sum())
    r1 = rng.random(n)
    r2 = rng.random(n)
    s = np.sqrt(r1)
    u = 1.0 - s
    v = s * (1.0 - r2)
    w = s * r2

    tri = mesh.vertices[faces[choice]]
    pts = u[:, None] * tri[:, 0] + v[:, None] * tri[:, 1] + w[:, None] * tri[:, 2]
    return PointCloud(pts, seed=seed)


def area_weighted_centroid(mesh: TriangleMesh) -> np.ndarray:
    """Mean of triangle centroids weighted by triangle area.

    More robust to uneven tessellation than the raw vertex mean.
    """
    areas = triangle_areas(mesh)
    total = areas.sum()
    if total <= 0:
        raise ZeroAreaMesh("mesh has no triangle with positive area")
    v = mesh.vertices
    centroids = v[mesh.faces].mean(axis=1)
    return (areas[:, None] * centroids).sum(axis=0) / total


def normalize_unit_sphere(mesh: TriangleMesh) -> NormalizationResult:
    """Center on the area-weighted surface centroid and scale the farthest
    vertex onto the unit sphere.

    The maximum displacement is measured over vertices, which makes the
    result exact and deterministic.
    """
    center = area_weighted_centroid(mesh)
    offsets = mesh.vertices - center
    scale = float(np.linalg.norm(offsets, axis=1).max())
    if scale <= 0:
        raise ZeroExtent("all vertices coincide")
    out = TriangleMesh(offsets / scale, mesh.faces, mesh.vertex_colors)
    return NormalizationResult(mesh=out, center=_readonly(center), scale=scale)
