"""Synthetic fixture meshes so tests and demo studies need no external data."""
from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh


def cube(side: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = side / 2.0
    c = np.asarray(center, dtype=np.float64)
    corners = np.array([
        [-h, -h, -h], [+h, -h, -h], [+h, +h, -h], [-h, +h, -h],
        [-h, -h, +h], [+h, -h, +h], [+h, +h, +h], [-h, +h, +h],
    ]) + c
    faces = np.array([
        [0, 2, 1], [0, 3, 2],  # -z
        [4, 5, 6], [4, 6, 7],  # +z
        [0, 1, 5], [0, 5, 4],  # -y
        [3, 7, 6], [3, 6, 2],  # +y
        [0, 4, 7], [0, 7, 3],  # -x
        [1, 2, 6], [1, 6, 5],  # +x
    ])
    return TriangleMesh(corners, faces)


def icosphere(radius: float = 1.0, subdivisions: int = 3) -> TriangleMesh:
    """Icosahedron subdivided `subdivisions` times, vertices on the sphere."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint_cache:
                m = (verts[i] + verts[j]) / 2.0
                m /= np.linalg.norm(m)
                verts.append(m)
                midpoint_cache[key] = len(verts) - 1
            return midpoint_cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return TriangleMesh(np.asarray(verts) * radius, np.asarray(faces))


def cylinder(radius: float = 0.45, height: float = 1.6,
             segments: int = 48) -> TriangleMesh:
    ang = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    ring = np.stack([radius * np.cos(ang), np.full(segments, 0.0),
                     radius * np.sin(ang)], axis=1)
    bottom = ring + [0, -height / 2, 0]
    top = ring + [0, +height / 2, 0]
    verts = np.vstack([bottom, top, [[0, -height / 2, 0]], [[0, height / 2, 0]]])
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + i], [j, segments + j, segments + i]]
        faces += [[cb, j, i], [ct, segments + i, segments + j]]
    return TriangleMesh(verts, np.asarray(faces))


def torus(major_radius: float = 0.7, minor_radius: float = 0.3,
          major_segments: int = 32, minor_segments: int = 16) -> TriangleMesh:
    u = np.linspace(0, 2 * np.pi, major_segments, endpoint=False)
    v = np.linspace(0, 2 * np.pi, minor_segments, endpoint=False)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = (major_radius + minor_radius * np.cos(vv)) * np.cos(uu)
    y = minor_radius * np.sin(vv)
    z = (major_radius + minor_radius * np.cos(vv)) * np.sin(uu)
    verts = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(major_segments):
        for j in range(minor_segments):
            a = i * minor_segments + j
            b = i * minor_segments + (j + 1) % minor_segments
            c = ((i + 1) % major_segments) * minor_segments + j
            d = ((i + 1) % major_segments) * minor_segments + (j + 1) % minor_segments
            faces += [[a, b, c], [b, d, c]]
    return TriangleMesh(verts, np.asarray(faces))


def merge(*meshes: TriangleMesh) -> TriangleMesh:
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    return TriangleMesh(np.vstack(verts), np.vstack(faces))


def _box(extents, center) -> TriangleMesh:
    m = cube(side=1.0)
    return TriangleMesh(m.vertices * np.asarray(extents) + np.asarray(center),
                        m.faces)


def asymmetric_blob() -> TriangleMesh:
    """Composite with no symmetry, not even approximate; registration tests
    rely on its single deep alignment basin.

    Three unequal orthogonal arms from a corner hub plus an off-axis ball:
    every axis permutation or flip leaves some arm badly misplaced.
    """
    hub = cube(side=0.34, center=(0.0, 0.0, 0.0))
    arm_x = _box((1.1, 0.2, 0.2), (0.55, 0.0, 0.0))
    arm_y = _box((0.18, 0.7, 0.18), (0.0, 0.35, 0.0))
    arm_z = _box((0.16, 0.16, 0.4), (0.0, 0.0, 0.2))
    ball = icosphere(radius=0.17, subdivisions=2).translated((1.1, 0.17, 0.0))
    return merge(hub, arm_x, arm_y, arm_z, ball)


def study_fixtures() -> dict[str, TriangleMesh]:
    """The five bundled meshes used by the demo study and acceptance suite."""
    return {
        "cube": cube(side=1.0),
        "sphere": icosphere(radius=0.8, subdivisions=3),
        "cylinder": cylinder(),
        "torus": torus(),
        "blob": asymmetric_blob(),
    }
