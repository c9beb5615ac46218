"""Chamfer and Hausdorff distances between point clouds.

Chamfer convention used throughout: symmetric mean of plain (non-squared)
Euclidean nearest-neighbor distances, averaged over both directions with a
factor 0.5. This keeps Chamfer and Hausdorff on the same unit-sphere scale.
Nearest neighbors come from an exact k-d tree; tests pin exactness against a
brute-force double loop.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mesh import PointCloud, TriangleMesh, normalize_unit_sphere, sample_surface
from .registration import AlignmentResult, IcpParams, robust_align

CHAMFER_CONVENTION = "0.5 * (mean NN dist A->B + mean NN dist B->A), plain Euclidean"


@dataclass(frozen=True)
class SimilarityReport:
    """Shape-similarity statistics for one original/generated pair."""

    chamfer: float
    hausdorff: float
    sample_count: int
    alignment: AlignmentResult
    seed: int
    convention: str = CHAMFER_CONVENTION


def directed_nn_distances(a: PointCloud, b: PointCloud) -> np.ndarray:
    """For each point of `a`, the exact Euclidean distance to its nearest
    point in `b`."""
    dist, _ = cKDTree(b.points).query(a.points, k=1, workers=-1)
    return np.asarray(dist, dtype=np.float64)


def chamfer(a: PointCloud, b: PointCloud) -> float:
    return 0.5 * (float(directed_nn_distances(a, b).mean())
                  + float(directed_nn_distances(b, a).mean()))


def hausdorff(a: PointCloud, b: PointCloud) -> float:
    return max(float(directed_nn_distances(a, b).max()),
               float(directed_nn_distances(b, a).max()))


def _derive_seed(seed: int, tag: str) -> int:
    # stable per-purpose sub-seed, independent of Python hash randomization
    return (seed * 0x9E3779B1 + zlib.crc32(tag.encode())) % (2 ** 63)


def evaluate_pair(original: TriangleMesh, generated: TriangleMesh,
                  params: IcpParams | None = None,
                  n_samples: int = 10_000, seed: int = 0) -> SimilarityReport:
    """Normalize both meshes to the unit sphere, sample their surfaces,
    rigidly align generated onto original, and report Chamfer/Hausdorff.

    The two clouds are sampled independently (distinct sub-seeds), so
    evaluate_pair(M, M) reports pure sampling noise rather than zero.
    Deterministic for fixed inputs and seed.
    """
    if params is None:
        params = IcpParams(seed=_derive_seed(seed, "align"))
    cloud_orig = sample_surface(normalize_unit_sphere(original).mesh, n_samples,
                                seed=_derive_seed(seed, "original"))
    cloud_gen = sample_surface(normalize_unit_sphere(generated).mesh, n_samples,
                               seed=_derive_seed(seed, "generated"))
    alignment = robust_align(cloud_gen, cloud_orig, params)
    aligned = PointCloud(alignment.transform.apply(cloud_gen.points),
                         cloud_gen.seed)
    return SimilarityReport(
        chamfer=chamfer(aligned, cloud_orig),
        hausdorff=hausdorff(aligned, cloud_orig),
        sample_count=n_samples,
        alignment=alignment,
        seed=seed,
    )
