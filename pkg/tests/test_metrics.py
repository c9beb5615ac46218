import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from propshape.fixtures import asymmetric_blob, icosphere
from propshape.mesh import PointCloud
from propshape.metrics import (chamfer, directed_nn_distances, evaluate_pair,
                               hausdorff)
from propshape.registration import IcpParams, random_rotation


def brute_force_directed(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b).min(axis=1)


def test_directed_identical_clouds():
    cloud = PointCloud(np.random.default_rng(0).normal(size=(50, 3)))
    assert (directed_nn_distances(cloud, cloud) == 0).all()


def test_directed_single_nearest():
    a = PointCloud([[0.0, 0, 0]])
    b = PointCloud([[1.0, 0, 0], [3.0, 0, 0]])
    np.testing.assert_array_equal(directed_nn_distances(a, b), [1.0])


def test_directed_matches_brute_force_200():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(200, 3))
    b = rng.normal(size=(200, 3))
    fast = directed_nn_distances(PointCloud(a), PointCloud(b))
    slow = brute_force_directed(a, b)
    assert np.abs(fast - slow).max() <= 1e-12


def test_chamfer_hand_example():
    a = PointCloud([[0.0, 0, 0]])
    b = PointCloud([[1.0, 0, 0], [3.0, 0, 0]])
    assert chamfer(a, b) == pytest.approx(1.5, abs=1e-15)


def test_hausdorff_hand_example():
    a = PointCloud([[0.0, 0, 0]])
    b = PointCloud([[1.0, 0, 0], [3.0, 0, 0]])
    assert hausdorff(a, b) == pytest.approx(3.0, abs=1e-15)


def test_zero_on_self():
    cloud = PointCloud(np.random.default_rng(1).normal(size=(80, 3)))
    assert chamfer(cloud, cloud) == 0.0
    assert hausdorff(cloud, cloud) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_symmetry(seed):
    rng = np.random.default_rng(seed)
    a = PointCloud(rng.normal(size=(rng.integers(1, 60), 3)))
    b = PointCloud(rng.normal(size=(rng.integers(1, 60), 3)))
    assert chamfer(a, b) == chamfer(b, a)
    assert hausdorff(a, b) == hausdorff(b, a)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_kd_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(rng.integers(1, 120), 3))
    b = rng.normal(size=(rng.integers(1, 120), 3))
    fast = directed_nn_distances(PointCloud(a), PointCloud(b))
    slow = brute_force_directed(a, b)
    assert np.abs(fast - slow).max() <= 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100_000))
def test_shared_rigid_transform_invariance(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(40, 3))
    b = rng.normal(size=(50, 3))
    rot = random_rotation(seed).rotation
    t = rng.uniform(-3, 3, 3)
    a2 = PointCloud(a @ rot.T + t)
    b2 = PointCloud(b @ rot.T + t)
    assert chamfer(a2, b2) == pytest.approx(chamfer(PointCloud(a), PointCloud(b)),
                                            abs=1e-9)
    assert hausdorff(a2, b2) == pytest.approx(
        hausdorff(PointCloud(a), PointCloud(b)), abs=1e-9)


def test_max_ge_mean_relation():
    rng = np.random.default_rng(5)
    a = PointCloud(rng.normal(size=(70, 3)))
    b = PointCloud(rng.normal(size=(90, 3)))
    d_ab = directed_nn_distances(a, b)
    d_ba = directed_nn_distances(b, a)
    assert hausdorff(a, b) >= d_ab.mean()
    assert hausdorff(a, b) >= d_ba.mean()


def test_evaluate_pair_identity_small():
    mesh = icosphere(radius=0.7, subdivisions=2)
    report = evaluate_pair(mesh, mesh, n_samples=3000, seed=2)
    assert report.chamfer < 0.05
    assert report.hausdorff < 0.15
    assert report.sample_count == 3000


def test_evaluate_pair_removes_rigid_transform():
    mesh = asymmetric_blob()
    rot = random_rotation(11).rotation
    moved = mesh.transformed(rot, [0.4, -0.1, 0.2])
    base = evaluate_pair(mesh, mesh, n_samples=3000, seed=7)
    recovered = evaluate_pair(mesh, moved, n_samples=3000, seed=7)
    assert recovered.chamfer < 2 * base.chamfer


def test_evaluate_pair_deterministic():
    mesh = asymmetric_blob()
    a = evaluate_pair(mesh, mesh, n_samples=1000, seed=9)
    b = evaluate_pair(mesh, mesh, n_samples=1000, seed=9)
    assert a.chamfer == b.chamfer
    assert a.hausdorff == b.hausdorff
    assert a.alignment == b.alignment


def test_evaluate_pair_custom_params():
    mesh = icosphere(radius=0.7, subdivisions=2)
    report = evaluate_pair(mesh, mesh, params=IcpParams(restarts=2, seed=1),
                           n_samples=500, seed=3)
    assert report.alignment.restart_index <= 2
