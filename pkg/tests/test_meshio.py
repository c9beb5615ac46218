import json
import struct

import numpy as np
import pytest

from propshape.errors import EmptyMesh, IndexOutOfRange, ParseError
from propshape.fixtures import cube, icosphere
from propshape.meshio import (encode_glb, load_glb_bytes, load_mesh, save_glb,
                              save_mesh, save_obj)

MINIMAL_OBJ = """\
v 0 0 0
v 1 0 0
v 0 1 0
f 1 2 3
"""

QUAD_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
f 1 2 3 4
"""

COLOR_OBJ = """\
v 0 0 0 1 0 0
v 1 0 0 0 1 0
v 0 1 0 0 0 1
f 1 2 3
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_minimal_obj(tmp_path):
    mesh = load_mesh(_write(tmp_path, "tri.obj", MINIMAL_OBJ))
    assert mesh.n_vertices == 3
    assert mesh.n_faces == 1


def test_quad_fan_triangulates(tmp_path):
    mesh = load_mesh(_write(tmp_path, "quad.obj", QUAD_OBJ))
    assert mesh.n_faces == 2
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])


def test_vertex_colors_preserved(tmp_path):
    mesh = load_mesh(_write(tmp_path, "color.obj", COLOR_OBJ))
    np.testing.assert_allclose(mesh.vertex_colors, np.eye(3))


def test_obj_slash_and_negative_indices(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n"
    mesh = load_mesh(_write(tmp_path, "mixed.obj", text))
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])


def test_obj_index_out_of_range(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"
    with pytest.raises(IndexOutOfRange):
        load_mesh(_write(tmp_path, "bad.obj", text))


def test_obj_no_faces(tmp_path):
    with pytest.raises(EmptyMesh):
        load_mesh(_write(tmp_path, "pts.obj", "v 0 0 0\nv 1 0 0\n"))


def test_obj_malformed_vertex(tmp_path):
    with pytest.raises(ParseError):
        load_mesh(_write(tmp_path, "bad.obj", "v 0 zero 0\nf 1 1 1\n"))


def test_unknown_suffix(tmp_path):
    path = tmp_path / "mesh.stl"
    path.write_text("")
    with pytest.raises(ParseError):
        load_mesh(path)


def _reference_cube_glb() -> bytes:
    """A GLB cube built by hand, independent of the package encoder.

    8 vertices, 12 triangles, float32 positions and uint16 indices.
    """
    positions = np.array([
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ], dtype=np.float32)
    indices = np.array([
        0, 2, 1, 0, 3, 2, 4, 5, 6, 4, 6, 7, 0, 1, 5, 0, 5, 4,
        3, 7, 6, 3, 6, 2, 0, 4, 7, 0, 7, 3, 1, 2, 6, 1, 6, 5,
    ], dtype=np.uint16)
    pos_bytes = positions.tobytes()
    idx_bytes = indices.tobytes()
    binary = pos_bytes + idx_bytes
    binary += b"\x00" * (-len(binary) % 4)
    doc = {
        "asset": {"version": "2.0"},
        "buffers": [{"byteLength": len(binary)}],
        "bufferViews": [
            {"buffer": 0, "byteOffset": 0, "byteLength": len(pos_bytes)},
            {"buffer": 0, "byteOffset": len(pos_bytes),
             "byteLength": len(idx_bytes)},
        ],
        "accessors": [
            {"bufferView": 0, "componentType": 5126, "count": 8,
             "type": "VEC3", "min": [-1, -1, -1], "max": [1, 1, 1]},
            {"bufferView": 1, "componentType": 5123, "count": 36,
             "type": "SCALAR"},
        ],
        "meshes": [{"primitives": [
            {"attributes": {"POSITION": 0}, "indices": 1, "mode": 4}]}],
    }
    payload = json.dumps(doc).encode()
    payload += b" " * (-len(payload) % 4)
    total = 12 + 8 + len(payload) + 8 + len(binary)
    out = struct.pack("<III", 0x46546C67, 2, total)
    out += struct.pack("<II", len(payload), 0x4E4F534A) + payload
    out += struct.pack("<II", len(binary), 0x004E4942) + binary
    return out


def test_glb_cube_counts_match_reference(tmp_path):
    path = tmp_path / "cube.glb"
    path.write_bytes(_reference_cube_glb())
    mesh = load_mesh(path, format="gltf-binary")
    assert mesh.n_vertices == 8
    assert mesh.n_faces == 12
    np.testing.assert_allclose(mesh.vertices.min(axis=0), -1)
    np.testing.assert_allclose(mesh.vertices.max(axis=0), 1)


def test_glb_bad_magic():
    with pytest.raises(ParseError):
        load_glb_bytes(b"NOPE" + b"\x00" * 20)


def test_glb_truncated():
    with pytest.raises(ParseError):
        load_glb_bytes(b"\x00\x01")


def test_glb_roundtrip_with_colors(tmp_path):
    mesh = icosphere(radius=0.5, subdivisions=1)
    colors = np.tile([0.2, 0.4, 0.8], (mesh.n_vertices, 1))
    from propshape.mesh import TriangleMesh

    colored = TriangleMesh(mesh.vertices, mesh.faces, colors)
    path = tmp_path / "ball.glb"
    save_glb(colored, path)
    back = load_mesh(path)
    np.testing.assert_allclose(back.vertices, colored.vertices, atol=1e-6)
    np.testing.assert_array_equal(back.faces, colored.faces)
    np.testing.assert_allclose(back.vertex_colors, colors, atol=1e-6)


def test_obj_roundtrip(tmp_path):
    mesh = cube(side=2.0, center=(0.5, -0.25, 1.0))
    path = tmp_path / "cube.obj"
    save_obj(mesh, path)
    back = load_mesh(path)
    np.testing.assert_allclose(back.vertices, mesh.vertices, atol=1e-7)
    np.testing.assert_array_equal(back.faces, mesh.faces)


def test_save_mesh_dispatches(tmp_path):
    mesh = cube()
    save_mesh(mesh, tmp_path / "a.obj")
    save_mesh(mesh, tmp_path / "a.glb")
    assert load_mesh(tmp_path / "a.obj").n_faces == 12
    assert load_mesh(tmp_path / "a.glb").n_faces == 12
    with pytest.raises(ParseError):
        save_mesh(mesh, tmp_path / "a.ply")


def test_encode_glb_parses_as_glb():
    data = encode_glb(cube())
    assert data[:4] == b"glTF"
    mesh = load_glb_bytes(data)
    assert mesh.n_faces == 12
