"""Wavefront OBJ and binary glTF (.glb) loading and saving.

OBJ support is limited to v/f records (with the common "v x y z r g b"
vertex-color extension); polygons are fan-triangulated. GLB support covers a
single triangle primitive with POSITION and optional COLOR_0; materials and
textures are ignored.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import EmptyMesh, IndexOutOfRange, ParseError
from .mesh import TriangleMesh

GLB_MAGIC = 0x46546C67  # ascii "glTF"
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

_COMPONENT_DTYPES = {
    5120: np.int8,
    5121: np.uint8,
    5122: np.int16,
    5123: np.uint16,
    5125: np.uint32,
    5126: np.float32,
}
_TYPE_WIDTHS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4}


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load a mesh, dispatching on `format` or the file extension.

    format: "obj" or "gltf-binary"; None infers from the suffix.
    """
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower()
        if suffix == ".obj":
            format = "obj"
        elif suffix in (".glb", ".gltf"):
            format = "gltf-binary"
        else:
            raise ParseError(f"cannot infer mesh format from {path.name!r}")
    if format == "obj":
        return load_obj(path)
    if format == "gltf-binary":
        return load_glb(path)
    raise ParseError(f"unsupported mesh format {format!r}")


def load_obj(path) -> TriangleMesh:
    vertices: list[list[float]] = []
    colors: list[list[float]] = []
    faces: list[list[int]] = []

    def resolve(token: str) -> int:
        # "i", "i/t", "i//n", "i/t/n"; negative indices count from the end
        idx = int(token.split("/")[0])
        if idx < 0:
            idx += len(vertices)
        else:
            idx -= 1
        if idx < 0 or idx >= len(vertices):
            raise IndexOutOfRange(f"face index {token} out of range")
        return idx

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "v":
                    if len(parts) not in (4, 7):
                        raise ParseError("vertex record needs 3 or 6 numbers")
                    vertices.append([float(x) for x in parts[1:4]])
                    if len(parts) == 7:
                        colors.append([float(x) for x in parts[4:7]])
                elif tag == "f":
                    if len(parts) < 4:
                        raise ParseError("face record needs >= 3 indices")
                    idx = [resolve(tok) for tok in parts[1:]]
                    for k in range(1, len(idx) - 1):  # fan triangulation
                        faces.append([idx[0], idx[k], idx[k + 1]])
                # vn/vt/usemtl/o/g/s etc. are ignored
            except IndexOutOfRange:
                raise
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc

    if not faces:
        raise EmptyMesh(f"{path}: no faces")
    vertex_colors = None
    if colors:
        if len(colors) != len(vertices):
            raise ParseError(f"{path}: vertex colors on only some vertices")
        vertex_colors = np.clip(np.asarray(colors, dtype=np.float64), 0.0, 1.0)
    return TriangleMesh(np.asarray(vertices, dtype=np.float64),
                        np.asarray(faces, dtype=np.int64), vertex_colors)


def save_obj(mesh: TriangleMesh, path) -> None:
    lines = []
    if mesh.vertex_colors is not None:
        for v, c in zip(mesh.vertices, mesh.vertex_colors):
            lines.append("v %.9g %.9g %.9g %.9g %.9g %.9g" % (*v, *c))
    else:
        for v in mesh.vertices:
            lines.append("v %.9g %.9g %.9g" % tuple(v))
    for f in mesh.faces:
        lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _split_glb(data: bytes):
    if len(data) < 12:
        raise ParseError("GLB shorter than its header")
    magic, version, length = struct.unpack_from("<III", data, 0)
    if magic != GLB_MAGIC:
        raise ParseError("not a GLB container (bad magic)")
    if version != 2:
        raise ParseError(f"unsupported GLB version {version}")
    offset = 12
    chunks = {}
    while offset + 8 <= min(length, len(data)):
        chunk_len, chunk_type = struct.unpack_from("<II", data, offset)
        offset += 8
        chunks[chunk_type] = data[offset:offset + chunk_len]
        offset += chunk_len + (-chunk_len % 4)
    if CHUNK_JSON not in chunks:
        raise ParseError("GLB has no JSON chunk")
    return chunks


def _read_accessor(gltf: dict, binary: bytes, accessor_index: int) -> np.ndarray:
    acc = gltf["accessors"][accessor_index]
    if "sparse" in acc:
        raise ParseError("sparse accessors are not supported")
    dtype = _COMPONENT_DTYPES.get(acc["componentType"])
    if dtype is None:
        raise ParseError(f"unknown componentType {acc['componentType']}")
    width = _TYPE_WIDTHS.get(acc["type"])
    if width is None:
        raise ParseError(f"unsupported accessor type {acc['type']}")
    count = acc["count"]
    view = gltf["bufferViews"][acc.get("bufferView", 0)]
    start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
    itemsize = np.dtype(dtype).itemsize * width
    stride = view.get("byteStride", itemsize)
    if stride == itemsize:
        arr = np.frombuffer(binary, dtype=dtype, count=count * width,
                            offset=start).reshape(count, width)
    else:
        rows = [np.frombuffer(binary, dtype=dtype, count=width,
                              offset=start + i * stride) for i in range(count)]
        arr = np.stack(rows)
    if acc.get("normalized") and np.issubdtype(dtype, np.unsignedinteger):
        arr = arr.astype(np.float64) / np.iinfo(dtype).max
    return arr


def load_glb(path) -> TriangleMesh:
    return load_glb_bytes(Path(path).read_bytes(), source=str(path))


def load_glb_bytes(data: bytes, source: str = "<bytes>") -> TriangleMesh:
    chunks = _split_glb(data)
    try:
        gltf = json.loads(chunks[CHUNK_JSON])
    except json.JSONDecodeError as exc:
        raise ParseError(f"GLB JSON chunk is invalid: {exc}") from exc
    binary = chunks.get(CHUNK_BIN, b"")

    meshes = gltf.get("meshes") or []
    if not meshes:
        raise EmptyMesh(f"{source}: GLB contains no mesh")
    prim = (meshes[0].get("primitives") or [None])[0]
    if prim is None:
        raise EmptyMesh(f"{source}: mesh has no primitives")
    if prim.get("mode", 4) != 4:
        raise ParseError("only triangle primitives are supported")

    attrs = prim.get("attributes", {})
    if "POSITION" not in attrs:
        raise ParseError("primitive has no POSITION attribute")
    positions = _read_accessor(gltf, binary, attrs["POSITION"]).astype(np.float64)

    if "indices" in prim:
        indices = _read_accessor(gltf, binary, prim["indices"]).reshape(-1)
    else:
        indices = np.arange(len(positions), dtype=np.uint32)
    if len(indices) % 3 != 0:
        raise ParseError("index count is not a multiple of 3")
    faces = indices.reshape(-1, 3).astype(np.int64)
    if faces.size == 0:
        raise EmptyMesh(f"{source}: no triangles")

    colors = None
    if "COLOR_0" in attrs:
        c = _read_accessor(gltf, binary, attrs["COLOR_0"])
        colors = np.clip(c[:, :3].astype(np.float64), 0.0, 1.0)
    return TriangleMesh(positions, faces, colors)


def encode_glb(mesh: TriangleMesh) -> bytes:
    """Serialize a mesh as a minimal single-primitive GLB."""
    positions = mesh.vertices.astype(np.float32)
    indices = mesh.faces.astype(np.uint32).reshape(-1)

    blobs = [positions.tobytes(), indices.tobytes()]
    views = [
        {"buffer": 0, "byteOffset": 0, "byteLength": len(blobs[0])},
        {"buffer": 0, "byteOffset": len(blobs[0]), "byteLength": len(blobs[1])},
    ]
    accessors = [
        {
            "bufferView": 0,
            "componentType": 5126,
            "count": len(positions),
            "type": "VEC3",
            "min": positions.min(axis=0).tolist(),
            "max": positions.max(axis=0).tolist(),
        },
        {
            "bufferView": 1,
            "componentType": 5125,
            "count": len(indices),
            "type": "SCALAR",
        },
    ]
    attributes = {"POSITION": 0}
    if mesh.vertex_colors is not None:
        colors = mesh.vertex_colors.astype(np.float32)
        views.append({"buffer": 0, "byteOffset": sum(len(b) for b in blobs),
                      "byteLength": colors.nbytes})
        blobs.append(colors.tobytes())
        accessors.append({"bufferView": 2, "componentType": 5126,
                          "count": len(colors), "type": "VEC3"})
        attributes["COLOR_0"] = 2

    binary = b"".join(blobs)
    binary += b"\x00" * (-len(binary) % 4)
    gltf = {
        "asset": {"version": "2.0"},
        "buffers": [{"byteLength": len(binary)}],
        "bufferViews": views,
        "accessors": accessors,
        "meshes": [{"primitives": [{"attributes": attributes, "indices": 1,
                                    "mode": 4}]}],
        "scenes": [{"nodes": [0]}],
        "scene": 0,
        "nodes": [{"mesh": 0}],
    }
    payload = json.dumps(gltf, separators=(",", ":"), sort_keys=True).encode()
    payload += b" " * (-len(payload) % 4)

    total = 12 + 8 + len(payload) + 8 + len(binary)
    out = struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(payload), CHUNK_JSON) + payload
    out += struct.pack("<II", len(binary), CHUNK_BIN) + binary
    return out


def save_glb(mesh: TriangleMesh, path) -> None:
    Path(path).write_bytes(encode_glb(mesh))


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Save as OBJ or GLB depending on the suffix."""
    path = Path(path)
    if path.suffix.lower() == ".obj":
        save_obj(mesh, path)
    elif path.suffix.lower() == ".glb":
        save_glb(mesh, path)
    else:
        raise ParseError(f"cannot infer mesh format from {path.name!r}")
