"""Pipeline stage backends: the deterministic in-process mock and the HTTP
client for live endpoints.

Wire protocol (base64-JSON POST bodies):
  t2i        {"prompt": str, "depth_png": b64} -> {"image_png": b64}
  bg-removal {"image_png": b64}                -> {"image_png": b64 with alpha}
  img2mesh   {"image_png": b64}                -> {"glb": b64}
"""
from __future__ import annotations

import base64
import hashlib
import json
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

from .depthmap import DepthImage, decode_depth_png
from .errors import BackendRejection, TransportError
from .images import decode_png, encode_png
from .meshio import encode_glb
from .mockmesh import FIXED_RED, color_from_prompt, extrude_heightfield

MOCK = "mock"


@dataclass(frozen=True)
class BackendConfig:
    """Endpoints plus retry policy for one pipeline run."""

    t2i_endpoint: str = MOCK
    bg_removal_endpoint: str = MOCK
    img2mesh_endpoint: str = MOCK
    timeout: float = 120.0
    max_retries: int = 2
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def backend_id(self) -> str:
        if (self.t2i_endpoint == MOCK and self.bg_removal_endpoint == MOCK
                and self.img2mesh_endpoint == MOCK):
            return MOCK
        digest = hashlib.sha256("|".join([
            self.t2i_endpoint, self.bg_removal_endpoint,
            self.img2mesh_endpoint]).encode()).hexdigest()[:12]
        return f"live-{digest}"


class MockBackend:
    """Offline stand-in for all three stages.

    The synthetic text-to-image output stores depth in the red channel and
    the prompt-hash tint in green/blue, so the downstream reconstruction can
    rebuild the same heightfield the direct mock generator would produce.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def text_to_image(self, prompt_text: str, depth_png: bytes) -> bytes:
        depth = decode_depth_png(depth_png)
        _, g, b = color_from_prompt(prompt_text)
        fg = depth.foreground
        rgb = np.zeros((depth.height, depth.width, 3), dtype=np.uint8)
        rgb[..., 0] = np.rint(depth.values * 255).astype(np.uint8)
        rgb[fg, 1] = int(round(g * 255))
        rgb[fg, 2] = int(round(b * 255))
        return encode_png(rgb)

    def remove_background(self, image_png: bytes) -> bytes:
        arr = decode_png(image_png)
        rgb = arr[..., :3]
        alpha = np.where(rgb.any(axis=-1), 255, 0).astype(np.uint8)
        return encode_png(np.dstack([rgb, alpha]))

    def image_to_mesh(self, image_png: bytes) -> bytes:
        arr = decode_png(image_png)
        if arr.shape[-1] == 4:
            fg = arr[..., 3] > 0
        else:
            fg = arr[..., :3].any(axis=-1)
        values = np.where(fg, arr[..., 0] / 255.0, 0.0)
        depth = DepthImage(arr.shape[1], arr.shape[0], values)
        if fg.any():
            g = arr[..., 1][fg].max() / 255.0
            b = arr[..., 2][fg].max() / 255.0
        else:
            g = b = 0.0
        mesh = extrude_heightfield(depth, (FIXED_RED, g, b), self.seed)
        return encode_glb(mesh)


class HttpBackend:
    """POSTs base64-JSON bodies to one stage endpoint.

    4xx responses are final (BackendRejection); 5xx, timeouts, and transport
    failures raise TransportError, which the job runner retries.
    """

    def __init__(self, endpoint: str, timeout: float, token: str | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.token = token

    def _post(self, payload: dict) -> dict:
        body = json.dumps(payload).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        req = urllib.request.Request(self.endpoint, data=body, headers=headers,
                                     method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            detail = f"{self.endpoint} -> HTTP {exc.code}"
            if 400 <= exc.code < 500:
                raise BackendRejection(detail) from exc
            raise TransportError(detail) from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"{self.endpoint}: {exc}") from exc


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(payload: dict, key: str) -> bytes:
    try:
        return base64.b64decode(payload[key])
    except (KeyError, ValueError) as exc:
        raise BackendRejection(f"response missing/invalid field {key!r}") from exc


class StageClients:
    """Resolves each stage of a BackendConfig to mock or HTTP execution."""

    def __init__(self, config: BackendConfig, seed: int = 0,
                 token: str | None = None):
        self.config = config
        self.mock = MockBackend(seed=seed)
        self.token = token

    def text_to_image(self, prompt_text: str, depth_png: bytes) -> bytes:
        if self.config.t2i_endpoint == MOCK:
            return self.mock.text_to_image(prompt_text, depth_png)
        client = HttpBackend(self.config.t2i_endpoint, self.config.timeout,
                             self.token)
        payload = client._post({"prompt": prompt_text, "depth_png": _b64(depth_png)})
        return _unb64(payload, "image_png")

    def remove_background(self, image_png: bytes) -> bytes:
        if self.config.bg_removal_endpoint == MOCK:
            return self.mock.remove_background(image_png)
        client = HttpBackend(self.config.bg_removal_endpoint,
                             self.config.timeout, self.token)
        payload = client._post({"image_png": _b64(image_png)})
        return _unb64(payload, "image_png")

    def image_to_mesh(self, image_png: bytes) -> bytes:
        if self.config.img2mesh_endpoint == MOCK:
            return self.mock.image_to_mesh(image_png)
        client = HttpBackend(self.config.img2mesh_endpoint,
                             self.config.timeout, self.token)
        payload = client._post({"image_png": _b64(image_png)})
        return _unb64(payload, "glb")
