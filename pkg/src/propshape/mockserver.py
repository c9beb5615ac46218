"""HTTP server exposing the three stage endpoints backed by the mock backend.

Lets the live-endpoint client path be exercised offline:
  POST /t2i        {"prompt": str, "depth_png": b64} -> {"image_png": b64}
  POST /remove-bg  {"image_png": b64}                -> {"image_png": b64}
  POST /img2mesh   {"image_png": b64}                -> {"glb": b64}
"""
from __future__ import annotations

import base64
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backends import MockBackend


def make_handler(backend: MockBackend):
    class MockStageHandler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet by default
            pass

        def _reply(self, code: int, payload: dict) -> None:
            body = json.dumps(payload).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length))
                if self.path == "/t2i":
                    out = backend.text_to_image(
                        payload["prompt"],
                        base64.b64decode(payload["depth_png"]))
                    self._reply(200, {"image_png": base64.b64encode(out).decode()})
                elif self.path == "/remove-bg":
                    out = backend.remove_background(
                        base64.b64decode(payload["image_png"]))
                    self._reply(200, {"image_png": base64.b64encode(out).decode()})
                elif self.path == "/img2mesh":
                    out = backend.image_to_mesh(
                        base64.b64decode(payload["image_png"]))
                    self._reply(200, {"glb": base64.b64encode(out).decode()})
                else:
                    self._reply(404, {"error": f"unknown route {self.path}"})
            except (KeyError, ValueError) as exc:
                self._reply(400, {"error": str(exc)})

    return MockStageHandler


def make_server(port: int = 0, seed: int = 0) -> ThreadingHTTPServer:
    """Bind the mock stage server; port 0 picks a free port."""
    backend = MockBackend(seed=seed)
    return ThreadingHTTPServer(("127.0.0.1", port), make_handler(backend))
