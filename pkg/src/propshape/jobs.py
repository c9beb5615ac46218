"""Generation jobs: a four-stage state machine over a persistent store.

Stages run strictly in order (text-to-image, background removal, mesh
reconstruction, anchoring). Stage outputs are content-addressed by a hash of
their inputs, stage name, and backend id, so re-running a job with identical
inputs performs zero backend calls. The store is a plain directory and
survives process restarts.
"""
from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .anchor import compute_anchor, apply_anchor
from .backends import BackendConfig, StageClients
from .depthmap import DepthImage, encode_depth_png
from .errors import (BackendRejection, EmptyForeground, InvalidArtifact,
                     StoreError, TransportError)
from .images import decode_png
from .mesh import Aabb, bounding_box
from .meshio import encode_glb
from .prompts import PromptSpec, TemplateKind
from . import meshio


class JobState(enum.Enum):
    PENDING = "pending"
    IMAGE_GENERATED = "image_generated"
    BACKGROUND_REMOVED = "background_removed"
    MESH_RECONSTRUCTED = "mesh_reconstructed"
    ANCHORED = "anchored"
    FAILED = "failed"


STAGES = ("text_to_image", "background_removal", "mesh_reconstruction",
          "anchoring")
_STATE_AFTER = {
    "text_to_image": JobState.IMAGE_GENERATED,
    "background_removal": JobState.BACKGROUND_REMOVED,
    "mesh_reconstruction": JobState.MESH_RECONSTRUCTED,
    "anchoring": JobState.ANCHORED,
}
_ORDER = [JobState.PENDING, JobState.IMAGE_GENERATED,
          JobState.BACKGROUND_REMOVED, JobState.MESH_RECONSTRUCTED,
          JobState.ANCHORED]


@dataclass
class GenerationJob:
    """One prompt-driven transformation tracked through the pipeline."""

    id: str
    prompt: PromptSpec
    input_rgb: str
    input_depth: str
    backend: str
    seed: int = 0
    state: JobState = JobState.PENDING
    artifacts: dict = field(default_factory=dict)
    transitions: list = field(default_factory=list)
    failure: dict | None = None
    reference_box: Aabb | None = None
    wall_time: float | None = None

    def advance(self, new_state: JobState) -> None:
        if self.state is JobState.FAILED:
            raise StoreError("job already failed; Failed is terminal")
        if new_state is not JobState.FAILED:
            if _ORDER.index(new_state) != _ORDER.index(self.state) + 1:
                raise StoreError(
                    f"illegal transition {self.state.value} -> {new_state.value}")
        self.state = new_state
        self.transitions.append({"state": new_state.value, "time": time.time()})

    def to_dict(self) -> dict:
        prompt = {
            "text": self.prompt.text,
            "kind": self.prompt.kind.value,
            "condition": self.prompt.condition,
            "quality_suffix": self.prompt.quality_suffix,
            "object_id": self.prompt.object_id,
        }
        box = None
        if self.reference_box is not None:
            box = {"min": self.reference_box.min.tolist(),
                   "max": self.reference_box.max.tolist()}
        return {
            "id": self.id, "prompt": prompt, "input_rgb": self.input_rgb,
            "input_depth": self.input_depth, "backend": self.backend,
            "seed": self.seed, "state": self.state.value,
            "artifacts": dict(self.artifacts), "transitions": list(self.transitions),
            "failure": self.failure, "reference_box": box,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationJob":
        p = data["prompt"]
        prompt = PromptSpec(text=p["text"], kind=TemplateKind(p["kind"]),
                            condition=p.get("condition"),
                            quality_suffix=p.get("quality_suffix"),
                            object_id=p.get("object_id"))
        box = data.get("reference_box")
        return cls(
            id=data["id"], prompt=prompt, input_rgb=data["input_rgb"],
            input_depth=data["input_depth"], backend=data["backend"],
            seed=data["seed"], state=JobState(data["state"]),
            artifacts=data.get("artifacts", {}),
            transitions=data.get("transitions", []),
            failure=data.get("failure"),
            reference_box=Aabb(box["min"], box["max"]) if box else None,
            wall_time=data.get("wall_time"),
        )


class JobStore:
    """Directory-backed job records plus a content-addressed asset cache."""

    def __init__(self, root):
        self.root = Path(root)
        self.jobs_dir = self.root / "jobs"
        self.assets_dir = self.root / "assets"
        self.cache_dir = self.root / "stage_cache"
        for d in (self.jobs_dir, self.assets_dir, self.cache_dir):
            d.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # -- assets ---------------------------------------------------------
    def put_asset(self, data: bytes, ext: str) -> str:
        name = f"{hashlib.sha256(data).hexdigest()}.{ext}"
        path = self.assets_dir / name
        if not path.exists():
            tmp = path.with_suffix(path.suffix + f".tmp{uuid.uuid4().hex}")
            tmp.write_bytes(data)
            os.replace(tmp, path)  # idempotent: identical content by name
        return name

    def get_asset(self, name: str) -> bytes:
        try:
            return (self.assets_dir / name).read_bytes()
        except OSError as exc:
            raise StoreError(f"missing asset {name}") from exc

    def asset_path(self, name: str) -> Path:
        return self.assets_dir / name

    # -- stage cache ----------------------------------------------------
    def cache_lookup(self, key: str) -> str | None:
        path = self.cache_dir / f"{key}.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())["artifact"]

    def cache_store(self, key: str, artifact: str) -> None:
        path = self.cache_dir / f"{key}.json"
        tmp = path.with_suffix(f".tmp{uuid.uuid4().hex}")
        tmp.write_text(json.dumps({"artifact": artifact}))
        os.replace(tmp, path)

    # -- job records ----------------------------------------------------
    def save_job(self, job: GenerationJob) -> None:
        with self._lock:
            path = self.jobs_dir / f"{job.id}.json"
            tmp = path.with_suffix(f".tmp{uuid.uuid4().hex}")
            tmp.write_text(json.dumps(job.to_dict(), indent=2, sort_keys=True))
            os.replace(tmp, path)

    def load_job(self, job_id: str) -> GenerationJob:
        path = self.jobs_dir / f"{job_id}.json"
        try:
            return GenerationJob.from_dict(json.loads(path.read_text()))
        except OSError as exc:
            raise StoreError(f"no job {job_id}") from exc

    def job_ids(self) -> list[str]:
        return sorted(p.stem for p in self.jobs_dir.glob("*.json"))


def _stage_key(stage: str, backend_id: str, *parts) -> str:
    h = hashlib.sha256()
    for piece in (stage, backend_id, *parts):
        h.update(str(piece).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


def submit_job(store: JobStore, rgb, depth: DepthImage, prompt: PromptSpec,
               config: BackendConfig, seed: int = 0, job_id: str | None = None,
               reference_box: Aabb | None = None) -> str:
    """Persist a new Pending job and return its id.

    `rgb` may be PNG bytes or a path; both are validated before anything is
    stored so unreadable inputs fail fast with StoreError.
    """
    if isinstance(rgb, (str, Path)):
        try:
            rgb_bytes = Path(rgb).read_bytes()
        except OSError as exc:
            raise StoreError(f"cannot read RGB asset {rgb}") from exc
    else:
        rgb_bytes = bytes(rgb)
    try:
        decode_png(rgb_bytes)
    except Exception as exc:
        raise StoreError(f"RGB asset is not a decodable image: {exc}") from exc

    job = GenerationJob(
        id=job_id or uuid.uuid4().hex,
        prompt=prompt,
        input_rgb=store.put_asset(rgb_bytes, "png"),
        input_depth=store.put_asset(encode_depth_png(depth), "png"),
        backend=config.backend_id,
        seed=seed,
        reference_box=reference_box,
    )
    job.transitions.append({"state": job.state.value, "time": time.time()})
    store.save_job(job)
    return job.id


def _call_with_retry(config: BackendConfig, fn):
    attempt = 0
    while True:
        try:
            return fn()
        except TransportError:
            if attempt >= config.max_retries:
                raise
            time.sleep(config.backoff_base * (2 ** attempt))
            attempt += 1


def _cached_stage(store: JobStore, config: BackendConfig, key: str, ext: str,
                  produce) -> str:
    cached = store.cache_lookup(key)
    if cached is not None:
        return cached
    data = _call_with_retry(config, produce)
    name = store.put_asset(data, ext)
    store.cache_store(key, name)
    return name


def _reconstruct(store: JobStore, config: BackendConfig,
                 clients: StageClients, image_asset: str, seed: int) -> str:
    """Image-to-mesh with validation; the result must parse as a nonempty GLB."""
    key = _stage_key("img2mesh", config.backend_id, image_asset, seed)

    def produce() -> bytes:
        glb = clients.image_to_mesh(store.get_asset(image_asset))
        try:
            mesh = meshio.load_glb_bytes(glb)
        except Exception as exc:
            raise InvalidArtifact(f"reconstruction returned bad GLB: {exc}") from exc
        if mesh.n_faces == 0:
            raise InvalidArtifact("reconstruction returned an empty mesh")
        return glb

    return _cached_stage(store, config, key, "glb", produce)


def run_job(store: JobStore, job_id: str, config: BackendConfig,
            clients: StageClients | None = None,
            token: str | None = None) -> GenerationJob:
    """Drive a Pending job to a terminal state (Anchored or Failed)."""
    job = store.load_job(job_id)
    if job.state is not JobState.PENDING:
        raise StoreError(f"job {job_id} is {job.state.value}, not pending")
    if clients is None:
        clients = StageClients(config, seed=job.seed, token=token)
    start = time.monotonic()
    stage = STAGES[0]
    try:
        # Stage 1: depth-conditioned text-to-image
        key = _stage_key("t2i", config.backend_id, job.input_depth,
                         job.prompt.text)
        image = _cached_stage(
            store, config, key, "png",
            lambda: clients.text_to_image(job.prompt.text,
                                          store.get_asset(job.input_depth)))
        job.artifacts["image"] = image
        job.advance(JobState.IMAGE_GENERATED)
        store.save_job(job)

        # Stage 2: background removal
        stage = STAGES[1]
        key = _stage_key("bg", config.backend_id, image)
        foreground = _cached_stage(
            store, config, key, "png",
            lambda: clients.remove_background(store.get_asset(image)))
        job.artifacts["foreground"] = foreground
        job.advance(JobState.BACKGROUND_REMOVED)
        store.save_job(job)

        # Stage 3: image-to-mesh
        stage = STAGES[2]
        mesh_asset = _reconstruct(store, config, clients, foreground, job.seed)
        job.artifacts["mesh"] = mesh_asset
        job.advance(JobState.MESH_RECONSTRUCTED)
        store.save_job(job)

        # Stage 4: spatial anchoring against the runtime reference extents
        stage = STAGES[3]
        if job.reference_box is not None:
            reference = job.reference_box
        else:
            # tracking-reference branch: reconstruct the raw RGB capture
            ref_asset = _reconstruct(store, config, clients, job.input_rgb,
                                     job.seed)
            job.artifacts["runtime_reference"] = ref_asset
            reference = bounding_box(
                meshio.load_glb_bytes(store.get_asset(ref_asset)))
        mesh = meshio.load_glb_bytes(store.get_asset(mesh_asset))
        anchored = apply_anchor(mesh, compute_anchor(mesh, reference))
        job.artifacts["anchored_mesh"] = store.put_asset(encode_glb(anchored),
                                                         "glb")
        job.advance(JobState.ANCHORED)
    except (TransportError, BackendRejection, InvalidArtifact,
            EmptyForeground, StoreError, ValueError) as exc:
        job.failure = {"stage": stage, "reason": f"{type(exc).__name__}: {exc}"}
        job.state = JobState.FAILED
        job.transitions.append({"state": JobState.FAILED.value,
                                "time": time.time()})
    job.wall_time = time.monotonic() - start
    store.save_job(job)
    return job
