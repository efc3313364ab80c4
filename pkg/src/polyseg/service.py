"""HTTP service hosting the interactive segmentation loop.

One session per uploaded volume (the session id is the volume id).
Sessions are persisted to the data directory as JSON next to the uploaded
volume bytes; segmentation runs as a background job, one at a time per
session, with polling for progress.
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from PIL import Image

from .backends import BackendSpec, RemoteBackend, parse_backend_spec
from .errors import BackendUnavailable, NoPositivePrompts, PolysegError
from .geometry import axis_set, pixel_to_world, slice_frames
from .pipeline import RunConfig, RunResult, run_pipeline
from .recompose import export_mesh
from .slicing import extract_slice, slice_to_png
from .volume import (
    MaskVolume,
    Volume,
    load_volume,
    mask_to_nifti_bytes,
    resample_isotropic,
    window_normalize,
)
from .geometry import Polyline, polylines_from_json, polylines_to_json

OVERLAY_RGB = (217, 70, 70)


@dataclass
class Job:
    id: str
    session_id: str
    state: str = "queued"  # queued | running | done | failed
    done: int = 0
    total: int = 0
    stats: dict | None = None
    error: str | None = None

    @property
    def progress(self) -> float:
        return self.done / self.total if self.total else 0.0


class Session:
    def __init__(self, sid: str, volume: Volume, volume_path: Path):
        self.id = sid
        self.volume = volume
        self.volume_path = volume_path
        self.polylines: list[Polyline] = []
        self.last_config: RunConfig | None = None
        self.last_result: RunResult | None = None
        self.lock = threading.Lock()
        self.active_job: str | None = None
        self._iso_cache = None

    def isotropic_normalized(self, window=(0.5, 99.5)):
        key = tuple(window)
        if self._iso_cache is None or self._iso_cache[0] != key:
            nv = window_normalize(resample_isotropic(self.volume), *window)
            self._iso_cache = (key, nv)
        return self._iso_cache[1]


class SessionStore:
    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Job] = {}
        self._load_existing()

    def _session_json(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.session.json"

    def _load_existing(self):
        for meta_path in sorted(self.data_dir.glob("*.session.json")):
            try:
                meta = json.loads(meta_path.read_text())
                vol_path = self.data_dir / meta["volume_file"]
                volume = load_volume(vol_path)
                sess = Session(meta["id"], volume, vol_path)
                sess.polylines = polylines_from_json(meta.get("prompts", {"polylines": []}))
                self.sessions[sess.id] = sess
            except (PolysegError, OSError, ValueError, KeyError):
                continue  # skip unreadable session files

    def persist(self, sess: Session):
        meta = {
            "id": sess.id,
            "volume_file": sess.volume_path.name,
            "prompts": polylines_to_json(sess.polylines),
        }
        if sess.last_config is not None:
            cfg = asdict(sess.last_config)
            cfg["backend"] = str(sess.last_config.backend)
            meta["last_config"] = cfg
        self._session_json(sess.id).write_text(json.dumps(meta, indent=2))

    def create_session(self, body: bytes) -> Session:
        try:
            volume = load_volume(body)
        except PolysegError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        sid = uuid.uuid4().hex[:12]
        vol_path = self.data_dir / f"{sid}.nii"
        vol_path.write_bytes(body)
        sess = Session(sid, volume, vol_path)
        self.sessions[sid] = sess
        self.persist(sess)
        return sess

    def get(self, sid: str) -> Session:
        sess = self.sessions.get(sid)
        if sess is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        return sess


def _config_from_body(body: dict) -> RunConfig:
    try:
        backend = body.get("backend", "flood:128")
        spec = parse_backend_spec(backend) if isinstance(backend, str) else BackendSpec(**backend)
        return RunConfig(
            k=int(body.get("k", 3)),
            stride_voxels=int(body.get("stride_voxels", 1)),
            backend=spec,
            min_axes=body.get("min_axes"),
            min_hits=int(body.get("min_hits", 1)),
            window=tuple(body.get("window", (0.5, 99.5))),
            largest_component=bool(body.get("largest_component", False)),
            closing_radius=int(body.get("closing_radius", 0)),
            seed=int(body.get("seed", 0)),
            workers=body.get("workers"),
        )
    except (ValueError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid config: {exc}") from exc


def _frame_for(sess: Session, cfg_window, k: int, stride: int, axis_id: int, index: int):
    nv = sess.isotropic_normalized(cfg_window)
    axes = axis_set(k)
    if not 0 <= axis_id < len(axes.axes):
        raise HTTPException(status_code=400, detail=f"axis_id out of range for k={k}")
    frames = slice_frames(nv, axes.axes[axis_id], axis_id, stride)
    if not 0 <= index < len(frames):
        raise HTTPException(
            status_code=400, detail=f"index out of range (axis has {len(frames)} frames)"
        )
    return nv, frames[index], len(frames)


def create_app(data_dir, default_window=(0.5, 99.5)) -> FastAPI:
    app = FastAPI(title="polyseg service")
    store = SessionStore(Path(data_dir))
    app.state.store = store

    @app.post("/api/volumes")
    async def upload_volume(request: Request):
        body = await request.body()
        sess = store.create_session(body)
        return {
            "id": sess.id,
            "dims": list(sess.volume.dims),
            "spacing": list(sess.volume.spacing),
        }

    @app.get("/api/volumes/{sid}/slice")
    def get_slice(
        sid: str,
        axis_id: int = Query(0),
        index: int = Query(0),
        k: int = Query(3),
        stride: int = Query(1),
    ):
        sess = store.get(sid)
        nv, frame, count = _frame_for(sess, default_window, k, stride, axis_id, index)
        png = slice_to_png(extract_slice(nv, frame))
        meta = frame.to_meta()
        meta["frame_count"] = count
        return Response(
            content=png,
            media_type="image/png",
            headers={"X-Frame-Meta": json.dumps(meta)},
        )

    @app.put("/api/sessions/{sid}/polylines")
    async def put_polylines(sid: str, request: Request):
        sess = store.get(sid)
        try:
            doc = await request.json()
            polylines = polylines_from_json(doc)
        except (ValueError, json.JSONDecodeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        sess.polylines = polylines
        store.persist(sess)
        return {"count": len(polylines)}

    @app.get("/api/sessions/{sid}/polylines")
    def get_polylines(sid: str):
        return polylines_to_json(store.get(sid).polylines)

    @app.post("/api/sessions/{sid}/segment")
    async def post_segment(sid: str, request: Request):
        sess = store.get(sid)
        body = await request.json() if await request.body() else {}
        cfg = _config_from_body(body)
        if not any(p.positive for p in sess.polylines):
            raise HTTPException(status_code=400, detail="no positive polylines in session")
        if cfg.backend.kind == "remote":
            try:
                RemoteBackend(cfg.backend.url, timeout=5.0).health()
            except BackendUnavailable as exc:
                raise HTTPException(status_code=503, detail=str(exc)) from exc
        with sess.lock:
            if sess.active_job is not None:
                raise HTTPException(status_code=409, detail="a job is already running")
            job = Job(id=uuid.uuid4().hex[:12], session_id=sid)
            store.jobs[job.id] = job
            sess.active_job = job.id

        def work():
            job.state = "running"
            try:
                def progress(done, total):
                    job.done, job.total = done, total

                result = run_pipeline(sess.volume, sess.polylines, cfg, progress_cb=progress)
                sess.last_config = cfg
                sess.last_result = result
                job.stats = result.stats
                job.state = "done"
                store.persist(sess)
            except PolysegError as exc:
                job.error = str(exc)
                job.state = "failed"
            finally:
                sess.active_job = None

        threading.Thread(target=work, daemon=True).start()
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return {
            "state": job.state,
            "progress": job.progress,
            "stats": job.stats,
            "error": job.error,
        }

    def _result_of(sid: str) -> RunResult:
        sess = store.get(sid)
        if sess.last_result is None:
            raise HTTPException(status_code=404, detail="session has no completed run")
        return sess.last_result

    @app.get("/api/sessions/{sid}/mask")
    def get_mask(sid: str):
        result = _result_of(sid)
        return Response(
            content=mask_to_nifti_bytes(result.mask),
            media_type="application/octet-stream",
            headers={"Content-Disposition": f'attachment; filename="{sid}_mask.nii"'},
        )

    @app.get("/api/sessions/{sid}/mesh")
    def get_mesh(sid: str):
        result = _result_of(sid)
        if result.mesh is None:
            raise HTTPException(status_code=404, detail="run produced an empty mask")
        import tempfile

        with tempfile.NamedTemporaryFile(suffix=".stl") as tmp:
            export_mesh(result.mesh, tmp.name, format="stl_binary")
            data = Path(tmp.name).read_bytes()
        return Response(
            content=data,
            media_type="model/stl",
            headers={"Content-Disposition": f'attachment; filename="{sid}.stl"'},
        )

    @app.get("/api/sessions/{sid}/mask/slice")
    def get_mask_slice(sid: str, axis_id: int = Query(0), index: int = Query(0)):
        sess = store.get(sid)
        result = _result_of(sid)
        cfg = sess.last_config or RunConfig()
        _, frame, _ = _frame_for(
            sess, cfg.window, cfg.k, cfg.stride_voxels, axis_id, index
        )
        mask = result.mask
        xs = np.arange(frame.width, dtype=np.float64)
        ys = np.arange(frame.height, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        world = pixel_to_world(frame, gx, gy).reshape(-1, 3)
        idx = np.round(mask.world_to_index(world)).astype(np.int64)
        hi = np.asarray(mask.dims) - 1
        ok = np.all((idx >= 0) & (idx <= hi), axis=1)
        hit = np.zeros(len(idx), dtype=bool)
        sel = idx[ok]
        hit[ok] = mask.data[sel[:, 0], sel[:, 1], sel[:, 2]]
        alpha = np.where(hit.reshape(frame.height, frame.width), 255, 0).astype(np.uint8)
        rgba = np.zeros((frame.height, frame.width, 4), dtype=np.uint8)
        rgba[..., 0], rgba[..., 1], rgba[..., 2] = OVERLAY_RGB
        rgba[..., 3] = alpha
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    return app


def serve(port: int, data_dir) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(data_dir), host="127.0.0.1", port=port, log_level="info")
