"""HTTP API over annotation sessions.

Sessions live in memory behind per-session locks; every mutating request is
serialized per session, so concurrent conflicting POSTs apply in some serial
order.  All error responses share one envelope: {code, message, details}.
Preview PNGs are rendered lazily and cached until the next mutation.  When a
snapshot directory is configured, sessions are persisted as JSON + the
original upload and restored on startup.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, File, Request, Response, UploadFile
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .binarize import ThresholdParams
from .config import ServiceConfig
from .errors import EmptyRoi, InkLabelError, PhaseError, UnknownSession
from .export import export_zip_bytes
from .morphology import recipe_from_json, recipe_to_json
from .raster import WHITE, decode_page, encode_indexed_png, encode_rgb_png, format_hex_color
from .session import AnnotationSession

_STATUS = {
    "UnknownSession": 404,
    "UnknownUnit": 404,
    "UnknownLabel": 404,
    "DuplicateName": 409,
    "DuplicateColor": 409,
    "LabelInUse": 409,
    "SessionFinalized": 409,
    "UnlabeledUnitsRemain": 409,
    "ConfirmationRequired": 409,
    "PhaseError": 409,
    "LabelCapacityExceeded": 409,
    "NotFinalized": 409,
    "NoForeground": 422,
    "EmptyRecipe": 422,
    "BadWindow": 422,
    "ConfigError": 422,
    "UnsupportedFormat": 415,
    "CorruptImage": 400,
}

_MASK_PALETTE = [(0, WHITE), (1, (0, 0, 0))]


@dataclass
class _Entry:
    session: AnnotationSession
    upload: bytes
    lock: threading.RLock = field(default_factory=threading.RLock)
    created_at: float = 0.0
    last_access: float = 0.0
    mutations: int = 0
    previews: dict = field(default_factory=dict)


class SessionRegistry:
    """In-memory session table with lazy idle eviction and snapshots."""

    def __init__(self, config: ServiceConfig, clock=time.monotonic):
        self.config = config
        self.clock = clock
        self._entries: dict[str, _Entry] = {}
        self._guard = threading.Lock()
        self.snapshot_dir = Path(config.snapshot_dir) if config.snapshot_dir else None
        if self.snapshot_dir:
            self.snapshot_dir.mkdir(parents=True, exist_ok=True)

    def _evict_stale(self, now: float) -> None:
        dead = [sid for sid, e in self._entries.items()
                if now - e.last_access > self.config.session_timeout_s]
        for sid in dead:
            del self._entries[sid]

    def create(self, session: AnnotationSession, upload: bytes) -> str:
        now = self.clock()
        sid = uuid.uuid4().hex[:16]
        entry = _Entry(session, upload, created_at=now, last_access=now)
        with self._guard:
            self._evict_stale(now)
            self._entries[sid] = entry
        if self.snapshot_dir:
            (self.snapshot_dir / f"{sid}.src").write_bytes(upload)
            self._write_snapshot(sid, entry)
        return sid

    def adopt(self, sid: str, session: AnnotationSession, upload: bytes) -> None:
        now = self.clock()
        with self._guard:
            self._entries[sid] = _Entry(session, upload, created_at=now, last_access=now)

    def get(self, sid: str) -> _Entry:
        now = self.clock()
        with self._guard:
            self._evict_stale(now)
            entry = self._entries.get(sid)
            if entry is None:
                raise UnknownSession(f"no session {sid!r}", id=sid)
            entry.last_access = now
            return entry

    def ids(self) -> list[str]:
        with self._guard:
            return list(self._entries)

    def _write_snapshot(self, sid: str, entry: _Entry) -> None:
        path = self.snapshot_dir / f"{sid}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(entry.session.to_snapshot(), indent=2), encoding="utf-8")
        tmp.replace(path)

    def mutated(self, sid: str, entry: _Entry) -> None:
        entry.mutations += 1
        entry.previews.clear()
        if self.snapshot_dir and entry.mutations % self.config.snapshot_every == 0:
            self._write_snapshot(sid, entry)

    def snapshot_all(self) -> None:
        if not self.snapshot_dir:
            return
        with self._guard:
            items = list(self._entries.items())
        for sid, entry in items:
            with entry.lock:
                self._write_snapshot(sid, entry)

    def restore(self) -> int:
        """Rebuild sessions persisted by an earlier run."""
        if not self.snapshot_dir:
            return 0
        n = 0
        for snap_path in sorted(self.snapshot_dir.glob("*.json")):
            sid = snap_path.stem
            src_path = self.snapshot_dir / f"{sid}.src"
            if not src_path.exists():
                continue
            try:
                snap = json.loads(snap_path.read_text(encoding="utf-8"))
                upload = src_path.read_bytes()
                name = snap.get("source", {}).get("file", "") or "restored.png"
                gray, color = decode_page(upload, name)
                session = AnnotationSession.from_snapshot(gray, snap, color)
                self.adopt(sid, session, upload)
                n += 1
            except (InkLabelError, ValueError, KeyError):
                continue
        return n


def _unit_payload(u) -> dict:
    return {
        "id": u.id,
        "polygon": {"points": [[int(x), int(y)] for x, y in u.polygon]},
        "bbox": list(u.bbox),
        "area": u.area,
    }


def _label_payload(lab) -> dict:
    return {"index": lab.index, "name": lab.name, "color": format_hex_color(lab.color)}


def _check_keys(payload: dict, allowed: set, what: str) -> None:
    unknown = set(payload) - allowed
    if unknown:
        raise ValueError(f"{what}: unknown keys {sorted(unknown)}")


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    cfg = config or ServiceConfig()
    registry = SessionRegistry(cfg)
    registry.restore()
    upload_cap = cfg.max_upload_mb * 1024 * 1024

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        import anyio

        limiter = anyio.to_thread.current_default_thread_limiter()
        limiter.total_tokens = max(cfg.worker_threads, 1)
        yield
        registry.snapshot_all()

    app = FastAPI(title="inklabel", lifespan=lifespan)
    app.state.registry = registry
    app.state.config = cfg

    @app.exception_handler(InkLabelError)
    async def _domain_error(request: Request, exc: InkLabelError):
        status = _STATUS.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "details": jsonable_encoder(exc.details)},
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"code": "InvalidArgument", "message": str(exc), "details": None},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "InvalidArgument",
                "message": "invalid request",
                "details": jsonable_encoder(exc.errors()),
            },
        )

    @app.middleware("http")
    async def _log_requests(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        print(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.perf_counter() - t0) * 1000, 2),
                }
            ),
            flush=True,
        )
        return response

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(registry.ids())}

    @app.post("/sessions", status_code=201)
    def create_session(image: UploadFile = File(...)):
        data = image.file.read(upload_cap + 1)
        if len(data) > upload_cap:
            return JSONResponse(
                status_code=413,
                content={
                    "code": "UploadTooLarge",
                    "message": f"upload exceeds {cfg.max_upload_mb} MB",
                    "details": None,
                },
            )
        gray, color = decode_page(data, image.filename or "upload.png")
        session = AnnotationSession(gray, color, source_name=image.filename or "upload.png")
        sid = registry.create(session, data)
        return {"id": sid, "width": session.width, "height": session.height}

    @app.get("/sessions/{sid}")
    def session_info(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            s = entry.session
            return {
                "id": sid,
                "phase": s.phase,
                "width": s.width,
                "height": s.height,
                "threshold": s.threshold_value,
                "epsilon": s.epsilon,
                "labels": [_label_payload(lab) for lab in s.labels],
                "units": len(s.units),
                "unlabeled": sum(1 for u in s.units if u.label is None),
                "recipe": recipe_to_json(s.recipe) if s.recipe is not None else None,
            }

    @app.post("/sessions/{sid}/binarize")
    def binarize_session(sid: str, payload: dict = Body(...)):
        entry = registry.get(sid)
        _check_keys(payload, {"method", "t", "window", "c", "invert", "confirm"}, "binarize")
        if "method" not in payload:
            raise ValueError("binarize requires a 'method'")
        params = ThresholdParams.from_json(
            {k: payload[k] for k in ("method", "t", "window", "c") if k in payload}
        )
        with entry.lock:
            t = entry.session.binarize(
                params, bool(payload.get("invert", False)), confirm=bool(payload.get("confirm", False))
            )
            registry.mutated(sid, entry)
            v = entry.mutations
        return {"threshold": t, "preview": f"/sessions/{sid}/mask.png?v={v}"}

    @app.post("/sessions/{sid}/recipe")
    def set_recipe(sid: str, payload: dict = Body(...)):
        entry = registry.get(sid)
        _check_keys(payload, {"steps", "confirm"}, "recipe")
        steps = recipe_from_json(payload.get("steps", []))
        with entry.lock:
            entry.session.apply_grouping(steps, confirm=bool(payload.get("confirm", False)))
            registry.mutated(sid, entry)
            v = entry.mutations
        return {"preview": f"/sessions/{sid}/grouped.png?v={v}"}

    @app.post("/sessions/{sid}/units")
    def make_units(sid: str, payload: Optional[dict] = Body(None)):
        payload = payload or {}
        _check_keys(payload, {"epsilon", "confirm"}, "units")
        entry = registry.get(sid)
        with entry.lock:
            entry.session.generate_units(
                float(payload.get("epsilon", 1.0)), confirm=bool(payload.get("confirm", False))
            )
            registry.mutated(sid, entry)
            return [_unit_payload(u) for u in entry.session.units]

    @app.get("/sessions/{sid}/units")
    def list_units(sid: str, status: Optional[str] = None):
        entry = registry.get(sid)
        with entry.lock:
            s = entry.session
            if status is None:
                return {"units": [dict(_unit_payload(u), label=u.label) for u in s.units]}
            if status != "unlabeled":
                raise ValueError(f"unsupported status filter {status!r}")
            return {"ids": s.unlabeled_ids()}

    @app.get("/sessions/{sid}/units/{uid}/crop")
    def unit_crop(sid: str, uid: int):
        entry = registry.get(sid)
        with entry.lock:
            key = f"crop:{uid}"
            if key not in entry.previews:
                entry.previews[key] = encode_rgb_png(entry.session.unit_crop(uid))
            return Response(entry.previews[key], media_type="image/png")

    @app.post("/sessions/{sid}/labels", status_code=201)
    def add_label(sid: str, payload: dict = Body(...)):
        entry = registry.get(sid)
        _check_keys(payload, {"name", "color"}, "labels")
        with entry.lock:
            lab = entry.session.add_label(payload.get("name", ""), payload.get("color"))
            registry.mutated(sid, entry)
            return _label_payload(lab)

    @app.delete("/sessions/{sid}/labels/{index}")
    def delete_label(sid: str, index: int):
        entry = registry.get(sid)
        with entry.lock:
            entry.session.delete_label(index)
            registry.mutated(sid, entry)
        return {"deleted": index}

    @app.post("/sessions/{sid}/assign")
    def assign(sid: str, payload: dict = Body(...)):
        entry = registry.get(sid)
        _check_keys(payload, {"unit", "label"}, "assign")
        if "unit" not in payload or "label" not in payload:
            raise ValueError("assign requires 'unit' and 'label'")
        with entry.lock:
            unit = entry.session.assign_label(int(payload["unit"]), int(payload["label"]))
            registry.mutated(sid, entry)
            return {"unit": unit.id, "label": unit.label}

    @app.post("/sessions/{sid}/roi")
    def roi(sid: str, payload: dict = Body(...)):
        entry = registry.get(sid)
        _check_keys(payload, {"rect", "mode", "label"}, "roi")
        rect = payload.get("rect")
        if not isinstance(rect, (list, tuple)) or len(rect) != 4:
            raise ValueError("roi 'rect' must be [x, y, w, h]")
        mode = payload.get("mode")
        label = payload.get("label")
        with entry.lock:
            try:
                affected = entry.session.annotate_roi(
                    rect, mode, int(label) if label is not None else None
                )
            except EmptyRoi:
                return {"affected": [], "code": "EmptyRoi"}
            if mode != "per_unit":
                registry.mutated(sid, entry)
            return {"affected": affected}

    @app.get("/sessions/{sid}/mask.png")
    def mask_png(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            if entry.session.mask is None:
                raise PhaseError("no binarized mask yet")
            if "mask" not in entry.previews:
                entry.previews["mask"] = encode_indexed_png(
                    entry.session.mask.astype("uint8"), _MASK_PALETTE
                )
            return Response(entry.previews["mask"], media_type="image/png")

    @app.get("/sessions/{sid}/grouped.png")
    def grouped_png(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            if entry.session.grouped is None:
                raise PhaseError("no grouping recipe applied yet")
            if "grouped" not in entry.previews:
                entry.previews["grouped"] = encode_indexed_png(
                    entry.session.grouped.astype("uint8"), _MASK_PALETTE
                )
            return Response(entry.previews["grouped"], media_type="image/png")

    @app.get("/sessions/{sid}/preview")
    def preview(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            if "preview" not in entry.previews:
                entry.previews["preview"] = encode_rgb_png(entry.session.render_preview())
            return Response(entry.previews["preview"], media_type="image/png")

    @app.post("/sessions/{sid}/finalize")
    def finalize(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            entry.session.finalize()
            registry.mutated(sid, entry)
        return {"ok": True, "phase": "Finalized"}

    @app.get("/sessions/{sid}/export.zip")
    def export_zip(sid: str):
        entry = registry.get(sid)
        with entry.lock:
            if "export" not in entry.previews:
                stem = Path(entry.session.source_name).stem or "groundtruth"
                entry.previews["export"] = export_zip_bytes(entry.session, stem)
            return Response(
                entry.previews["export"],
                media_type="application/zip",
                headers={"Content-Disposition": 'attachment; filename="groundtruth.zip"'},
            )

    return app
