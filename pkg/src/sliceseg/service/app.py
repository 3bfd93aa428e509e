"""HTTP surface over the engine: thin handlers, SSE progress, PNG slices.

Handlers only adapt types; all behavior lives in the engine so the batch
CLI and the HTTP path stay equivalent.
"""

from __future__ import annotations

import io
import json
import logging

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from ..annotation.mask import rle_encode
from ..annotation.prompts import BoxPrompt, PointPrompt, Polarity
from ..config import ServiceConfig
from ..engine import Engine
from ..errors import EngineError, UploadTooLarge
from ..refine.ops import BrushAction, BrushOp, MorphKind
from ..volume.model import Axis
from . import schemas

log = logging.getLogger("sliceseg.service")


def _mask_response(mask) -> schemas.MaskResponse:
    return schemas.MaskResponse(
        mask_rle=rle_encode(mask), rows=mask.rows, cols=mask.cols
    )


def _png(pixels) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def create_app(config: ServiceConfig | None = None,
               engine: Engine | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    engine = engine or Engine(config)
    app = FastAPI(title="sliceseg", version="0.1.0")
    app.state.engine = engine
    app.state.config = config

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    # -- volumes ------------------------------------------------------------

    @app.post("/volumes", response_model=schemas.VolumeInfo)
    async def upload_volume(request: Request, format: str = "auto"):
        declared = request.headers.get("content-length")
        if declared and int(declared) > config.upload_limit:
            raise UploadTooLarge(
                f"upload of {declared} bytes exceeds limit {config.upload_limit}"
            )
        raw = await request.body()
        if len(raw) > config.upload_limit:
            raise UploadTooLarge(
                f"upload of {len(raw)} bytes exceeds limit {config.upload_limit}"
            )
        meta = engine.add_volume(raw, format)
        return schemas.VolumeInfo(
            volume_id=meta["volume_id"], dims=tuple(meta["dims"]),
            spacing=tuple(meta["spacing"]),
            intensity_range=tuple(meta["intensity_range"]),
        )

    @app.get("/volumes/{volume_id}", response_model=schemas.VolumeInfo)
    def volume_info(volume_id: str):
        meta = engine.volume_meta(volume_id)
        return schemas.VolumeInfo(
            volume_id=meta["volume_id"], dims=tuple(meta["dims"]),
            spacing=tuple(meta["spacing"]),
            intensity_range=tuple(meta["intensity_range"]),
        )

    @app.get("/volumes/{volume_id}/slices/{axis}/{index}")
    def slice_png(volume_id: str, axis: Axis, index: int,
                  window: float | None = None, level: float | None = None):
        img = engine.slice_image(volume_id, axis, index, window, level)
        return Response(content=_png(img.pixels), media_type="image/png")

    # -- predictors ------------------------------------------------------------

    @app.get("/predictors", response_model=list[schemas.PredictorInfo])
    def predictors():
        return [d.to_dict() for d in engine.registry.descriptors()]

    # -- sessions ------------------------------------------------------------

    @app.post("/sessions", response_model=schemas.SessionCreated)
    def create_session(body: schemas.SessionCreate):
        session = engine.create_session(
            body.volume_id, Axis(body.axis), body.label, body.predictor_id
        )
        return schemas.SessionCreated(session_id=session.session_id)

    @app.get("/sessions/{session_id}", response_model=schemas.SessionDetail)
    def session_detail(session_id: str):
        session = engine.get_session(session_id)
        with session.lock:
            conditional = []
            for index in sorted(session.conditional):
                entry = session.conditional[index]
                box = None
                if entry.prompts.box is not None:
                    b = entry.prompts.box
                    box = schemas.BoxIn(r0=b.r0, c0=b.c0, r1=b.r1, c1=b.c1)
                conditional.append(schemas.ConditionalOut(
                    slice=index,
                    points=[
                        schemas.PointIn(row=p.row, col=p.col,
                                        polarity=p.polarity.value)
                        for p in entry.prompts.points
                    ],
                    box=box,
                    mask_rle=rle_encode(entry.mask) if entry.mask else None,
                ))
            propagated = [
                schemas.PropagatedOut(slice=index,
                                      mask_rle=rle_encode(session.propagated[index]))
                for index in sorted(session.propagated)
            ]
            return schemas.SessionDetail(
                session_id=session.session_id, volume_id=session.volume_id,
                axis=session.axis.value, label=session.label_id,
                predictor_id=session.predictor_id, revision=session.revision,
                rows=session.rows, cols=session.cols, n_slices=session.n_slices,
                window=session.window, level=session.level,
                conditional=conditional, propagated=propagated,
                edited=sorted(session.edited),
            )

    @app.post("/sessions/{session_id}/prompts", response_model=schemas.MaskResponse)
    def add_prompts(session_id: str, body: schemas.PromptRequest):
        points = [
            PointPrompt(row=p.row, col=p.col, polarity=Polarity(p.polarity))
            for p in body.points
        ]
        box = None
        if body.box is not None:
            box = BoxPrompt(r0=body.box.r0, c0=body.box.c0,
                            r1=body.box.r1, c1=body.box.c1)
        mask = engine.add_prompts(session_id, body.slice, points, box)
        return _mask_response(mask)

    @app.post("/sessions/{session_id}/propagate", response_model=schemas.JobCreated)
    def propagate(session_id: str, body: schemas.PropagateRequest):
        job = engine.propagate(session_id, body.mode, body.from_slice)
        return schemas.JobCreated(job_id=job.job_id)

    @app.post("/sessions/{session_id}/refine", response_model=schemas.MaskResponse)
    def refine(session_id: str, body: schemas.RefineRequest):
        if body.morph is not None:
            mask = engine.refine_morph(
                session_id, body.slice, MorphKind(body.morph), int(body.radius)
            )
        else:
            if body.center is None or body.action is None:
                raise EngineError("refine needs either morph or center+action")
            op = BrushOp(slice_index=body.slice, center=tuple(body.center),
                         radius=body.radius, action=BrushAction(body.action))
            mask = engine.refine_brush(session_id, op)
        return _mask_response(mask)

    @app.post("/sessions/{session_id}/undo", response_model=schemas.RevisionResponse)
    def undo(session_id: str):
        return schemas.RevisionResponse(revision=engine.undo(session_id))

    @app.post("/sessions/{session_id}/redo", response_model=schemas.RevisionResponse)
    def redo(session_id: str):
        return schemas.RevisionResponse(revision=engine.redo(session_id))

    @app.get("/sessions/{session_id}/labelmap")
    def labelmap(session_id: str, format: str = "nrrd"):
        payload = engine.export_labelmap(session_id, format)
        ext = "nii" if format.startswith("nifti") else "nrrd"
        return Response(
            content=payload, media_type="application/octet-stream",
            headers={
                "Content-Disposition":
                    f'attachment; filename="session_{session_id}.{ext}"'
            },
        )

    # -- jobs ------------------------------------------------------------

    @app.get("/jobs/{job_id}", response_model=schemas.JobInfo)
    def job_status(job_id: str):
        return engine.job_status(job_id).to_dict()

    @app.post("/jobs/{job_id}/cancel", response_model=schemas.JobInfo)
    def job_cancel(job_id: str):
        return engine.cancel_job(job_id).to_dict()

    @app.get("/jobs/{job_id}/events")
    def job_events(job_id: str):
        subscription = engine.subscribe_job(job_id)

        def stream():
            for event in subscription:
                yield f"data: {json.dumps(event)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    if config.ui_root is not None and config.ui_root.is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_root, html=True), name="ui")

    return app
