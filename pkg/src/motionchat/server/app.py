"""HTTP layer: session endpoints, SSE turn streaming, asset queries."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse

from .. import __version__
from ..errors import (BadRequest, MotionChatError, SessionBusy, SessionNotFound,
                      UnknownMethod, UnknownProfile)
from ..motion.skeleton import forward_kinematics
from ..motion.clip import RelativeTransform
from ..synthesis.embedding import retrieve_motion
from ..template.interchange import (conversation_checksum,
                                    render_conversation_record)
from .service import InteractionService

_STATUS = {SessionNotFound: 404, UnknownProfile: 400, UnknownMethod: 400,
           BadRequest: 400, SessionBusy: 409}


def _sse(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


def build_app(service: InteractionService) -> FastAPI:
    app = FastAPI(title="motionchat", version=__version__)
    assets = service.assets

    @app.exception_handler(MotionChatError)
    async def handle_domain_error(request: Request, exc: MotionChatError):
        return JSONResponse(status_code=_STATUS.get(type(exc), 500),
                            content={"error": type(exc).__name__,
                                     "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/profiles")
    def profiles():
        return service.list_profiles()

    @app.get("/metrics")
    def metrics():
        return service.metrics()

    @app.post("/sessions")
    def create_session(body: dict):
        session_id = service.create_session(
            body.get("profile_id"), body.get("method", "end_to_end"),
            body.get("sampler"))
        return {"session_id": session_id}

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        service.close_session(session_id)
        return {"closed": True}

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str):
        conv = service.get_history(session_id)
        record = render_conversation_record(conv)
        return {"interchange": record,
                "checksum": conversation_checksum(conv),
                "turns": len(conv.turns)}

    @app.post("/sessions/{session_id}/turn")
    def post_turn(session_id: str, body: dict):
        frames = service.post_turn(session_id, body)

        def stream():
            for event, data in frames:
                yield _sse(event, data)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/skeleton")
    def skeleton():
        sk = assets.skeleton
        return {"joint_names": sk.joint_names, "parents": sk.parent,
                "offsets": sk.offset.tolist(), "body_joints": sk.body_joints}

    @app.get("/motions/search")
    def motions_search(q: str, k: int = 8):
        hits = retrieve_motion(q, assets.index, k=k, embedder=assets.embedder)
        by_id = {e.motion_id: e for e in assets.entries}
        return [{"motion_id": mid, "score": score,
                 "caption": by_id[mid].consolidated_caption
                 or (by_id[mid].captions[0] if by_id[mid].captions else mid)}
                for mid, score in hits]

    @app.get("/motions/{motion_id}")
    def motion_detail(motion_id: str):
        entry = assets.entry(motion_id)
        joints = forward_kinematics(assets.skeleton, entry.clip)
        rel = assets.rels.get(motion_id, RelativeTransform.identity())
        tokens = assets.tokenizers.encode_motion(entry.clip, rel)
        return {"motion_id": motion_id,
                "caption": entry.consolidated_caption
                or (entry.captions[0] if entry.captions else motion_id),
                "fps": entry.clip.fps, "frames": entry.clip.frames,
                "joints": joints.round(5).tolist(),
                "tokens": {"body": tokens.body, "hand": tokens.hand,
                           "transform": tokens.transform}}

    @app.get("/idle-motions")
    def idle_motions():
        return {"ids": assets.idle_ids}

    @app.get("/media/{name}")
    def media(name: str):
        path = service.media_dir / name
        if not path.exists() or path.parent != service.media_dir:
            return JSONResponse(status_code=404, content={"error": "NotFound"})
        return FileResponse(path, media_type="audio/wav")

    return app
