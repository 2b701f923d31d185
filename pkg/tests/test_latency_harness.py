import json
import time

import pytest
from fastapi import FastAPI
from fastapi.responses import StreamingResponse

from motionchat.metrics import latency_harness

from .serving import ServerThread


def delay_app(delay_s: float) -> FastAPI:
    app = FastAPI()

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def create(body: dict):
        return {"session_id": "mock"}

    @app.delete("/sessions/{sid}")
    def close(sid: str):
        return {"closed": True}

    @app.post("/sessions/{sid}/turn")
    def turn(sid: str, body: dict):
        def stream():
            time.sleep(delay_s)
            yield ("event: speech_chunk\n"
                   f"data: {json.dumps({'tokens': [1, 2, 3], 't_ns': 0})}\n\n")
            yield ("event: final\n"
                   f"data: {json.dumps({'status': 'ok'})}\n\n")

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def test_fixed_delay_mock_server_mean_latency():
    with ServerThread(delay_app(0.1)) as server:
        record = latency_harness(server.base_url,
                                 [{"speech": {"text": "hi"}}],
                                 method="end_to_end", trials=50)
    summary = record.summary()
    assert summary["turns"] == 50
    assert 0.095 <= summary["full_response"]["mean"] <= 0.120
    assert summary["first_token"]["mean"] <= summary["full_response"]["mean"]
    assert summary["mean_tokens"] == 3.0


def test_zero_trials_rejected():
    with pytest.raises(ValueError):
        latency_harness("http://localhost:1", [{"x": 1}], "end_to_end", trials=0)


def test_empty_script_rejected():
    with pytest.raises(ValueError):
        latency_harness("http://localhost:1", [], "end_to_end", trials=1)


def test_record_rejects_nonmonotone():
    from motionchat.metrics import LatencyRecord

    rec = LatencyRecord(method="x")
    with pytest.raises(ValueError):
        rec.add(first=0.5, full=0.4, tokens=1)
