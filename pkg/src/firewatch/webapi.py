"""HTTP query API plus the live push channel.

Routes:
    GET /api/apps                         applications visible to the key
    GET /api/apps/{app_id}/devices        devices of an application
    GET /api/devices/{dev_id}/latest      newest stored record
    GET /api/devices/{dev_id}/records     records in a time range (from/to)
    GET /api/stats                        ingest and simulation counters
    WS  /live?app={id}&key={token}        stored records pushed in order;
                                          scenario-control commands travel
                                          the same socket as tagged messages

Every route requires a valid access_key (``key`` query parameter).  The
dashboard's static build, when present, is mounted at /dashboard.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles

from .netserver import AuthError, NetServer, NotFoundError

LIVE_POLL_S = 0.02


def create_app(server: NetServer, assets_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="firewatch", docs_url=None, redoc_url=None)

    def _authorized(fn):
        try:
            return fn()
        except AuthError as e:
            raise HTTPException(status_code=401, detail=str(e)) from None
        except NotFoundError as e:
            raise HTTPException(status_code=404, detail=f"not found: {e}") from None

    @app.get("/api/apps")
    def list_apps(key: str = Query(default="")):
        return _authorized(lambda: server.list_applications(key))

    @app.get("/api/apps/{app_id}/devices")
    def list_devices(app_id: str, key: str = Query(default="")):
        return _authorized(lambda: server.list_devices(app_id, key))

    @app.get("/api/devices/{dev_id}/latest")
    def latest(dev_id: str, key: str = Query(default="")):
        return _authorized(lambda: server.latest(dev_id, key))

    @app.get("/api/devices/{dev_id}/records")
    def records(
        dev_id: str,
        key: str = Query(default=""),
        t_from: float | None = Query(default=None, alias="from"),
        t_to: float | None = Query(default=None, alias="to"),
    ):
        return _authorized(lambda: server.device_records(dev_id, key, t_from, t_to))

    @app.get("/api/stats")
    def stats(key: str = Query(default="")):
        return _authorized(lambda: server.stats(key))

    @app.websocket("/live")
    async def live(ws: WebSocket, app_id: str = Query(alias="app"), key: str = Query(default="")):
        try:
            sub = server.subscribe(app_id, key)
        except AuthError:
            await ws.close(code=4401)
            return
        await ws.accept()
        try:
            while True:
                for event in sub.drain():
                    await ws.send_json({"type": "uplink", **event})
                if sub.disconnected:
                    await ws.send_json({"type": "overflow"})
                    await ws.close(code=4408)
                    return
                try:
                    raw = await asyncio.wait_for(ws.receive_text(), timeout=LIVE_POLL_S)
                except asyncio.TimeoutError:
                    continue
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_json({"type": "error", "error": "not json"})
                    continue
                if msg.get("type") == "scenario_control":
                    result = server.scenario_control(msg.get("command", {}))
                    await ws.send_json(
                        {"type": "ack", "ref": msg.get("ref"), "result": result}
                    )
                else:
                    await ws.send_json({"type": "error", "error": "unknown message type"})
        except WebSocketDisconnect:
            pass
        finally:
            server.unsubscribe(sub)

    if assets_dir is not None and Path(assets_dir).is_dir():
        app.mount("/dashboard", StaticFiles(directory=str(assets_dir), html=True), name="dashboard")

        @app.get("/")
        def root():
            return RedirectResponse("/dashboard/")

    return app
