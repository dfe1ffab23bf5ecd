"""WebSocket gateway exposing one live run to browser consoles.

One process hosts one run. Interactive agents block the scheduler thread
inside their oracle until the claiming session answers or times out;
everything the consoles see is derived from recorded trace events.
"""

from __future__ import annotations

import asyncio
import json
import threading
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import runtime
from .errors import AutoOracleAmbiguous
from .oracle import InteractiveOracle, auto_oracle
from .parser import AssignChoice, parse_term
from .runtime import (Configuration, OracleDecision, OracleRequest,
                      TraceEvent, _is_visible)
from .staticcheck import CheckedProgram
from .terms import render, substitute

FALLBACK_PAGE = """<!doctype html>
<html><head><title>scpl console</title></head>
<body><h1>scpl gateway</h1>
<p>No console build found. Connect a WebSocket client to <code>/ws</code>.</p>
</body></html>
"""


class GatewayState:
    def __init__(self, checked: CheckedProgram, contract_name: str,
                 token: str, served: list[str], max_steps: int,
                 timeout: float):
        self.checked = checked
        self.contract_name = contract_name
        self.token = token
        self.max_steps = max_steps
        self.timeout = timeout
        self.lock = threading.Lock()
        self.frames: list[dict] = []  # {"frame": ..., "target": agent | None}
        self.claims: dict[str, int] = {}  # agent -> session id
        self.pending: dict[str, dict] = {}  # agent -> oracle_request frame
        self.oracles: dict[str, InteractiveOracle] = {}
        self.visible_count = 0
        self.done = False
        self.error: str | None = None
        self.thread: threading.Thread | None = None
        self.config = Configuration.activate(checked, self._provide,
                                             on_event=self._on_event)
        self.served = served or [name for name, _ in
                                 checked.program.activation]
        with self.lock:
            for name, cell in self.config.agents.items():
                self.frames.append({"frame": {
                    "type": "state", "agent": name,
                    "state_term": render(cell.state)}, "target": None})

    # runs on the scheduler thread
    def _on_event(self, event: TraceEvent, config: Configuration):
        frames = []
        if _is_visible(event):
            self.visible_count += 1
            frame = {"type": "event", "index": self.visible_count,
                     "agent": event.agent, "kind": event.kind,
                     "payload": event.data.get("payload", ""),
                     "recipients": event.data.get("recipients", [])}
            frames.append(frame)
        if event.kind in ("act", "recv", "final") \
                and event.agent in config.agents:
            frames.append({"type": "state", "agent": event.agent,
                           "state_term": render(config.agents[event.agent].state)})
        with self.lock:
            for f in frames:
                self.frames.append({"frame": f, "target": None})

    # runs on the scheduler thread
    def _provide(self, request: OracleRequest) -> OracleDecision:
        agent = request.agent
        if agent not in self.served:
            # agents without an operator idle rather than fault the run
            try:
                return auto_oracle(request)
            except AutoOracleAmbiguous:
                return OracleDecision("pass")
        with self.lock:
            claimed = agent in self.claims
            if claimed:
                oracle = self.oracles.setdefault(
                    agent, InteractiveOracle(timeout=self.timeout))
                frame = _request_frame(request)
                self.pending[agent] = frame
                self.frames.append({"frame": frame, "target": agent})
        if not claimed:
            return OracleDecision("pass")
        try:
            decision = oracle(request)
        finally:
            with self.lock:
                self.pending.pop(agent, None)
        return decision

    def ensure_running(self):
        with self.lock:
            if self.thread is not None:
                return
            self.thread = threading.Thread(target=self._run, daemon=True)
            self.thread.start()

    def _run(self):
        try:
            runtime.run(self.config,
                        runtime.random_scheduler(0, fairness=50),
                        max_steps=self.max_steps)
        except Exception as exc:
            self.error = str(exc)
        finally:
            self.done = True
            # terminal frame so sessions can stop reading
            with self.lock:
                self.frames.append({"frame": {
                    "type": "event", "index": 0, "agent": "",
                    "kind": "halt", "payload": "", "recipients": []},
                    "target": None})

    def claim(self, agent: str, session_id: int) -> dict | None:
        """Returns an error frame, or None on success."""
        with self.lock:
            if agent not in self.config.agents:
                return _error("unknown-agent", f"no agent named {agent!r}")
            if agent not in self.served:
                return _error("not-interactive",
                              f"{agent!r} is not served interactively")
            if agent in self.claims:
                return _error("claimed", f"{agent!r} is already claimed")
            self.claims[agent] = session_id
            # a fresh operator gets to revisit a cached pass
            cell = self.config.agents[agent]
            if cell.decision is not None and cell.decision[1] == "pass":
                cell.decision = None
        return None

    def release(self, agent: str, session_id: int):
        with self.lock:
            if self.claims.get(agent) == session_id:
                del self.claims[agent]

    def decide(self, agent: str, frame: dict) -> dict | None:
        with self.lock:
            pending = self.pending.get(agent)
            oracle = self.oracles.get(agent)
        if pending is None or oracle is None \
                or pending["request_id"] != frame.get("request_id"):
            return _error("no-request", "no matching pending oracle request")
        if frame["type"] == "pass":
            oracle.decisions.put(OracleDecision("pass"))
            return None
        try:
            bindings = {var: parse_term(text)
                        for var, text in frame.get("bindings", {}).items()}
            index = int(frame["alternative"])
        except Exception as exc:
            return _error("bad-decision", str(exc))
        oracle.decisions.put(OracleDecision("choose", index, bindings))
        return None

    def hello_frame(self) -> dict:
        with self.lock:
            agents = {
                name: {"state": render(cell.state),
                       "interactive": name in self.served,
                       "claimed": name in self.claims,
                       "alive": cell.alive}
                for name, cell in self.config.agents.items()}
        return {"type": "hello", "agents": agents,
                "contract_name": self.contract_name}


def _request_frame(request: OracleRequest) -> dict:
    alts = []
    for i, alt in enumerate(request.alternatives):
        choices = []
        for cond in alt.residual:
            if isinstance(cond, AssignChoice):
                choices.append({
                    "var": cond.var,
                    "options": [render(substitute(o, alt.theta))
                                for o in cond.options]})
        alts.append({"index": i,
                     "act_pattern": render(alt.describe()),
                     "required_vars": list(alt.unbound),
                     "choice_options": choices})
    return {"type": "oracle_request", "request_id": request.request_id,
            "agent": request.agent, "alternatives": alts,
            "domain": [render(t) for t in request.domain],
            "fresh_names": list(request.fresh_names)}


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


def build_app(checked: CheckedProgram, contract_name: str = "contract",
              token: str = "", served: list[str] | None = None,
              max_steps: int = 1000, timeout: float = 30.0) -> FastAPI:
    state = GatewayState(checked, contract_name, token, served or [],
                         max_steps, timeout)
    app = FastAPI()
    app.state.gateway = state
    session_counter = [0]

    @app.get("/status")
    def status():
        with state.lock:
            return {"contract": state.contract_name, "done": state.done,
                    "error": state.error, "events": len(state.frames),
                    "claims": sorted(state.claims)}

    @app.get("/trace")
    def trace():
        return PlainTextResponse(state.config.trace.jsonl())

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session_counter[0] += 1
        session_id = session_counter[0]
        agent = None
        try:
            # first frame must be a claim
            while agent is None:
                frame = json.loads(await ws.receive_text())
                if frame.get("type") != "claim":
                    await ws.send_json(_error("expected-claim",
                                              "claim an agent first"))
                    continue
                if state.token and frame.get("token") != state.token:
                    await ws.send_json(_error("auth", "bad token"))
                    continue
                err = state.claim(frame.get("agent", ""), session_id)
                if err is not None:
                    await ws.send_json(err)
                    continue
                agent = frame["agent"]
            await ws.send_json(state.hello_frame())
            state.ensure_running()

            stop = asyncio.Event()

            async def sender():
                cursor = 0
                while not stop.is_set():
                    with state.lock:
                        batch = state.frames[cursor:]
                        cursor = len(state.frames)
                    for entry in batch:
                        if entry["target"] in (None, agent):
                            await ws.send_json(entry["frame"])
                    await asyncio.sleep(0.05)

            send_task = asyncio.create_task(sender())
            try:
                while True:
                    frame = json.loads(await ws.receive_text())
                    if frame.get("type") in ("decision", "pass"):
                        err = state.decide(agent, frame)
                        if err is not None:
                            await ws.send_json(err)
                    else:
                        await ws.send_json(_error(
                            "bad-frame", f"unknown type {frame.get('type')!r}"))
            finally:
                stop.set()
                send_task.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            if agent is not None:
                state.release(agent, session_id)

    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/", StaticFiles(directory=dist, html=True), name="console")
    else:
        @app.get("/")
        def index():
            return HTMLResponse(FALLBACK_PAGE)

    return app
