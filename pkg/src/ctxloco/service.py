"""Live simulation sessions over HTTP.

Each session owns one environment and one stepping worker thread; request
handlers talk to the worker through a message queue, and control verbs or
context swaps apply between simulation steps, never mid-step. Subscribers
receive the same event sequence through per-subscriber fan-out queues
(server-sent events). Context events are journaled per session so an
episode can be replayed offline to the same cumulative reward.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .ars import LinearPolicy
from .embedding import ContextMode, embed
from .env import SurrogateEnv
from .errors import BackendError, TranslationError
from .terrain import TerrainParams, levels_to_params, quantize
from .translator import MockBackend, TranslationCache, translate

DEFAULT_STEPS_PER_SECOND = 50.0
DEFAULT_DECIMATION = 5
DEFAULT_MAX_SESSIONS = 16
HEARTBEAT_SECONDS = 5.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class SessionConfig:
    policy_id: str
    policy: LinearPolicy
    terrain: TerrainParams
    seed: int
    description: str | None
    embedding: list[float]
    turbo: bool
    steps_per_second: float
    decimation: int
    journal_path: str | None
    heartbeat_seconds: float = HEARTBEAT_SECONDS


@dataclass
class _Command:
    verb: str
    payload: dict = field(default_factory=dict)
    reply: queue.Queue = field(default_factory=lambda: queue.Queue(maxsize=1))


class SessionWorker(threading.Thread):
    """Owns the env; applies commands between steps; fans out events."""

    def __init__(self, session_id: str, config: SessionConfig):
        super().__init__(daemon=True, name=f"session-{session_id}")
        self.session_id = session_id
        self.config = config
        self.status = "paused"
        self.commands: queue.Queue[_Command] = queue.Queue()
        self.subscribers: list[queue.Queue] = []
        self._subs_lock = threading.Lock()
        self._stop = False
        self._resets = 0
        self._env = SurrogateEnv()
        self._obs = self._env.reset(config.terrain, config.seed)
        self._embedding = list(config.embedding)
        self._description = config.description
        self._cumulative = 0.0
        self._journal_fh = None
        if config.journal_path:
            self._journal_fh = open(config.journal_path, "a", encoding="utf-8")
        self._journal({
            "event": "create",
            "policy": config.policy_id,
            "terrain": config.terrain.to_dict(),
            "seed": config.seed,
            "embedding": self._embedding,
            "description": self._description,
        })

    # -- fan-out ----------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._subs_lock:
            self.subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subs_lock:
            if q in self.subscribers:
                self.subscribers.remove(q)

    def _publish(self, event: dict) -> None:
        with self._subs_lock:
            for q in self.subscribers:
                q.put(event)

    def _journal(self, record: dict) -> None:
        if self._journal_fh is not None:
            self._journal_fh.write(json.dumps(record) + "\n")
            self._journal_fh.flush()

    # -- command API (called from request handlers) -----------------------

    def send(self, verb: str, **payload) -> dict:
        cmd = _Command(verb, payload)
        self.commands.put(cmd)
        return cmd.reply.get(timeout=10.0)

    def snapshot(self) -> dict:
        body = self._env.body if not self._env.done or self._env.step_index else None
        return {
            "id": self.session_id,
            "policy": self.config.policy_id,
            "status": self.status,
            "terrain": self.config.terrain.to_dict(),
            "t": self._env.step_index,
            "reward_cumulative": self._cumulative,
            "embedding": list(self._embedding),
            "last_description": self._description,
            "x": body["x"] if body else 0.0,
            "y": body["y"] if body else 0.0,
        }

    # -- worker loop -------------------------------------------------------

    def _state_event(self) -> dict:
        body = self._env.body
        return {
            "type": "state",
            "t": self._env.step_index,
            "x": body["x"],
            "y": body["y"],
            "h": body["h"],
            "reward_cumulative": self._cumulative,
            "contacts": [int(v) for v in self._obs[12:16]],
            "embedding": list(self._embedding),
            "last_description": self._description,
        }

    def _apply_command(self, cmd: _Command) -> None:
        verb = cmd.verb
        result: dict = {}
        if verb == "pause":
            if self.status == "done":
                result = {"error": (409, "done", "session is done")}
            else:
                self.status = "paused"
                self._publish({"type": "control", "verb": "pause", "t": self._env.step_index})
                result = {"status": self.status}
        elif verb == "resume":
            if self.status == "done":
                result = {"error": (409, "done", "cannot resume a done session")}
            else:
                self.status = "running"
                self._publish({"type": "control", "verb": "resume", "t": self._env.step_index})
                result = {"status": self.status}
        elif verb == "reset":
            self._resets += 1
            seed = self.config.seed + self._resets
            self._obs = self._env.reset(self.config.terrain, seed)
            self._cumulative = 0.0
            self.status = "paused"
            self._journal({"event": "reset", "seed": seed})
            self._publish({"type": "reset", "t": 0, "seed": seed})
            result = {"status": self.status, "seed": seed}
        elif verb == "delete":
            self._stop = True
            self.status = "done"
            self._publish({"type": "control", "verb": "delete", "t": self._env.step_index})
            result = {"status": "deleted"}
        elif verb == "set_context":
            new_embedding = cmd.payload["embedding"]
            description = cmd.payload["description"]
            changed = new_embedding != self._embedding
            effective_step = self._env.step_index
            if changed:
                self._embedding = list(new_embedding)
            self._description = description
            if cmd.payload.get("retarget_terrain"):
                self.config.terrain = cmd.payload["terrain"]
            self._journal({
                "event": "context",
                "step": effective_step,
                "description": description,
                "embedding": list(new_embedding),
                "changed": changed,
            })
            self._publish({
                "type": "context",
                "t": effective_step,
                "changed": changed,
                "embedding": list(new_embedding),
                "levels": cmd.payload["levels"],
                "last_description": description,
            })
            result = {"changed": changed, "effective_step": effective_step}
        else:
            result = {"error": (400, "bad_verb", f"unknown verb {verb!r}")}
        cmd.reply.put(result)

    def run(self) -> None:
        period = 0.0 if self.config.turbo else 1.0 / self.config.steps_per_second
        last_heartbeat = time.monotonic()
        while not self._stop:
            try:
                cmd = self.commands.get(
                    timeout=0.0005 if self.status == "running" else 0.05
                )
                self._apply_command(cmd)
                continue
            except queue.Empty:
                pass

            now = time.monotonic()
            if self.status == "running" and not self._env.done:
                action = self.config.policy.act(self._obs, self._embedding)
                step = self._env.step(action)
                self._obs = step.observation
                self._cumulative += step.reward
                if self._env.step_index % self.config.decimation == 0 or step.done:
                    self._publish(self._state_event())
                if step.done:
                    self.status = "done"
                    self._publish({
                        "type": "done",
                        "t": self._env.step_index,
                        "reward_cumulative": self._cumulative,
                        "fell": step.info["fell"],
                    })
                if period:
                    time.sleep(period)
            else:
                if now - last_heartbeat >= self.config.heartbeat_seconds:
                    self._publish({
                        "type": "heartbeat",
                        "t": self._env.step_index,
                        "status": self.status,
                    })
                    last_heartbeat = now
        if self._journal_fh is not None:
            self._journal_fh.close()


def replay_events(
    policy: LinearPolicy,
    terrain: TerrainParams,
    seed: int,
    initial_embedding,
    context_events: list[tuple[int, list[float]]],
    max_steps: int | None = None,
) -> float:
    """Re-run an episode applying journaled embedding swaps offline.

    ``context_events`` holds (effective_step, embedding) pairs: the new
    embedding acts from the first step taken after ``effective_step``
    steps were complete, exactly as the live worker applied it.
    """
    env = SurrogateEnv() if max_steps is None else SurrogateEnv(max_steps)
    obs = env.reset(terrain, seed)
    embedding = list(initial_embedding)
    pending = sorted(context_events)
    cumulative = 0.0
    while not env.done:
        while pending and pending[0][0] <= env.step_index:
            embedding = list(pending.pop(0)[1])
        step = env.step(policy.act(obs, embedding))
        obs = step.observation
        cumulative += step.reward
    return cumulative


def replay_journal(policy: LinearPolicy, journal_path: str, max_steps=None) -> float:
    """Replay the last episode segment of a session journal file."""
    terrain = None
    seed = None
    initial = None
    events: list[tuple[int, list[float]]] = []
    with open(journal_path, "r", encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            if record["event"] == "create":
                terrain = TerrainParams.from_dict(record["terrain"])
                seed = record["seed"]
                initial = record["embedding"]
            elif record["event"] == "reset":
                seed = record["seed"]
                events = []
            elif record["event"] == "context" and record["changed"]:
                events.append((record["step"], record["embedding"]))
    if terrain is None:
        raise ValueError(f"journal {journal_path} has no create record")
    return replay_events(policy, terrain, seed, initial, events, max_steps)


class SessionStore:
    """In-memory LRU table of session workers."""

    def __init__(self, max_sessions: int = DEFAULT_MAX_SESSIONS):
        self.max_sessions = max_sessions
        self._sessions: OrderedDict[str, SessionWorker] = OrderedDict()
        self._lock = threading.Lock()

    def add(self, worker: SessionWorker) -> None:
        with self._lock:
            self._sessions[worker.session_id] = worker
            self._sessions.move_to_end(worker.session_id)
            while len(self._sessions) > self.max_sessions:
                _, evicted = self._sessions.popitem(last=False)
                evicted.send("delete")

    def get(self, session_id: str) -> SessionWorker:
        with self._lock:
            worker = self._sessions.get(session_id)
            if worker is None:
                raise ApiError(404, "unknown_session", f"no session {session_id!r}")
            self._sessions.move_to_end(session_id)
            return worker

    def remove(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)


def load_policies(policies_dir: str) -> dict[str, LinearPolicy]:
    policies = {}
    for name in sorted(os.listdir(policies_dir)):
        if name.endswith(".json"):
            policies[name[:-5]] = LinearPolicy.load(os.path.join(policies_dir, name))
    return policies


def _initial_embedding(policy: LinearPolicy, levels) -> list[float]:
    if policy.embedding_mode is ContextMode.EMBEDDING:
        return [float(v) for v in embed(levels).values]
    return [0.0] * policy.embedding_dim


def create_app(
    policies_dir: str | None = None,
    policies: dict[str, LinearPolicy] | None = None,
    translator_backend=None,
    cache: TranslationCache | None = None,
    turbo: bool = False,
    steps_per_second: float = DEFAULT_STEPS_PER_SECOND,
    decimation: int = DEFAULT_DECIMATION,
    journal_dir: str | None = None,
    max_sessions: int = DEFAULT_MAX_SESSIONS,
    heartbeat_seconds: float = HEARTBEAT_SECONDS,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="ctxloco session service")
    app.state.policies = dict(policies or {})
    if policies_dir:
        app.state.policies.update(load_policies(policies_dir))
    app.state.store = SessionStore(max_sessions)
    app.state.backend = translator_backend or MockBackend()
    app.state.cache = cache or TranslationCache()

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    def _policy(policy_id: str) -> LinearPolicy:
        policy = app.state.policies.get(policy_id)
        if policy is None:
            raise ApiError(404, "unknown_policy", f"no policy {policy_id!r}")
        return policy

    def _translate(description: str):
        try:
            return translate(description, app.state.backend, app.state.cache)
        except (TranslationError, BackendError, ValueError) as exc:
            raise ApiError(422, "translation_failed", str(exc)) from exc

    @app.get("/v1/policies")
    def list_policies():
        return [
            {
                "id": pid,
                "method": p.embedding_mode.value,
                "input_dim": p.input_dim,
                "embedding_dim": p.embedding_dim,
                "env_steps": p.env_steps,
            }
            for pid, p in sorted(app.state.policies.items())
        ]

    @app.post("/v1/sessions")
    async def create_session(request: Request):
        body = await request.json()
        policy_id = body.get("policy")
        if not policy_id:
            raise ApiError(400, "missing_policy", "body must name a policy")
        policy = _policy(policy_id)

        levels = None
        description = body.get("description")
        if description:
            levels = _translate(description).levels
        if body.get("terrain"):
            try:
                terrain = TerrainParams.from_dict(body["terrain"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ApiError(422, "bad_terrain", str(exc)) from exc
        elif levels is not None:
            terrain = levels_to_params(levels)
        else:
            raise ApiError(400, "missing_terrain", "provide a terrain or a description")
        if levels is None:
            levels = quantize(terrain)

        session_id = uuid.uuid4().hex[:12]
        journal_path = None
        if journal_dir:
            os.makedirs(journal_dir, exist_ok=True)
            journal_path = os.path.join(journal_dir, f"{session_id}.jsonl")
        config = SessionConfig(
            policy_id=policy_id,
            policy=policy,
            terrain=terrain,
            seed=int(body.get("seed", 0)),
            description=description,
            embedding=_initial_embedding(policy, levels),
            turbo=bool(body.get("turbo", turbo)),
            steps_per_second=float(body.get("steps_per_second", steps_per_second)),
            decimation=int(body.get("decimation", decimation)),
            journal_path=journal_path,
            heartbeat_seconds=heartbeat_seconds,
        )
        worker = SessionWorker(session_id, config)
        worker.start()
        app.state.store.add(worker)
        snapshot = worker.snapshot()
        snapshot["levels"] = levels.to_dict()
        snapshot["journal"] = journal_path
        return snapshot

    @app.get("/v1/sessions")
    def list_sessions():
        store: SessionStore = app.state.store
        return [store.get(sid).snapshot() for sid in store.ids()]

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        return app.state.store.get(session_id).snapshot()

    @app.get("/v1/sessions/{session_id}/events")
    def stream_events(session_id: str, max_events: int | None = None):
        """Server-sent events; ``max_events`` bounds the stream for
        scripted clients (browsers just keep it open)."""
        worker = app.state.store.get(session_id)

        def generate():
            q = worker.subscribe()
            sent = 0
            try:
                yield f"data: {json.dumps(worker.snapshot() | {'type': 'snapshot'})}\n\n"
                sent += 1
                while max_events is None or sent < max_events:
                    try:
                        event = q.get(timeout=worker.config.heartbeat_seconds + 1.0)
                    except queue.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(event)}\n\n"
                    sent += 1
                    if event.get("type") == "control" and event.get("verb") == "delete":
                        return
            finally:
                worker.unsubscribe(q)

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/v1/sessions/{session_id}/context")
    async def apply_context(session_id: str, request: Request):
        worker = app.state.store.get(session_id)
        body = await request.json()
        description = body.get("description", "")
        if worker.config.policy.embedding_mode is not ContextMode.EMBEDDING:
            raise ApiError(
                409,
                "no_language_context",
                f"policy consumes no language context "
                f"(method {worker.config.policy.embedding_mode.value})",
            )
        result = _translate(description)
        embedding = [float(v) for v in embed(result.levels).values]
        payload = {
            "description": description,
            "levels": result.levels.to_dict(),
            "embedding": embedding,
        }
        if body.get("retarget_terrain"):
            payload["retarget_terrain"] = True
            payload["terrain"] = levels_to_params(result.levels)
        reply = worker.send("set_context", **payload)
        return {
            "levels": result.levels.to_dict(),
            "embedding": embedding,
            "changed": reply["changed"],
            "effective_step": reply["effective_step"],
        }

    @app.post("/v1/sessions/{session_id}/control")
    async def control(session_id: str, request: Request):
        worker = app.state.store.get(session_id)
        body = await request.json()
        verb = body.get("verb")
        if verb not in ("pause", "resume", "reset", "delete"):
            raise ApiError(400, "bad_verb", f"unknown verb {verb!r}")
        reply = worker.send(verb)
        if "error" in reply:
            status, code, message = reply["error"]
            raise ApiError(status, code, message)
        if verb == "delete":
            app.state.store.remove(session_id)
        return reply

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
