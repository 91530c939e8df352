"""HTTP steering sessions: live simulations that swap in a fresh force
field whenever a prompt arrives.

One stepper thread per session advances the world at the session frame
rate; stream readers only observe immutable frame snapshots, and field
swaps happen between steps under the session lock.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .embedding import StubProvider, embed
from .errors import ConfigError, InvalidPrompt, PromptFieldError, SessionNotFound
from .evaluate import EvalContext
from .p2i import Architecture, Genome, VectorField, decode_field, init_genome, load_checkpoint, zero_field
from .render import RenderStyle, render_frame
from .rng import SplitMix64, mix64
from .runner import EmbedderSpec, ScorerSpec, build_provider, build_scorer
from .swarm import PhysicsConfig, WorldState, frame_record, init_world, step

_STATUS = {
    "SessionNotFound": 404,
    "PromptNotCached": 404,
    "CheckpointNotFound": 404,
    "InvalidPrompt": 400,
    "ConfigError": 400,
    "CorruptCheckpoint": 400,
    "UnsupportedVersion": 400,
    "UnsupportedGrid": 400,
    "DimensionMismatch": 400,
}


@dataclass(frozen=True)
class ServiceConfig:
    checkpoint_path: str | None = None
    grid: int = 5
    embed_dim: int = 384
    seed: int = 0
    physics: PhysicsConfig = dc_field(default_factory=PhysicsConfig)
    scorer: ScorerSpec = dc_field(default_factory=ScorerSpec)
    embedder: EmbedderSpec = dc_field(default_factory=EmbedderSpec)
    frame_rate: float = 30.0
    idle_timeout: float = 900.0

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ConfigError("frame_rate must be positive")
        if self.idle_timeout <= 0:
            raise ConfigError("idle_timeout must be positive")


class _Session:
    def __init__(self, sid: str, genome: Genome, world: WorldState, cfg: ServiceConfig, frame_rate: float):
        self.id = sid
        self.genome = genome
        self.cfg = cfg
        self.frame_rate = frame_rate
        self.lock = threading.Lock()
        self.world_start = world
        self.world = world
        self.field: VectorField | None = None
        self.running = False
        self.closed = threading.Event()
        self.last_touch = time.monotonic()

    def touch(self) -> None:
        self.last_touch = time.monotonic()

    def snapshot(self) -> WorldState:
        with self.lock:
            return self.world

    def step_once(self) -> None:
        with self.lock:
            if not self.running:
                return
            active = self.field if self.field is not None else zero_field(self.genome.arch.grid)
            self.world = step(self.world, active, self.cfg.physics)

    def apply_field(self, new_field: VectorField) -> None:
        with self.lock:
            self.field = new_field
            self.running = True

    def reset(self, seed: int) -> None:
        world = init_world(self.cfg.physics, SplitMix64(seed))
        with self.lock:
            self.world_start = world
            self.world = world
            self.running = False


class _SessionStore:
    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self._lock = threading.Lock()
        self._sessions: dict[str, _Session] = {}
        self._seeds: dict[str, int] = {}

    def create(self, seed: int, genome: Genome, frame_rate: float) -> _Session:
        sid = uuid.uuid4().hex
        world = init_world(self.cfg.physics, SplitMix64(seed))
        session = _Session(sid, genome, world, self.cfg, frame_rate)
        with self._lock:
            self._sessions[sid] = session
            self._seeds[sid] = seed
        threading.Thread(target=self._drive, args=(session,), daemon=True).start()
        return session

    def seed_of(self, sid: str) -> int:
        return self._seeds[sid]

    def get(self, sid: str) -> _Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None or session.closed.is_set():
            raise SessionNotFound(f"no session {sid!r}")
        session.touch()
        return session

    def drop(self, sid: str) -> None:
        with self._lock:
            session = self._sessions.pop(sid, None)
            self._seeds.pop(sid, None)
        if session is None:
            raise SessionNotFound(f"no session {sid!r}")
        session.closed.set()

    def drop_all(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
            self._sessions.clear()
            self._seeds.clear()
        for session in sessions:
            session.closed.set()

    def _drive(self, session: _Session) -> None:
        period = 1.0 / session.frame_rate
        while not session.closed.is_set():
            if time.monotonic() - session.last_touch > self.cfg.idle_timeout:
                with self._lock:
                    self._sessions.pop(session.id, None)
                    self._seeds.pop(session.id, None)
                session.closed.set()
                return
            session.step_once()
            time.sleep(period)


class _CreateSession(BaseModel):
    seed: int | None = None
    checkpoint: str | None = None
    frame_rate: float | None = None


class _PromptBody(BaseModel):
    text: str


def _load_genome(cfg: ServiceConfig, path: str | None) -> Genome:
    if path is None and cfg.checkpoint_path is not None:
        path = cfg.checkpoint_path
    if path is None:
        arch = Architecture(embed_dim=cfg.embed_dim, grid=cfg.grid)
        return init_genome(arch, SplitMix64(cfg.seed))
    if not Path(path).is_file():
        raise FileNotFoundError(path)
    return load_checkpoint(path).genome


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    app = FastAPI(title="promptfield steering service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = _SessionStore(cfg)
    app.state.sessions = store

    @app.exception_handler(PromptFieldError)
    async def _typed_error(request: Request, exc: PromptFieldError):
        code = type(exc).__name__
        return JSONResponse(
            status_code=_STATUS.get(code, 500),
            content={"code": code, "message": str(exc)},
        )

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(
            status_code=404,
            content={"code": "CheckpointNotFound", "message": str(exc)},
        )

    @app.post("/api/v1/sessions")
    def create_session(body: _CreateSession):
        genome = _load_genome(cfg, body.checkpoint)
        seed = body.seed if body.seed is not None else uuid.uuid4().int & ((1 << 63) - 1)
        frame_rate = body.frame_rate if body.frame_rate is not None else cfg.frame_rate
        if frame_rate <= 0:
            raise ConfigError("frame_rate must be positive")
        session = store.create(seed, genome, frame_rate)
        return {"id": session.id, "seed": seed, "grid": genome.arch.grid}

    @app.post("/api/v1/sessions/{sid}/prompt")
    def submit_prompt(sid: str, body: _PromptBody):
        session = store.get(sid)
        if body.text == "":
            raise InvalidPrompt("prompt must be non-empty")
        provider = build_provider(cfg.embedder, session.genome.arch.embed_dim)
        embedding = embed(body.text, provider)
        new_field = decode_field(session.genome, embedding)
        session.apply_field(new_field)
        return {
            "grid": new_field.height,
            "vectors": new_field.vectors.tolist(),
        }

    @app.get("/api/v1/sessions/{sid}/stream")
    def stream(sid: str):
        session = store.get(sid)
        period = 1.0 / session.frame_rate

        def frames():
            while not session.closed.is_set():
                session.touch()
                yield frame_record(session.snapshot()) + "\n"
                time.sleep(period)

        return StreamingResponse(frames(), media_type="application/x-ndjson")

    @app.post("/api/v1/sessions/{sid}/pause")
    def pause(sid: str):
        session = store.get(sid)
        with session.lock:
            session.running = False
        return {"running": False}

    @app.post("/api/v1/sessions/{sid}/resume")
    def resume(sid: str):
        session = store.get(sid)
        with session.lock:
            session.running = True
        return {"running": True}

    @app.post("/api/v1/sessions/{sid}/reset")
    def reset(sid: str):
        session = store.get(sid)
        session.reset(store.seed_of(sid))
        return {"step": 0, "running": False}

    @app.get("/api/v1/sessions/{sid}/score")
    def score(sid: str, prompt: str = ""):
        session = store.get(sid)
        if prompt == "":
            raise InvalidPrompt("prompt query parameter must be non-empty")
        scorer = build_scorer(cfg.scorer)
        with session.lock:
            world_start = session.world_start
            world = session.world
            active = session.field if session.field is not None else zero_field(session.genome.arch.grid)
        raster = render_frame(world, RenderStyle(dot_radius=cfg.physics.radius))
        result = scorer(
            EvalContext(
                prompt=prompt,
                genome=session.genome,
                field=active,
                world_start=world_start,
                world_final=world,
                raster=raster,
            )
        )
        return {"score": result.score, "description": result.description, "source": result.source}

    @app.delete("/api/v1/sessions/{sid}")
    def delete(sid: str):
        store.get(sid)
        store.drop(sid)
        return {"deleted": sid}

    return app


def serve(cfg: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Blocking uvicorn server; used by the CLI."""
    import uvicorn

    uvicorn.run(create_app(cfg), host=host, port=port, log_level="info")
