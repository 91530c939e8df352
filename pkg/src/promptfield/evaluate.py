"""Alignment scoring: a chat-completions vision client, a deterministic
spatial surrogate, and a persistent memoizing wrapper.

Every scorer used by evolution is a callable taking an EvalContext and
returning a ScoreResult with a score in [0, 1].
"""

from __future__ import annotations

import base64
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

from .errors import (
    ConfigError,
    DegenerateWorld,
    DimensionMismatch,
    EvaluatorUnavailable,
    InvalidPrompt,
    NoScoreFound,
    ParseError,
    TransportError,
    UnparseableReply,
)
from .p2i import Genome, VectorField
from .render import Raster, encode_png, raster_digest
from .stats import mean_pairwise_distance
from .swarm import WorldState

log = logging.getLogger(__name__)

# mean distance between two uniform points in the unit square, used to
# scale the theoretical dispersion ceiling to the arena size
UNIFORM_SQUARE_MEAN_DISTANCE = 0.5214

INTENTS = ("cluster", "scatter")

QUERY_TEMPLATE = (
    "Briefly describe the overall distribution of dots in this image.\n"
    "The original prompt was: “{prompt}.”\n"
    "On a scale from 0.0 to 1.0, how well does the image match the user’s goal?\n"
    "Return a numerical score."
)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class ScoreResult:
    score: float
    description: str | None
    source: str  # "vlm" | "surrogate" | "cache"

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score!r} outside [0, 1]")
        if self.source not in ("vlm", "surrogate", "cache"):
            raise ValueError(f"unknown score source {self.source!r}")
        if self.source == "vlm" and not self.description:
            raise ValueError("vlm results must carry the reply text")


@dataclass(frozen=True)
class VlmConfig:
    base_url: str
    model: str
    api_key_env: str = "VLM_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    max_inflight: int = 4
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_inflight < 1:
            raise ConfigError("max_inflight must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")


def build_query(prompt: str) -> str:
    """The evaluator question with the prompt substituted verbatim."""
    if prompt == "":
        raise InvalidPrompt("prompt must be non-empty")
    return QUERY_TEMPLATE.replace("{prompt}", prompt)


_NUMBER = re.compile(r"\d+(?:\.\d+)?|\.\d+")


def parse_score(reply: str) -> float:
    """Extract the alignment score from free-form reply text.

    If "score" occurs (case-insensitive), the score is the first decimal
    in [0, 1] after its last occurrence; otherwise the last in-range
    decimal anywhere. No usable number raises NoScoreFound.
    """
    idx = reply.lower().rfind("score")
    if idx >= 0:
        for m in _NUMBER.finditer(reply, idx + len("score")):
            value = float(m.group())
            if value <= 1.0:
                return value
        raise NoScoreFound("no in-range number after the last 'score'")
    best: float | None = None
    for m in _NUMBER.finditer(reply):
        value = float(m.group())
        if value <= 1.0:
            best = value
    if best is None:
        raise NoScoreFound("no in-range number in reply")
    return best


# transport(url, headers, json_body, timeout) -> (status code, parsed JSON)
VlmTransport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _requests_vlm_transport(url: str, headers: dict, body: dict, timeout: float) -> tuple[int, dict]:
    try:
        resp = requests.post(url, headers=headers, json=body, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


def score_vlm(
    image: bytes,
    prompt: str,
    cfg: VlmConfig,
    transport: VlmTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ScoreResult:
    """One chat request carrying the query text and the PNG; temperature 0.

    Transport failures and unparseable replies retry with exponential
    backoff (1s, 2s, 4s) up to cfg.max_retries total retries.
    """
    if not image.startswith(_PNG_SIGNATURE):
        raise ValueError("image must be PNG bytes")
    query = build_query(prompt)
    body = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": query},
                    {
                        "type": "image_url",
                        "image_url": {
                            "url": "data:image/png;base64,"
                            + base64.b64encode(image).decode("ascii")
                        },
                    },
                ],
            }
        ],
    }
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(cfg.api_key_env) if cfg.api_key_env else None
    if key:
        headers["Authorization"] = f"Bearer {key}"
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    send = transport or _requests_vlm_transport

    last: Exception | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleep(2.0 ** (attempt - 1))
        try:
            status, payload = send(url, headers, body, cfg.timeout)
        except TransportError as exc:
            last = exc
            continue
        if not 200 <= status < 300:
            last = TransportError(f"HTTP {status}")
            continue
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            last = TransportError("reply missing choices[0].message.content")
            continue
        try:
            value = parse_score(text)
        except NoScoreFound as exc:
            last = exc
            continue
        return ScoreResult(score=value, description=text, source="vlm")

    if isinstance(last, NoScoreFound):
        raise UnparseableReply(f"no score after {cfg.max_retries} retries") from last
    raise EvaluatorUnavailable(f"evaluator failed after {cfg.max_retries} retries") from last


def score_surrogate(world_start: WorldState, world_final: WorldState, intent: str) -> ScoreResult:
    """Deterministic geometric proxy for prompt alignment.

    cluster: clamp(1 - PT/P0, 0, 1); scatter: clamp((PT - P0)/(Pmax - P0), 0, 1)
    where P0/PT are mean pairwise distances and Pmax = 0.5214 * arena.
    """
    if intent not in INTENTS:
        raise ConfigError(f"intent must be one of {INTENTS}")
    if world_start.n_agents != world_final.n_agents:
        raise DimensionMismatch("worlds have different agent counts")
    if world_start.n_agents < 2:
        raise DegenerateWorld("surrogate needs at least two agents")
    p0 = mean_pairwise_distance(world_start.positions)
    pt = mean_pairwise_distance(world_final.positions)
    if intent == "cluster":
        if p0 == 0.0:
            value = 1.0 if pt == 0.0 else 0.0
        else:
            value = min(1.0, max(0.0, 1.0 - pt / p0))
    else:
        p_max = UNIFORM_SQUARE_MEAN_DISTANCE * world_start.arena
        if p0 >= p_max:
            value = 0.0
        else:
            value = min(1.0, max(0.0, (pt - p0) / (p_max - p0)))
    return ScoreResult(score=value, description=None, source="surrogate")


@dataclass(frozen=True)
class EvalContext:
    """Everything one candidate evaluation produced, offered to the scorer."""

    prompt: str
    genome: Genome
    field: VectorField
    world_start: WorldState
    world_final: WorldState
    raster: Raster


Scorer = Callable[[EvalContext], ScoreResult]


class SurrogateScorer:
    """Pipeline scorer backed by score_surrogate."""

    def __init__(self, intent: str):
        if intent not in INTENTS:
            raise ConfigError(f"intent must be one of {INTENTS}")
        self.intent = intent

    def __call__(self, ctx: EvalContext) -> ScoreResult:
        return score_surrogate(ctx.world_start, ctx.world_final, self.intent)


class VlmScorer:
    """Pipeline scorer backed by score_vlm, with a bound on in-flight requests."""

    def __init__(
        self,
        cfg: VlmConfig,
        transport: VlmTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        self._transport = transport
        self._sleep = sleep
        self._sem = threading.BoundedSemaphore(cfg.max_inflight)

    def __call__(self, ctx: EvalContext) -> ScoreResult:
        png = encode_png(ctx.raster)
        with self._sem:
            return score_vlm(png, ctx.prompt, self.cfg, transport=self._transport, sleep=self._sleep)


class CachedScorer:
    """Memoize a scorer on (raster digest, prompt), optionally on disk.

    Identical keys trigger exactly one underlying call, even under
    concurrency; later hits return source "cache".
    """

    def __init__(self, scorer: Scorer, path: str | Path | None = None):
        self._scorer = scorer
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._done: dict[tuple[int, str], tuple[float, str | None]] = {}
        self._pending: dict[tuple[int, str], threading.Event] = {}
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    key = (int(rec["digest"]), rec["prompt"])
                    self._done[key] = (float(rec["score"]), rec.get("description"))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad score cache record: {exc}", line=lineno) from exc

    def __call__(self, ctx: EvalContext) -> ScoreResult:
        key = (raster_digest(ctx.raster), ctx.prompt)
        while True:
            with self._lock:
                if key in self._done:
                    score, description = self._done[key]
                    return ScoreResult(score=score, description=description, source="cache")
                waiter = self._pending.get(key)
                if waiter is None:
                    self._pending[key] = threading.Event()
                    break
            waiter.wait()

        try:
            result = self._scorer(ctx)
        except BaseException:
            with self._lock:
                self._pending.pop(key).set()
            raise
        with self._lock:
            self._done[key] = (result.score, result.description)
            if self._path is not None:
                record = {
                    "digest": key[0],
                    "prompt": key[1],
                    "score": result.score,
                    "description": result.description,
                }
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record) + "\n")
            self._pending.pop(key).set()
        return result


def cached(scorer: Scorer, path: str | Path | None = None) -> CachedScorer:
    """Wrap any scorer with (raster digest, prompt) memoization."""
    return CachedScorer(scorer, path)
