"""Prompt embeddings: deterministic stub, NDJSON file cache, remote service.

The stub provider hashes the prompt's exact UTF-8 bytes (no trimming, no
case folding: "Clustering" and "clustering" are different prompts) into a
SplitMix64 stream and draws a unit-norm Gaussian vector, giving offline
runs a stable, text-sensitive embedding with no model dependency.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    EmbeddingServiceError,
    InvalidPrompt,
    NumericalError,
    ParseError,
    PromptNotCached,
    TransportError,
)
from .rng import SplitMix64, fnv1a64

DEFAULT_DIM = 384


@dataclass(frozen=True)
class PromptEmbedding:
    """Unit-norm float64 embedding vector plus its provenance."""

    values: np.ndarray
    source: str  # "stub" | "cache" | "remote"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DimensionMismatch("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise NumericalError("embedding contains non-finite components")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-9:
            raise NumericalError(f"embedding norm {norm!r} is not 1 within 1e-9")
        if self.source not in ("stub", "cache", "remote"):
            raise ValueError(f"unknown embedding source {self.source!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return int(self.values.size)


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not math.isfinite(norm):
        raise NumericalError("cannot normalize a zero or non-finite vector")
    return v / norm


def stub_embed(prompt: str, dim: int = DEFAULT_DIM) -> PromptEmbedding:
    """Deterministic unit vector derived from the prompt's UTF-8 bytes."""
    if prompt == "":
        raise InvalidPrompt("prompt must be non-empty")
    if dim < 1:
        raise DimensionMismatch("embedding dimension must be >= 1")
    rng = SplitMix64(fnv1a64(prompt.encode("utf-8")))
    return PromptEmbedding(_unit(rng.normals(dim)), source="stub")


class EmbeddingCache:
    """Prompt -> vector map loaded from newline-delimited JSON.

    Every record is {"prompt": str, "vector": [float, ...]}; vectors must
    share one dimension and prompts must be unique.
    """

    def __init__(self, entries: dict[str, np.ndarray]):
        dims = {v.size for v in entries.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"cache vectors have mixed dimensions {sorted(dims)}")
        self._entries = entries
        self.dim = dims.pop() if dims else 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, prompt: str) -> bool:
        return prompt in self._entries

    def lookup(self, prompt: str) -> np.ndarray:
        if prompt not in self._entries:
            raise PromptNotCached(f"no cached embedding for {prompt!r}")
        return self._entries[prompt]

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingCache":
        entries: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    prompt = record["prompt"]
                    vector = np.asarray(record["vector"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"bad cache record: {exc}", line=lineno) from exc
                if vector.ndim != 1 or vector.size == 0:
                    raise ParseError("vector must be a non-empty list", line=lineno)
                if prompt in entries:
                    raise ParseError(f"duplicate prompt {prompt!r}", line=lineno)
                entries[prompt] = vector
        return cls(entries)

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for prompt, vector in self._entries.items():
                fh.write(json.dumps({"prompt": prompt, "vector": vector.tolist()}) + "\n")


@dataclass(frozen=True)
class StubProvider:
    dim: int = DEFAULT_DIM


class CacheProvider:
    """Serves embeddings from a cache file loaded once at construction."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.cache = EmbeddingCache.load(path)


# transport(url, json_body, timeout) -> parsed JSON reply
RemoteTransport = Callable[[str, dict, float], dict]


def _requests_json_transport(url: str, body: dict, timeout: float) -> dict:
    try:
        resp = requests.post(url, json=body, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    if not 200 <= resp.status_code < 300:
        raise TransportError(f"HTTP {resp.status_code}")
    try:
        return resp.json()
    except ValueError as exc:
        raise TransportError("non-JSON reply") from exc


class RemoteProvider:
    """Text-embedding HTTP endpoint: POST {"texts": [...]} -> {"vectors": [[...]]}."""

    def __init__(
        self,
        url: str,
        timeout: float = 30.0,
        max_retries: int = 3,
        max_inflight: int = 4,
        transport: RemoteTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self.url = url
        self.timeout = timeout
        self.max_retries = max_retries
        self._transport = transport or _requests_json_transport
        self._sleep = sleep
        self._sem = threading.BoundedSemaphore(max_inflight)

    def fetch(self, prompt: str) -> np.ndarray:
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(2.0 ** (attempt - 1))
            try:
                with self._sem:
                    reply = self._transport(self.url, {"texts": [prompt]}, self.timeout)
                vectors = reply["vectors"]
                return np.asarray(vectors[0], dtype=np.float64)
            except (TransportError, KeyError, IndexError, TypeError, ValueError) as exc:
                last = exc
        raise EmbeddingServiceError(f"embedding service failed: {last}") from last


Provider = StubProvider | CacheProvider | RemoteProvider


def embed(prompt: str, provider: Provider) -> PromptEmbedding:
    """Embed a prompt through the given provider, L2-normalizing the result."""
    if prompt == "":
        raise InvalidPrompt("prompt must be non-empty")
    if isinstance(provider, StubProvider):
        return stub_embed(prompt, provider.dim)
    if isinstance(provider, CacheProvider):
        return PromptEmbedding(_unit(provider.cache.lookup(prompt)), source="cache")
    if isinstance(provider, RemoteProvider):
        return PromptEmbedding(_unit(provider.fetch(prompt)), source="remote")
    raise TypeError(f"unknown provider {provider!r}")


def cosine_similarity_matrix(embeddings: list[PromptEmbedding]) -> np.ndarray:
    """Pairwise cosine similarities; unit diagonal by construction."""
    if not embeddings:
        raise DimensionMismatch("need at least one embedding")
    dims = {e.dim for e in embeddings}
    if len(dims) > 1:
        raise DimensionMismatch(f"embeddings have mixed dimensions {sorted(dims)}")
    v = np.stack([e.values for e in embeddings])
    return v @ v.T
