"""Prompt-to-field decoder: a small convolutional net whose flat weight
vector is the unit of evolution.

Layer stack for embedding dimension E and latent block 5x5x64:

    dense   E -> 1600, ReLU, reshaped row-major to 5x5x64 (rows, cols, ch)
    grid 10: transposed conv 2x2 stride 2, 64 -> 16, ReLU    -> 10x10x16
    grid 5 : conv 3x3 stride 1 zero-padded, 64 -> 16, ReLU   ->  5x5x16
    grid 2 : conv 3x3 stride 2 unpadded,    64 -> 16, ReLU   ->  2x2x16
    pointwise 1x1 conv 16 -> 2, tanh                          ->  HxWx2

Weights flatten in one canonical order (dense W output-major, dense b,
head kernel [out, in, ky, kx], head b, pointwise W [out, in], pointwise b)
so checkpoints stay portable across processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import PromptEmbedding
from .errors import (
    CorruptCheckpoint,
    DimensionMismatch,
    NumericalError,
    UnsupportedGrid,
    UnsupportedVersion,
)
from .rng import SplitMix64

LATENT_SIDE = 5
LATENT_CHANNELS = 64
HEAD_CHANNELS = 16
OUT_CHANNELS = 2
INIT_STD = 0.1
CHECKPOINT_VERSION = 1

SUPPORTED_GRIDS = (2, 5, 10)

# largest double below 1: keeps field components strictly inside (-1, 1)
# even where tanh itself rounds to exactly 1.0
_MAX_COMPONENT = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class Architecture:
    embed_dim: int = 384
    grid: int = 5

    def __post_init__(self):
        if self.grid not in SUPPORTED_GRIDS:
            raise UnsupportedGrid(f"grid must be one of {SUPPORTED_GRIDS}, got {self.grid}")
        if self.embed_dim < 1:
            raise DimensionMismatch("embed_dim must be >= 1")

    @property
    def head_kernel(self) -> int:
        return 2 if self.grid == 10 else 3


def genome_len(arch: Architecture) -> int:
    """Total number of decoder parameters in the canonical flat layout."""
    latent = LATENT_SIDE * LATENT_SIDE * LATENT_CHANNELS
    dense = arch.embed_dim * latent + latent
    k = arch.head_kernel
    head = k * k * LATENT_CHANNELS * HEAD_CHANNELS + HEAD_CHANNELS
    pointwise = HEAD_CHANNELS * OUT_CHANNELS + OUT_CHANNELS
    return dense + head + pointwise


@dataclass(frozen=True)
class Genome:
    """Flat float64 weight vector for one architecture."""

    weights: np.ndarray
    arch: Architecture

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        expected = genome_len(self.arch)
        if w.ndim != 1 or w.size != expected:
            raise DimensionMismatch(f"genome needs {expected} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise NumericalError("genome contains non-finite weights")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True)
class VectorField:
    """H x W grid of (fx, fy) vectors, every component strictly in (-1, 1)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionMismatch(f"field must have shape (H, W, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalError("field contains non-finite components")
        if np.abs(v).max() >= 1.0:
            raise NumericalError("field components must be strictly inside (-1, 1)")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def height(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def width(self) -> int:
        return int(self.vectors.shape[1])


def zero_field(grid: int) -> VectorField:
    return VectorField(np.zeros((grid, grid, 2)))


def init_genome(arch: Architecture, rng: SplitMix64) -> Genome:
    """Fresh genome with i.i.d. Normal(0, 0.1^2) weights in canonical order."""
    return Genome(INIT_STD * rng.normals(genome_len(arch)), arch)


def _split(genome: Genome):
    arch = genome.arch
    latent = LATENT_SIDE * LATENT_SIDE * LATENT_CHANNELS
    k = arch.head_kernel
    w = genome.weights
    parts = []
    offset = 0
    for shape in (
        (latent, arch.embed_dim),
        (latent,),
        (HEAD_CHANNELS, LATENT_CHANNELS, k, k),
        (HEAD_CHANNELS,),
        (OUT_CHANNELS, HEAD_CHANNELS),
        (OUT_CHANNELS,),
    ):
        size = int(np.prod(shape))
        parts.append(w[offset : offset + size].reshape(shape))
        offset += size
    return parts


def _conv3x3_pad1(latent: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    side = latent.shape[0]
    padded = np.zeros((side + 2, side + 2, latent.shape[2]))
    padded[1:-1, 1:-1, :] = latent
    out = np.broadcast_to(bias, (side, side, bias.size)).copy()
    for ky in range(3):
        for kx in range(3):
            out += padded[ky : ky + side, kx : kx + side, :] @ kernel[:, :, ky, kx].T
    return out


def _conv3x3_stride2(latent: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    out_side = (latent.shape[0] - 3) // 2 + 1
    out = np.broadcast_to(bias, (out_side, out_side, bias.size)).copy()
    for ky in range(3):
        for kx in range(3):
            taps = latent[ky : ky + 2 * out_side - 1 : 2, kx : kx + 2 * out_side - 1 : 2, :]
            out += taps @ kernel[:, :, ky, kx].T
    return out


def _tconv2x2_stride2(latent: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    side = latent.shape[0]
    out = np.empty((2 * side, 2 * side, bias.size))
    for ky in range(2):
        for kx in range(2):
            out[ky::2, kx::2, :] = latent @ kernel[:, :, ky, kx].T + bias
    return out


def decode_field(genome: Genome, embedding: PromptEmbedding) -> VectorField:
    """Run the decoder forward pass and return the force field."""
    arch = genome.arch
    if embedding.dim != arch.embed_dim:
        raise DimensionMismatch(
            f"embedding dim {embedding.dim} != architecture embed_dim {arch.embed_dim}"
        )
    dense_w, dense_b, head_k, head_b, pw_w, pw_b = _split(genome)

    y = dense_w @ embedding.values + dense_b
    np.maximum(y, 0.0, out=y)
    latent = y.reshape(LATENT_SIDE, LATENT_SIDE, LATENT_CHANNELS)

    if arch.grid == 10:
        h = _tconv2x2_stride2(latent, head_k, head_b)
    elif arch.grid == 5:
        h = _conv3x3_pad1(latent, head_k, head_b)
    else:
        h = _conv3x3_stride2(latent, head_k, head_b)
    np.maximum(h, 0.0, out=h)

    z = h @ pw_w.T + pw_b
    if not np.all(np.isfinite(z)):
        raise NumericalError("decoder produced non-finite pre-activations")
    field = np.tanh(z)
    np.clip(field, -_MAX_COMPONENT, _MAX_COMPONENT, out=field)
    return VectorField(field)


@dataclass(frozen=True)
class Checkpoint:
    arch: Architecture
    prompt: str
    seed: int
    generation: int
    best_fitness: float
    genome: Genome
    version: int = CHECKPOINT_VERSION


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Write one JSON document; weights as decimal text with 17 significant digits."""
    head = {
        "version": ckpt.version,
        "arch": {"embed_dim": ckpt.arch.embed_dim, "grid": ckpt.arch.grid},
        "prompt": ckpt.prompt,
        "seed": ckpt.seed,
        "generation": ckpt.generation,
        "best_fitness": ckpt.best_fitness,
    }
    weights = ",".join(format(w, ".17g") for w in ckpt.genome.weights.tolist())
    text = json.dumps(head)[:-1] + ', "weights": [' + weights + "]}"
    Path(path).write_text(text, encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CorruptCheckpoint("missing version field")
    if doc["version"] != CHECKPOINT_VERSION:
        raise UnsupportedVersion(f"checkpoint version {doc['version']!r} unsupported")
    try:
        arch = Architecture(embed_dim=doc["arch"]["embed_dim"], grid=doc["arch"]["grid"])
        prompt = doc["prompt"]
        seed = doc["seed"]
        generation = doc["generation"]
        best_fitness = doc["best_fitness"]
        weights = np.asarray(doc["weights"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"missing or malformed field: {exc}") from exc
    if weights.ndim != 1 or weights.size != genome_len(arch):
        raise CorruptCheckpoint(
            f"weights length {weights.size} != expected {genome_len(arch)}"
        )
    if not np.all(np.isfinite(weights)):
        raise CorruptCheckpoint("weights contain non-finite values")
    return Checkpoint(
        arch=arch,
        prompt=prompt,
        seed=seed,
        generation=generation,
        best_fitness=best_fitness,
        genome=Genome(weights, arch),
    )
