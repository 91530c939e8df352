"""Deterministic rasterization of world states: hard-edged dots on a plain
background, no anti-aliasing, so identical states yield identical bytes."""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .swarm import WorldState

RGB = tuple[int, int, int]


@dataclass(frozen=True)
class RenderStyle:
    background: RGB = (255, 255, 255)
    dot: RGB = (0, 0, 0)
    dot_radius: float = 5.0  # match the physics radius of the rendered world


@dataclass(frozen=True)
class Raster:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8, row-major

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(f"pixels shape {px.shape} != ({self.height}, {self.width}, 3)")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


def render_frame(world: WorldState, style: RenderStyle = RenderStyle()) -> Raster:
    """Rasterize one frame; a pixel is dot-colored iff its center (integer
    coordinates) lies within dot_radius of some agent position."""
    side = int(round(world.arena))
    pixels = np.empty((side, side, 3), dtype=np.uint8)
    pixels[:] = style.background
    rad = style.dot_radius
    rad2 = rad * rad
    dot = np.array(style.dot, dtype=np.uint8)
    for ax, ay in world.positions.tolist():
        x0 = max(math.ceil(ax - rad), 0)
        x1 = min(math.floor(ax + rad), side - 1)
        y0 = max(math.ceil(ay - rad), 0)
        y1 = min(math.floor(ay + rad), side - 1)
        if x0 > x1 or y0 > y1:
            continue
        ys = np.arange(y0, y1 + 1)[:, None]
        xs = np.arange(x0, x1 + 1)[None, :]
        mask = (xs - ax) ** 2 + (ys - ay) ** 2 <= rad2
        pixels[y0 : y1 + 1, x0 : x1 + 1][mask] = dot
    return Raster(side, side, pixels)


def encode_png(raster: Raster) -> bytes:
    """8-bit RGB non-interlaced PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(np.asarray(raster.pixels), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def raster_digest(raster: Raster) -> int:
    """64-bit digest over the raw raster bytes (not the encoded PNG), so
    cache keys do not depend on the encoder."""
    h = hashlib.blake2b(digest_size=8)
    h.update(f"{raster.width}x{raster.height}:".encode())
    h.update(raster.pixels.tobytes())
    return int.from_bytes(h.digest(), "big")
