"""
Top-down orthographic RGB-D rendering.

Each body and the effector is drawn as a glyph. How a glyph covers pixels
depends on its type, so coverage is a typeclass:

.. code:: python

  >>> import numpy as np
  >>> from scanb.world.render import DiscGlyph, footprint

  >>> xs, ys = np.meshgrid(np.arange(3.0), np.arange(3.0))
  >>> covered = footprint(DiscGlyph(1.0, 1.0, 1.0), xs, ys)
  >>> assert covered.sum() == 5

Depth is the top height of the highest glyph under a pixel,
divided by the height range, so it grows with object height.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from classes import typeclass
from typing_extensions import Final, final

from scanb.world.spec import KIND_BOWL, KIND_CUBE, Color
from scanb.world.state import (
    EMBODIMENT_AGENT,
    Z_RANGE,
    Body,
    WorldState,
)

#: Rendered square of the world, wider than the table.
VIEW_LOW: Final = -0.2
VIEW_HIGH: Final = 1.2

TABLE_COLOR: Final = (0.55, 0.5, 0.45)
FLOOR_COLOR: Final = (0.15, 0.15, 0.15)
EFFECTOR_COLOR: Final = {
    EMBODIMENT_AGENT: (1.0, 1.0, 1.0),
    'alt': (0.02, 0.02, 0.02),
}

_GLYPH_SIZE: Final = 0.035


@final
@dataclass(frozen=True)
class RenderConfig(object):
    """Raster sizes of the frame and of the effector crop."""

    frame_size: int = 32
    crop_size: int = 16


@final
@dataclass(frozen=True)
class ObservationState(object):
    """
    What a policy sees at one step.

    ``frame`` and ``crop`` are ``(4, H, W)`` rasters: RGB then depth.
    """

    frame: np.ndarray
    crop: np.ndarray
    effector: np.ndarray


@final
@dataclass(frozen=True)
class SquareGlyph(object):
    """Axis-aligned square."""

    x: float
    y: float
    half: float


@final
@dataclass(frozen=True)
class DiscGlyph(object):
    """Filled circle."""

    x: float
    y: float
    radius: float


@final
@dataclass(frozen=True)
class RingGlyph(object):
    """Annulus."""

    x: float
    y: float
    outer: float
    inner: float


@final
@dataclass(frozen=True)
class CrossGlyph(object):
    """Plus sign."""

    x: float
    y: float
    half: float
    thickness: float


@typeclass
def footprint(glyph, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boolean mask of pixels whose centers the glyph covers."""


@footprint.instance(SquareGlyph)
def _footprint_square(
    glyph: SquareGlyph, xs: np.ndarray, ys: np.ndarray,
) -> np.ndarray:
    return (np.abs(xs - glyph.x) <= glyph.half) & (
        np.abs(ys - glyph.y) <= glyph.half
    )


@footprint.instance(DiscGlyph)
def _footprint_disc(
    glyph: DiscGlyph, xs: np.ndarray, ys: np.ndarray,
) -> np.ndarray:
    return (xs - glyph.x) ** 2 + (ys - glyph.y) ** 2 <= glyph.radius ** 2


@footprint.instance(RingGlyph)
def _footprint_ring(
    glyph: RingGlyph, xs: np.ndarray, ys: np.ndarray,
) -> np.ndarray:
    squared = (xs - glyph.x) ** 2 + (ys - glyph.y) ** 2
    return (squared <= glyph.outer ** 2) & (squared >= glyph.inner ** 2)


@footprint.instance(CrossGlyph)
def _footprint_cross(
    glyph: CrossGlyph, xs: np.ndarray, ys: np.ndarray,
) -> np.ndarray:
    dx, dy = np.abs(xs - glyph.x), np.abs(ys - glyph.y)
    horizontal = (dx <= glyph.half) & (dy <= glyph.thickness)
    vertical = (dy <= glyph.half) & (dx <= glyph.thickness)
    return horizontal | vertical


def pixel_centers(size: int) -> Tuple[np.ndarray, np.ndarray]:
    """World coordinates of pixel centers, rows follow ``y``."""
    scale = (VIEW_HIGH - VIEW_LOW) / size
    axis = VIEW_LOW + (np.arange(size) + 0.5) * scale
    xs, ys = np.meshgrid(axis, axis)
    return xs, ys


def project(x: float, y: float, size: int) -> Tuple[int, int]:
    """Pixel ``(row, column)`` containing the world point ``(x, y)``."""
    scale = (VIEW_HIGH - VIEW_LOW) / size
    column = int(np.clip((x - VIEW_LOW) // scale, 0, size - 1))
    row = int(np.clip((y - VIEW_LOW) // scale, 0, size - 1))
    return row, column


def body_glyph(body: Body):
    """Cubes are squares, bowls rings, cups discs."""
    if body.kind == KIND_CUBE:
        return SquareGlyph(body.x, body.y, body.radius)
    if body.kind == KIND_BOWL:
        return RingGlyph(body.x, body.y, body.radius, body.radius * 0.45)
    return DiscGlyph(body.x, body.y, body.radius)


def effector_glyph(state: WorldState):
    """The agent is drawn as a cross, the other expert as a ring."""
    x, y, _ = state.effector
    if state.embodiment == EMBODIMENT_AGENT:
        return CrossGlyph(x, y, _GLYPH_SIZE, _GLYPH_SIZE / 3)
    return RingGlyph(x, y, _GLYPH_SIZE, _GLYPH_SIZE / 2)


def render(
    state: WorldState,
    config: RenderConfig = RenderConfig(),  # noqa: B008
) -> ObservationState:
    """
    Rasterizes ``state`` into a frame, an effector crop and a vector.

    The crop is a window of the frame centered at the effector pixel,
    edge-padded where it leaves the frame.
    """
    frame = render_frame(state, config.frame_size)
    row, column = project(
        state.effector[0], state.effector[1], config.frame_size,
    )
    half = config.crop_size // 2
    padded = np.pad(frame, ((0, 0), (half, half), (half, half)), mode='edge')
    size = config.crop_size
    crop = padded[:, row:row + size, column:column + size]
    return ObservationState(
        frame=frame,
        crop=np.ascontiguousarray(crop),
        effector=np.array(state.effector_vector, dtype=np.float64),
    )


def render_frame(state: WorldState, size: int) -> np.ndarray:
    """Only the ``(4, size, size)`` frame."""
    xs, ys = pixel_centers(size)
    on_table = (
        (xs >= state.bounds.low[0]) & (xs <= state.bounds.high[0]) &
        (ys >= state.bounds.low[1]) & (ys <= state.bounds.high[1])
    )
    rgb = np.where(
        on_table[..., None],
        np.array(TABLE_COLOR),
        np.array(FLOOR_COLOR),
    )
    depth = np.zeros((size, size))
    layers = [
        (body_glyph(body), body.z + body.height, body.color)
        for body in state.bodies
    ]
    layers.append((
        effector_glyph(state),
        state.effector[2],
        _effector_color(state),
    ))
    for glyph, top, color in layers:
        height = min(max(top, Z_RANGE[0]), Z_RANGE[1]) / Z_RANGE[1]
        mask = footprint(glyph, xs, ys) & (height >= depth)
        rgb[mask] = color
        depth[mask] = height
    return np.concatenate([rgb.transpose(2, 0, 1), depth[None]], axis=0)


def _effector_color(state: WorldState) -> Color:
    base = np.array(EFFECTOR_COLOR[state.embodiment])
    shade = 0.6 + 0.4 * state.gripper
    if state.embodiment == EMBODIMENT_AGENT:
        return tuple(base * shade)  # type: ignore
    return tuple(base + (1 - base) * (1 - shade))  # type: ignore
