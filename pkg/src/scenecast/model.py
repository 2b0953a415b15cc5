"""Document state: sources, scenes, placements, modes.

All mutations are validated up front and either fully apply or leave the
document untouched. The engine applies them between frames from a single
serialized command queue, so the model itself never needs locking;
renderers work from per-frame snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .raster import RGBA


class ModelError(ValueError):
    """Raised when a mutation violates a precondition or invariant."""


MODE_OFFLINE = "offline"
MODE_LIVE = "live"

SOURCE_KINDS = ("image", "video", "pattern", "text", "capture-stub")


@dataclass(frozen=True)
class Transform:
    """Placement geometry: crop in source pixels, then scale, rotate
    (degrees, about the placed rectangle's center) and position the
    top-left corner on the canvas.

    Stage order is fixed: crop, viewport, scale, rotate, translate.
    """

    crop: tuple[int, int, int, int]  # x, y, w, h in source pixels
    position: tuple[float, float] = (0.0, 0.0)
    scale: tuple[float, float] = (1.0, 1.0)
    rotation: float = 0.0

    def validate(self, natural_size: tuple[int, int]) -> None:
        cx, cy, cw, ch = self.crop
        nw, nh = natural_size
        if cw < 1 or ch < 1:
            raise ModelError(f"crop size must be >= 1, got {cw}x{ch}")
        if cx < 0 or cy < 0 or cx + cw > nw or cy + ch > nh:
            raise ModelError(
                f"crop {self.crop} outside source bounds {nw}x{nh}"
            )
        sx, sy = self.scale
        if sx <= 0 or sy <= 0:
            raise ModelError(f"scale must be positive, got {self.scale}")
        if not all(math.isfinite(v) for v in (*self.position, sx, sy, self.rotation)):
            raise ModelError("transform values must be finite")

    @classmethod
    def identity(cls, natural_size: tuple[int, int]) -> "Transform":
        w, h = natural_size
        return cls(crop=(0, 0, w, h))


@dataclass(frozen=True)
class Viewport:
    """Pan/zoom window into the cropped source; zoom 1 shows everything."""

    zoom: float = 1.0
    pan: tuple[float, float] = (0.0, 0.0)

    def validate(self) -> None:
        if not (math.isfinite(self.zoom) and self.zoom >= 1.0):
            raise ModelError(f"zoom must be >= 1, got {self.zoom}")
        if not all(math.isfinite(v) for v in self.pan):
            raise ModelError("pan must be finite")

    def clamped(self, crop_w: int, crop_h: int) -> "Viewport":
        """Clamp pan so the zoom window stays inside the cropped source."""
        win_w = crop_w / self.zoom
        win_h = crop_h / self.zoom
        px = min(max(self.pan[0], 0.0), crop_w - win_w)
        py = min(max(self.pan[1], 0.0), crop_h - win_h)
        return Viewport(self.zoom, (px, py))


IDENTITY_VIEWPORT = Viewport()


@dataclass(frozen=True)
class SourceDescriptor:
    id: str
    kind: str
    params: dict
    natural_size: tuple[int, int]

    def validate(self) -> None:
        if self.kind not in SOURCE_KINDS:
            raise ModelError(f"unknown source kind {self.kind!r}")
        w, h = self.natural_size
        if w < 1 or h < 1:
            raise ModelError(f"natural size must be positive, got {w}x{h}")


@dataclass
class SourcePlacement:
    source: str
    transform: Transform
    viewport: Viewport = IDENTITY_VIEWPORT
    visible: bool = True
    z: int = 0


@dataclass
class Scene:
    id: str
    name: str
    placements: list[SourcePlacement] = field(default_factory=list)

    def placement(self, source_id: str) -> SourcePlacement | None:
        for pl in self.placements:
            if pl.source == source_id:
                return pl
        return None


@dataclass(frozen=True)
class OutputConfig:
    width: int = 1280
    height: int = 720
    fps: int = 30
    keyframe_interval: int = 30
    background: RGBA = (0, 0, 0, 255)

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ModelError("canvas size must be positive")
        if self.fps <= 0:
            raise ModelError("fps must be positive")
        if self.keyframe_interval < 1:
            raise ModelError("keyframe interval must be >= 1")

    def frame_timestamp_ms(self, frame_index: int) -> int:
        # round(n * 1000 / fps) half-up, in exact integer arithmetic
        return (2000 * frame_index + self.fps) // (2 * self.fps)


@dataclass
class EngineState:
    mode: str = MODE_OFFLINE
    active_scene: str = ""
    recording: bool = False
    streaming: bool = False
    output: OutputConfig = field(default_factory=OutputConfig)


class Document:
    """Sources + scenes + engine state, with every mutation validated.

    There is always exactly one active scene; a default empty scene is
    created at construction so live mode is never without output.
    """

    def __init__(self, output: OutputConfig | None = None):
        output = output or OutputConfig()
        output.validate()
        self.sources: dict[str, SourceDescriptor] = {}
        self.scenes: dict[str, Scene] = {}
        self.state = EngineState(output=output)
        self._scene_counter = 0
        self._source_counter = 0
        first = self.create_scene("default", scene_id="default")
        self.state.active_scene = first

    # -- sources ----------------------------------------------------------

    def fresh_source_id(self) -> str:
        while True:
            self._source_counter += 1
            sid = f"src{self._source_counter}"
            if sid not in self.sources:
                return sid

    def register_source(self, desc: SourceDescriptor) -> str:
        desc.validate()
        if desc.id in self.sources:
            raise ModelError(f"duplicate source id {desc.id!r}")
        self.sources[desc.id] = desc
        return desc.id

    def delete_source(self, source_id: str) -> None:
        if source_id not in self.sources:
            raise ModelError(f"unknown source {source_id!r}")
        del self.sources[source_id]
        for scene in self.scenes.values():
            scene.placements = [p for p in scene.placements if p.source != source_id]
            self._renumber(scene)
        self._check()

    # -- scenes -----------------------------------------------------------

    def fresh_scene_id(self) -> str:
        while True:
            self._scene_counter += 1
            sid = f"scene{self._scene_counter}"
            if sid not in self.scenes:
                return sid

    def create_scene(self, name: str, scene_id: str | None = None) -> str:
        sid = scene_id if scene_id is not None else self.fresh_scene_id()
        if sid in self.scenes:
            raise ModelError(f"duplicate scene id {sid!r}")
        if not sid:
            raise ModelError("scene id must be non-empty")
        self.scenes[sid] = Scene(id=sid, name=name)
        return sid

    def delete_scene(self, scene_id: str) -> None:
        if scene_id not in self.scenes:
            raise ModelError(f"unknown scene {scene_id!r}")
        if len(self.scenes) == 1:
            raise ModelError("cannot delete the only scene")
        del self.scenes[scene_id]
        if self.state.active_scene == scene_id:
            # promote the lowest-id survivor so output never goes dark
            self.state.active_scene = min(self.scenes)
        self._check()

    def set_active_scene(self, scene_id: str) -> None:
        if scene_id not in self.scenes:
            raise ModelError(f"unknown scene {scene_id!r}")
        self.state.active_scene = scene_id

    @property
    def active_scene(self) -> Scene:
        return self.scenes[self.state.active_scene]

    # -- placements -------------------------------------------------------

    def _scene(self, scene_id: str) -> Scene:
        if scene_id not in self.scenes:
            raise ModelError(f"unknown scene {scene_id!r}")
        return self.scenes[scene_id]

    def _placement(self, scene_id: str, source_id: str) -> SourcePlacement:
        pl = self._scene(scene_id).placement(source_id)
        if pl is None:
            raise ModelError(f"source {source_id!r} not placed in scene {scene_id!r}")
        return pl

    def add_to_scene(
        self, scene_id: str, source_id: str, transform: Transform | None = None
    ) -> None:
        scene = self._scene(scene_id)
        if source_id not in self.sources:
            raise ModelError(f"unknown source {source_id!r}")
        if scene.placement(source_id) is not None:
            raise ModelError(
                f"source {source_id!r} already placed in scene {scene_id!r}"
            )
        desc = self.sources[source_id]
        tf = transform if transform is not None else Transform.identity(desc.natural_size)
        tf.validate(desc.natural_size)
        scene.placements.append(
            SourcePlacement(source=source_id, transform=tf, z=len(scene.placements))
        )
        self._check()

    def set_transform(self, scene_id: str, source_id: str, transform: Transform) -> None:
        pl = self._placement(scene_id, source_id)
        transform.validate(self.sources[source_id].natural_size)
        pl.transform = transform
        # the crop may have shrunk; keep the pan window in bounds
        pl.viewport = pl.viewport.clamped(transform.crop[2], transform.crop[3])

    def set_viewport(self, scene_id: str, source_id: str, viewport: Viewport) -> None:
        pl = self._placement(scene_id, source_id)
        viewport.validate()
        crop = pl.transform.crop
        pl.viewport = viewport.clamped(crop[2], crop[3])

    def set_visibility(self, scene_id: str, source_id: str, visible: bool) -> None:
        pl = self._placement(scene_id, source_id)
        pl.visible = bool(visible)

    def set_z_order(self, scene_id: str, source_id: str, z: int) -> None:
        scene = self._scene(scene_id)
        pl = self._placement(scene_id, source_id)
        n = len(scene.placements)
        if not (0 <= z < n):
            raise ModelError(f"z index {z} out of range 0..{n - 1}")
        order = sorted(scene.placements, key=lambda p: p.z)
        order.remove(pl)
        order.insert(z, pl)
        for i, p in enumerate(order):
            p.z = i
        scene.placements = order
        self._check()

    # -- mode / transport flags --------------------------------------------

    def set_mode(self, mode: str) -> None:
        if mode not in (MODE_OFFLINE, MODE_LIVE):
            raise ModelError(f"unknown mode {mode!r}")
        if mode == MODE_OFFLINE and (self.state.recording or self.state.streaming):
            raise ModelError("stop recording/streaming before leaving live mode")
        self.state.mode = mode

    def require_live(self, what: str) -> None:
        if self.state.mode != MODE_LIVE:
            raise ModelError(f"{what} requires live mode")

    # -- integrity ----------------------------------------------------------

    @staticmethod
    def _renumber(scene: Scene) -> None:
        scene.placements.sort(key=lambda p: p.z)
        for i, p in enumerate(scene.placements):
            p.z = i

    def _check(self) -> None:
        assert self.state.active_scene in self.scenes
        for scene in self.scenes.values():
            zs = sorted(p.z for p in scene.placements)
            assert zs == list(range(len(scene.placements))), f"bad z ladder in {scene.id}"
            for p in scene.placements:
                assert p.source in self.sources, f"dangling source {p.source}"

    # -- snapshots -----------------------------------------------------------

    def scene_snapshot(self, scene_id: str | None = None) -> Scene:
        """Deep-enough copy of a scene for lock-free rendering."""
        scene = self.scenes[scene_id or self.state.active_scene]
        return Scene(
            id=scene.id,
            name=scene.name,
            placements=[replace(p) for p in sorted(scene.placements, key=lambda p: p.z)],
        )

    def describe(self) -> dict:
        """JSON-friendly dump of the whole document, used by the control UI."""
        return {
            "mode": self.state.mode,
            "active_scene": self.state.active_scene,
            "recording": self.state.recording,
            "streaming": self.state.streaming,
            "output": {
                "width": self.state.output.width,
                "height": self.state.output.height,
                "fps": self.state.output.fps,
                "keyframe_interval": self.state.output.keyframe_interval,
            },
            "sources": [
                {
                    "id": s.id,
                    "kind": s.kind,
                    "natural_size": list(s.natural_size),
                }
                for s in self.sources.values()
            ],
            "scenes": [
                {
                    "id": sc.id,
                    "name": sc.name,
                    "placements": [
                        {
                            "source": p.source,
                            "z": p.z,
                            "visible": p.visible,
                            "transform": {
                                "crop": list(p.transform.crop),
                                "position": list(p.transform.position),
                                "scale": list(p.transform.scale),
                                "rotation": p.transform.rotation,
                            },
                            "viewport": {
                                "zoom": p.viewport.zoom,
                                "pan": list(p.viewport.pan),
                            },
                        }
                        for p in sorted(sc.placements, key=lambda p: p.z)
                    ],
                }
                for sc in self.scenes.values()
            ],
        }
