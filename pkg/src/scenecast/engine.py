"""The engine: one document, one annotation layer, one frame clock.

All commands go through execute(), which validates, mutates, and
answers with the frame index the change will first affect. tick()
renders the current frame, hands it to the encode pass (recording,
streaming, session capture), notifies preview listeners, and advances
the clock. Callers guarantee execute() and tick() run on one thread;
that single-writer rule is what makes scripted sessions bit-exact.
"""

from __future__ import annotations

import io
import logging
from typing import BinaryIO, Callable

from . import flv, rtmp
from .annotation import AnnotationError, AnnotationLayer
from .compositor import RenderSnapshot, render
from .model import (
    Document,
    ModelError,
    OutputConfig,
    SourceDescriptor,
    Transform,
    Viewport,
)
from .raster import FrameBuffer
from .screenvideo import CodecError
from .sources import SourceError, open_source

log = logging.getLogger(__name__)

_COMMAND_ERRORS = (
    ModelError,
    SourceError,
    AnnotationError,
    CodecError,
    flv.FlvError,
    rtmp.RtmpError,
    OSError,
)


class CommandError(ValueError):
    """Malformed command arguments or unknown operations."""


def _req(args: dict, name: str):
    if name not in args:
        raise CommandError(f"missing argument {name!r}")
    return args[name]


def _color(value, default=(255, 255, 255, 255)):
    if value is None:
        return default
    items = tuple(int(v) for v in value)
    if len(items) == 3:
        items += (255,)
    if len(items) != 4:
        raise CommandError(f"bad color {value!r}")
    return items


def _point(value) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise CommandError(f"bad point {value!r}")
    return (float(value[0]), float(value[1]))


# ---------------------------------------------------------------------------
# Encode pass and sinks

class _FlvSink:
    """Writes header + metadata + tags once the first keyframe arrives."""

    def __init__(self, fh: BinaryIO, metadata: flv.FlvTag, label: str):
        self._fh = fh
        self._metadata = metadata
        self._writer: flv.FlvWriter | None = None
        self.label = label

    def on_tag(self, tag: flv.FlvTag, keyframe: bool) -> None:
        if self._writer is None:
            if not keyframe:
                return  # join at the next group boundary
            self._writer = flv.FlvWriter(self._fh)
            self._writer.write_tag(self._metadata)
        self._writer.write_tag(tag)
        if keyframe:
            self._fh.flush()

    def close(self) -> None:
        self._fh.flush()


class _MemorySink(_FlvSink):
    def __init__(self, metadata: flv.FlvTag):
        super().__init__(io.BytesIO(), metadata, "session")

    def getvalue(self) -> bytes:
        return self._fh.getvalue()

    def close(self) -> None:
        pass


class _FileSink(_FlvSink):
    def __init__(self, path: str, metadata: flv.FlvTag):
        super().__init__(open(path, "wb"), metadata, path)

    def close(self) -> None:
        self._fh.close()


class _StreamSink:
    """Forwards tags to a publish session, joining at a keyframe."""

    def __init__(self, session: rtmp.PublishSession, metadata: flv.FlvTag, label: str):
        self.session = session
        self._metadata = metadata
        self._started = False
        self.label = label

    def on_tag(self, tag: flv.FlvTag, keyframe: bool) -> None:
        if not self._started:
            if not keyframe:
                return
            self.session.send_metadata(self._metadata.payload)
            self._started = True
        self.session.send_video(tag.timestamp_ms, tag.payload)

    def close(self) -> None:
        self.session.close()


class EncodePass:
    """One shared encode per engine: every sink sees the same tags."""

    def __init__(self, config: OutputConfig, start_frame: int):
        self.config = config
        self.start_frame = start_frame
        self.encoder = flv.TagEncoder(config)
        self.sinks: list = []

    def push(self, frame: FrameBuffer, engine_frame: int) -> list:
        """Encode and fan out; returns sinks that failed."""
        ts = self.config.frame_timestamp_ms(engine_frame - self.start_frame)
        tag, keyframe = self.encoder.encode_next_at(frame, ts)
        failed = []
        for sink in list(self.sinks):
            try:
                sink.on_tag(tag, keyframe)
            except (rtmp.RtmpError, OSError) as exc:
                log.warning("sink %s failed: %s", sink.label, exc)
                failed.append((sink, exc))
        return failed


# ---------------------------------------------------------------------------

class Engine:
    def __init__(
        self,
        output: OutputConfig | None = None,
        assets_root: str | None = None,
        keep_log: bool = True,
        rng=None,
        stream_timeout: float = 5.0,
    ):
        output = output or OutputConfig()
        self.doc = Document(output)
        self.producers: dict[str, object] = {}
        self.annotation = AnnotationLayer(output.width, output.height)
        self.assets_root = assets_root
        self.frame_index = 0
        self.keep_log = keep_log
        self.log: list[dict] = []
        self.listeners: list[Callable[[dict], None]] = []
        self.frame_listeners: list[Callable[[int, FrameBuffer], None]] = []
        self.stats = {"skipped": 0, "stream_dropped": 0}
        self._rng = rng
        self._stream_timeout = stream_timeout
        self._pass: EncodePass | None = None
        self._session_sink: _MemorySink | None = None
        self._record_sink: _FileSink | None = None
        self._stream_sink: _StreamSink | None = None
        self._ops = {
            "create_source": self._op_create_source,
            "delete_source": self._op_delete_source,
            "create_scene": self._op_create_scene,
            "delete_scene": self._op_delete_scene,
            "add_to_scene": self._op_add_to_scene,
            "set_transform": self._op_set_transform,
            "set_viewport": self._op_set_viewport,
            "set_visibility": self._op_set_visibility,
            "set_z_order": self._op_set_z_order,
            "set_active_scene": self._op_set_active_scene,
            "set_mode": self._op_set_mode,
            "begin_stroke": self._op_begin_stroke,
            "add_point": self._op_add_point,
            "end_stroke": self._op_end_stroke,
            "clear_annotation": self._op_clear_annotation,
            "start_record": self._op_start_record,
            "stop_record": self._op_stop_record,
            "start_stream": self._op_start_stream,
            "stop_stream": self._op_stop_stream,
            "get_state": self._op_get_state,
        }

    @property
    def output(self) -> OutputConfig:
        return self.doc.state.output

    # -- events ---------------------------------------------------------------

    def emit(self, kind: str, body: dict) -> None:
        event = {"kind": kind, "body": body, "at_frame": self.frame_index}
        if self.keep_log:
            self.log.append({"event": event})
        for listener in self.listeners:
            listener(event)

    def log_reply(self, reply: dict) -> None:
        if self.keep_log:
            self.log.append({"reply": reply})

    # -- command dispatch -------------------------------------------------------

    def execute(self, op: str, args: dict | None = None) -> dict:
        """Apply one command; returns {ok, applied_at_frame, result|error}."""
        args = args or {}
        handler = self._ops.get(op)
        if handler is None:
            return {"ok": False, "error": f"unknown op {op!r}"}
        try:
            result = handler(args)
        except CommandError as exc:
            return {"ok": False, "error": str(exc)}
        except _COMMAND_ERRORS as exc:
            return {"ok": False, "error": str(exc)}
        reply = {"ok": True, "applied_at_frame": self.frame_index}
        if result:
            reply["result"] = result
        if op not in ("get_state",):
            self.emit("state-changed", {"op": op, "state": self.doc.describe()})
        return reply

    # -- frame clock ------------------------------------------------------------

    def tick(self) -> FrameBuffer:
        idx = self.frame_index
        output = self.output
        scene = self.doc.scene_snapshot()
        frames = {}
        for pl in scene.placements:
            if pl.visible:
                frames[pl.source] = self.producers[pl.source].frame(idx)
        annotation_active = self.annotation.maybe_nonempty
        snapshot = RenderSnapshot(
            scene=scene,
            frames=frames,
            canvas=(output.width, output.height),
            background=output.background,
            annotation=self.annotation.raster if annotation_active else None,
            annotation_bounds=self.annotation.bounds if annotation_active else None,
        )
        frame = render(snapshot)
        frame.pts_ms = output.frame_timestamp_ms(idx)

        if self._pass is not None and self._pass.sinks:
            for sink, exc in self._pass.push(frame, idx):
                self._sink_failed(sink, exc)

        for listener in self.frame_listeners:
            listener(idx, frame)

        if (idx + 1) % output.fps == 0:
            self.emit(
                "frame-stats",
                {
                    "frame": idx,
                    "rendered": idx + 1,
                    "skipped": self.stats["skipped"],
                    "stream_dropped": self.stats["stream_dropped"],
                },
            )
        self.frame_index = idx + 1
        return frame

    def skip_frames(self, count: int) -> None:
        """Live mode fell behind: account for unrendered frame slots."""
        self.frame_index += count
        self.stats["skipped"] += count

    def _sink_failed(self, sink, exc) -> None:
        if sink is self._stream_sink:
            self._stream_sink = None
            self._detach(sink)
            self.doc.state.streaming = False
            self.emit("stream-status", {"status": "failed", "error": str(exc)})
        elif sink is self._record_sink:
            self._record_sink = None
            self._detach(sink)
            self.doc.state.recording = False
            self.emit("error", {"what": "recording", "error": str(exc)})

    # -- encode pass management ---------------------------------------------------

    def enable_session_capture(self) -> None:
        """Script mode: encode every frame of the session into memory."""
        if self._session_sink is not None:
            return
        self._session_sink = _MemorySink(self._metadata())
        self._attach(self._session_sink)

    def session_bytes(self) -> bytes:
        if self._session_sink is None:
            raise CommandError("session capture was not enabled")
        return self._session_sink.getvalue()

    def _metadata(self) -> flv.FlvTag:
        out = self.output
        return flv.write_metadata(out.width, out.height, out.fps)

    def _attach(self, sink) -> None:
        if self._pass is None:
            self._pass = EncodePass(self.output, start_frame=self.frame_index)
        self._pass.sinks.append(sink)

    def _detach(self, sink) -> None:
        if self._pass is None:
            return
        if sink in self._pass.sinks:
            self._pass.sinks.remove(sink)
        if not self._pass.sinks:
            self._pass = None

    def shutdown(self) -> None:
        if self.doc.state.streaming:
            self.execute("stop_stream")
        if self.doc.state.recording:
            self.execute("stop_record")

    # -- op handlers ---------------------------------------------------------------

    def _op_create_source(self, args) -> dict:
        kind = _req(args, "kind")
        params = args.get("params", {})
        source_id = args.get("id") or self.doc.fresh_source_id()
        producer = open_source(kind, params, self.assets_root)
        desc = SourceDescriptor(
            id=source_id, kind=kind, params=params, natural_size=producer.natural_size
        )
        self.doc.register_source(desc)
        self.producers[source_id] = producer
        return {"id": source_id, "natural_size": list(producer.natural_size)}

    def _op_delete_source(self, args) -> dict:
        source_id = _req(args, "id")
        self.doc.delete_source(source_id)
        self.producers.pop(source_id, None)
        return {}

    def _op_create_scene(self, args) -> dict:
        scene_id = self.doc.create_scene(args.get("name", ""), args.get("id"))
        return {"id": scene_id}

    def _op_delete_scene(self, args) -> dict:
        self.doc.delete_scene(_req(args, "id"))
        return {"active_scene": self.doc.state.active_scene}

    def _current_transform(self, scene_id, source_id) -> Transform | None:
        scene = self.doc.scenes.get(scene_id)
        if scene is None:
            return None
        placement = scene.placement(source_id)
        return placement.transform if placement else None

    def _parse_transform(self, spec: dict, base: Transform) -> Transform:
        crop = tuple(int(v) for v in spec["crop"]) if "crop" in spec else base.crop
        position = (
            tuple(float(v) for v in spec["position"])
            if "position" in spec
            else base.position
        )
        scale = tuple(float(v) for v in spec["scale"]) if "scale" in spec else base.scale
        rotation = float(spec.get("rotation", base.rotation))
        if len(crop) != 4 or len(position) != 2 or len(scale) != 2:
            raise CommandError("bad transform shape")
        return Transform(crop=crop, position=position, scale=scale, rotation=rotation)

    def _op_add_to_scene(self, args) -> dict:
        scene_id = _req(args, "scene")
        source_id = _req(args, "source")
        transform = None
        if "transform" in args and args["transform"]:
            desc = self.doc.sources.get(source_id)
            if desc is None:
                raise ModelError(f"unknown source {source_id!r}")
            transform = self._parse_transform(
                args["transform"], Transform.identity(desc.natural_size)
            )
        self.doc.add_to_scene(scene_id, source_id, transform)
        return {}

    def _op_set_transform(self, args) -> dict:
        scene_id = _req(args, "scene")
        source_id = _req(args, "source")
        current = self._current_transform(scene_id, source_id)
        if current is None:
            raise ModelError(f"source {source_id!r} not placed in scene {scene_id!r}")
        transform = self._parse_transform(_req(args, "transform"), current)
        self.doc.set_transform(scene_id, source_id, transform)
        return {}

    def _op_set_viewport(self, args) -> dict:
        scene_id = _req(args, "scene")
        source_id = _req(args, "source")
        scene = self.doc.scenes.get(scene_id)
        placement = scene.placement(source_id) if scene else None
        if placement is None:
            raise ModelError(f"source {source_id!r} not placed in scene {scene_id!r}")
        zoom = float(args.get("zoom", placement.viewport.zoom))
        pan = (
            _point(args["pan"]) if "pan" in args else placement.viewport.pan
        )
        self.doc.set_viewport(scene_id, source_id, Viewport(zoom=zoom, pan=pan))
        updated = self.doc.scenes[scene_id].placement(source_id).viewport
        return {"zoom": updated.zoom, "pan": list(updated.pan)}

    def _op_set_visibility(self, args) -> dict:
        self.doc.set_visibility(
            _req(args, "scene"), _req(args, "source"), bool(_req(args, "visible"))
        )
        return {}

    def _op_set_z_order(self, args) -> dict:
        self.doc.set_z_order(
            _req(args, "scene"), _req(args, "source"), int(_req(args, "z"))
        )
        return {}

    def _op_set_active_scene(self, args) -> dict:
        self.doc.set_active_scene(_req(args, "scene"))
        return {}

    def _op_set_mode(self, args) -> dict:
        mode = _req(args, "mode")
        if mode == "offline":
            # leaving live force-stops both outputs, then flips the mode
            if self.doc.state.streaming:
                self._op_stop_stream({})
            if self.doc.state.recording:
                self._op_stop_record({})
        self.doc.set_mode(mode)
        return {"mode": mode}

    def _op_begin_stroke(self, args) -> dict:
        self.annotation.begin_stroke(
            _req(args, "tool"),
            _color(args.get("color")),
            float(args.get("width", 3)),
            _point(_req(args, "point")),
        )
        return {}

    def _op_add_point(self, args) -> dict:
        self.annotation.add_point(_point(_req(args, "point")))
        return {}

    def _op_end_stroke(self, args) -> dict:
        self.annotation.end_stroke()
        return {}

    def _op_clear_annotation(self, args) -> dict:
        self.annotation.clear()
        return {}

    def _op_start_record(self, args) -> dict:
        path = _req(args, "path")
        self.doc.require_live("start_record")
        if self.doc.state.recording:
            raise CommandError("already recording")
        self._record_sink = _FileSink(path, self._metadata())
        self._attach(self._record_sink)
        self.doc.state.recording = True
        return {"path": path}

    def _op_stop_record(self, args) -> dict:
        if not self.doc.state.recording or self._record_sink is None:
            raise CommandError("not recording")
        sink = self._record_sink
        self._record_sink = None
        self._detach(sink)
        sink.close()
        self.doc.state.recording = False
        return {}

    def _op_start_stream(self, args) -> dict:
        url = _req(args, "url")
        self.doc.require_live("start_stream")
        if self.doc.state.streaming:
            raise CommandError("already streaming")
        parsed = rtmp.parse_rtmp_url(url)
        session = rtmp.PublishSession(
            parsed, timeout=self._stream_timeout, rng=self._rng
        )
        try:
            session.start()
        except rtmp.RtmpError as exc:
            self.emit("stream-status", {"status": "failed", "error": str(exc)})
            raise
        self._stream_sink = _StreamSink(session, self._metadata(), url)
        self._attach(self._stream_sink)
        self.doc.state.streaming = True
        self.emit("stream-status", {"status": "publishing", "url": url})
        return {"url": url}

    def _op_stop_stream(self, args) -> dict:
        if not self.doc.state.streaming or self._stream_sink is None:
            raise CommandError("not streaming")
        sink = self._stream_sink
        self._stream_sink = None
        self._detach(sink)
        sink.close()
        self.doc.state.streaming = False
        self.emit("stream-status", {"status": "stopped"})
        return {}

    def _op_get_state(self, args) -> dict:
        state = self.doc.describe()
        state["frame"] = self.frame_index
        return state
