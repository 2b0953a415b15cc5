"""Session scripts: a timestamped command timeline replayed headlessly.

A script declares the output format, sources, and scenes up front, then
lists (t_ms, command) pairs. Execution is fixed-timestep: before
rendering frame n (timestamp round(n * 1000 / fps)), every command with
t_ms <= that timestamp is applied in listed order. Wall time plays no
role, so the produced FLV bytes and the event log are pure functions of
(script, assets).

The JSON schema is documented in docs/script-format.md; the bundled
demo scripts under demos/scripts/ double as examples.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .engine import Engine
from .model import OutputConfig

_DEFAULT_SCRIPT_SEED = 0x5EED


class ScriptError(ValueError):
    pass


@dataclass
class TimelineEntry:
    t_ms: int
    command: dict


@dataclass
class SessionScript:
    output: OutputConfig
    sources: list[dict]
    scenes: list[dict]
    active_scene: str | None
    mode: str | None
    duration_ms: int
    timeline: list[TimelineEntry] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionScript":
        out_raw = raw.get("output", {})
        output = OutputConfig(
            width=int(out_raw.get("width", 1280)),
            height=int(out_raw.get("height", 720)),
            fps=int(out_raw.get("fps", 30)),
            keyframe_interval=int(out_raw.get("keyframe_interval", 30)),
        )
        output.validate()
        duration = int(raw.get("duration_ms", 0))
        if duration <= 0:
            raise ScriptError("duration_ms must be a positive integer")
        timeline = []
        last_t = -1
        for i, entry in enumerate(raw.get("timeline", [])):
            if "t_ms" not in entry or "command" not in entry:
                raise ScriptError(f"timeline[{i}] needs t_ms and command")
            t_ms = int(entry["t_ms"])
            if t_ms < 0:
                raise ScriptError(f"timeline[{i}] t_ms must be >= 0")
            if t_ms < last_t:
                raise ScriptError(
                    f"timeline[{i}] t_ms {t_ms} decreases (previous {last_t})"
                )
            last_t = t_ms
            command = entry["command"]
            if "op" not in command:
                raise ScriptError(f"timeline[{i}] command needs an op")
            timeline.append(TimelineEntry(t_ms=t_ms, command=command))
        script = cls(
            output=output,
            sources=list(raw.get("sources", [])),
            scenes=list(raw.get("scenes", [])),
            active_scene=raw.get("active_scene"),
            mode=raw.get("mode"),
            duration_ms=duration,
            timeline=timeline,
        )
        script._check_references()
        return script

    def _check_references(self) -> None:
        """Every id a command touches must be declared (or created with an
        explicit id earlier in the timeline)."""
        sources = set()
        for i, src in enumerate(self.sources):
            if "id" not in src or "kind" not in src:
                raise ScriptError(f"sources[{i}] needs id and kind")
            sources.add(src["id"])
        scenes = set()
        for i, scene in enumerate(self.scenes):
            if "id" not in scene:
                raise ScriptError(f"scenes[{i}] needs an id")
            scenes.add(scene["id"])
            for pl in scene.get("placements", []):
                if pl.get("source") not in sources:
                    raise ScriptError(
                        f"scene {scene['id']!r} places undeclared source {pl.get('source')!r}"
                    )
        if not scenes:
            scenes.add("default")
        if self.active_scene is not None and self.active_scene not in scenes:
            raise ScriptError(f"active_scene {self.active_scene!r} is not declared")

        def check(kind: str, known: set, value) -> None:
            if value not in known:
                raise ScriptError(f"timeline references undeclared {kind} {value!r}")

        for entry in self.timeline:
            op = entry.command.get("op")
            args = entry.command.get("args", {})
            if op == "create_source":
                if "id" not in args:
                    raise ScriptError("scripted create_source needs an explicit id")
                sources.add(args["id"])
            elif op == "create_scene":
                if "id" not in args:
                    raise ScriptError("scripted create_scene needs an explicit id")
                scenes.add(args["id"])
            elif op == "delete_source":
                check("source", sources, args.get("id"))
                sources.discard(args["id"])
            elif op == "delete_scene":
                check("scene", scenes, args.get("id"))
                scenes.discard(args["id"])
            elif op == "set_active_scene":
                check("scene", scenes, args.get("scene"))
            elif op in (
                "add_to_scene",
                "set_transform",
                "set_viewport",
                "set_visibility",
                "set_z_order",
            ):
                check("scene", scenes, args.get("scene"))
                check("source", sources, args.get("source"))


def load_script(path: str) -> SessionScript:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"{path}: invalid JSON: {exc}") from exc
    return SessionScript.from_dict(raw)


@dataclass
class ScriptResult:
    flv: bytes
    log: list[dict]
    frames_rendered: int

    @property
    def events(self) -> list[dict]:
        return [entry["event"] for entry in self.log if "event" in entry]

    @property
    def replies(self) -> list[dict]:
        return [entry["reply"] for entry in self.log if "reply" in entry]

    def event_log_bytes(self) -> bytes:
        lines = [
            json.dumps(entry, sort_keys=True, separators=(",", ":"))
            for entry in self.log
        ]
        return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def run_script(
    script: SessionScript,
    assets_root: str | None = None,
    rng=None,
    frame_hook=None,
) -> ScriptResult:
    """Execute a script on the fixed-timestep clock; fully deterministic."""
    engine = Engine(
        output=script.output,
        assets_root=assets_root,
        keep_log=True,
        rng=rng if rng is not None else random.Random(_DEFAULT_SCRIPT_SEED),
    )
    engine.enable_session_capture()
    seq = 0

    def apply(op: str, args: dict, setup: bool) -> dict:
        nonlocal seq
        seq += 1
        reply = engine.execute(op, args)
        reply = {"seq": seq, **reply}
        engine.log_reply(reply)
        if setup and not reply["ok"]:
            raise ScriptError(f"setup command {op} failed: {reply['error']}")
        return reply

    # declarations run before frame 0, through the same command path
    for src in script.sources:
        apply(
            "create_source",
            {"id": src["id"], "kind": src["kind"], "params": src.get("params", {})},
            setup=True,
        )
    for scene in script.scenes:
        apply(
            "create_scene",
            {"id": scene["id"], "name": scene.get("name", scene["id"])},
            setup=True,
        )
        for pl in scene.get("placements", []):
            args = {"scene": scene["id"], "source": pl["source"]}
            if pl.get("transform"):
                args["transform"] = pl["transform"]
            apply("add_to_scene", args, setup=True)
            if pl.get("viewport"):
                vp = dict(pl["viewport"])
                vp.update({"scene": scene["id"], "source": pl["source"]})
                apply("set_viewport", vp, setup=True)
            if pl.get("visible") is False:
                apply(
                    "set_visibility",
                    {"scene": scene["id"], "source": pl["source"], "visible": False},
                    setup=True,
                )
    if script.active_scene:
        apply("set_active_scene", {"scene": script.active_scene}, setup=True)
    elif script.scenes:
        apply("set_active_scene", {"scene": script.scenes[0]["id"]}, setup=True)
    if script.scenes and "default" not in {s["id"] for s in script.scenes}:
        apply("delete_scene", {"id": "default"}, setup=True)
    if script.mode:
        apply("set_mode", {"mode": script.mode}, setup=True)

    pending = list(script.timeline)
    cursor = 0
    frame = 0
    while True:
        t_frame = script.output.frame_timestamp_ms(frame)
        if t_frame >= script.duration_ms:
            break
        while cursor < len(pending) and pending[cursor].t_ms <= t_frame:
            cmd = pending[cursor].command
            apply(cmd["op"], cmd.get("args", {}), setup=False)
            cursor += 1
        fb = engine.tick()
        if frame_hook is not None:
            frame_hook(frame, fb)
        frame += 1
    # whatever remains fires after the last frame (e.g. stop_record at
    # exactly duration_ms)
    while cursor < len(pending):
        cmd = pending[cursor].command
        apply(cmd["op"], cmd.get("args", {}), setup=False)
        cursor += 1
    engine.shutdown()
    return ScriptResult(flv=engine.session_bytes(), log=engine.log, frames_rendered=frame)
