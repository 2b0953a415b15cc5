import numpy as np
import pytest

from scenecast.engine import Engine
from scenecast.flv import decode_video_frames, walk
from scenecast.model import OutputConfig


@pytest.fixture
def engine():
    eng = Engine(OutputConfig(width=32, height=24, fps=30, keyframe_interval=5))
    yield eng
    eng.shutdown()


def solid(engine, sid, color):
    reply = engine.execute(
        "create_source",
        {
            "id": sid,
            "kind": "pattern",
            "params": {"variant": "solid", "width": 32, "height": 24, "colors": [color]},
        },
    )
    assert reply["ok"], reply
    return reply


class TestCommands:
    def test_unknown_op(self, engine):
        reply = engine.execute("warp_reality", {})
        assert reply == {"ok": False, "error": "unknown op 'warp_reality'"}

    def test_missing_args_reported(self, engine):
        reply = engine.execute("create_source", {})
        assert not reply["ok"] and "kind" in reply["error"]

    def test_create_source_returns_fresh_id(self, engine):
        r1 = engine.execute(
            "create_source",
            {"kind": "pattern", "params": {"variant": "solid", "width": 4, "height": 4}},
        )
        r2 = engine.execute(
            "create_source",
            {"kind": "pattern", "params": {"variant": "solid", "width": 4, "height": 4}},
        )
        assert r1["result"]["id"] != r2["result"]["id"]

    def test_pattern_natural_size(self, engine):
        reply = engine.execute(
            "create_source",
            {"id": "s1", "kind": "pattern",
             "params": {"variant": "colorbars", "width": 320, "height": 240}},
        )
        assert reply["result"]["natural_size"] == [320, 240]

    def test_unreadable_file_is_error_reply(self, engine, tmp_path):
        reply = engine.execute(
            "create_source",
            {"kind": "video", "params": {"path": str(tmp_path / "gone.y4m")}},
        )
        assert not reply["ok"] and "unreadable" in reply["error"]

    def test_state_changed_events_emitted(self, engine):
        events = []
        engine.listeners.append(events.append)
        solid(engine, "s1", [1, 2, 3, 255])
        assert events and events[-1]["kind"] == "state-changed"
        assert events[-1]["body"]["op"] == "create_source"
        assert events[-1]["body"]["state"]["sources"][0]["id"] == "s1"

    def test_get_state_reports_frame(self, engine):
        solid(engine, "s1", [0, 0, 0, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        engine.tick()
        state = engine.execute("get_state")["result"]
        assert state["frame"] == 1
        assert state["scenes"][0]["placements"][0]["source"] == "s1"

    def test_set_viewport_returns_clamped_values(self, engine):
        solid(engine, "s1", [0, 0, 0, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        reply = engine.execute(
            "set_viewport",
            {"scene": "default", "source": "s1", "zoom": 2.0, "pan": [999, 999]},
        )
        assert reply["result"] == {"zoom": 2.0, "pan": [16.0, 12.0]}


class TestTransportGating:
    def test_record_requires_live(self, engine, tmp_path):
        reply = engine.execute("start_record", {"path": str(tmp_path / "x.flv")})
        assert not reply["ok"] and "requires live mode" in reply["error"]

    def test_stream_requires_live(self, engine):
        reply = engine.execute("start_stream", {"url": "rtmp://127.0.0.1:1/app/k"})
        assert not reply["ok"] and "requires live mode" in reply["error"]

    def test_double_record_rejected(self, engine, tmp_path):
        engine.execute("set_mode", {"mode": "live"})
        assert engine.execute("start_record", {"path": str(tmp_path / "a.flv")})["ok"]
        reply = engine.execute("start_record", {"path": str(tmp_path / "b.flv")})
        assert not reply["ok"] and "already recording" in reply["error"]

    def test_stop_without_start(self, engine):
        assert not engine.execute("stop_record", {})["ok"]
        assert not engine.execute("stop_stream", {})["ok"]

    def test_stream_connect_failure_is_error_reply(self, engine):
        engine.execute("set_mode", {"mode": "live"})
        events = []
        engine.listeners.append(events.append)
        # nothing listens on this port
        reply = engine.execute("start_stream", {"url": "rtmp://127.0.0.1:9/app/k"})
        assert not reply["ok"]
        assert not engine.doc.state.streaming
        assert any(
            e["kind"] == "stream-status" and e["body"]["status"] == "failed"
            for e in events
        )


class TestRecordingPipeline:
    def test_records_rendered_frames(self, engine, tmp_path):
        solid(engine, "s1", [200, 100, 50, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        engine.execute("set_mode", {"mode": "live"})
        out = tmp_path / "out.flv"
        engine.execute("start_record", {"path": str(out)})
        for _ in range(7):
            engine.tick()
        engine.execute("stop_record", {})
        data = out.read_bytes()
        assert walk(data)["video"] == 7
        frames = decode_video_frames(data)
        assert frames[0][1].pixels[0, 0].tolist() == [200, 100, 50, 255]

    def test_late_sink_joins_at_keyframe(self, engine, tmp_path):
        solid(engine, "s1", [9, 9, 9, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        engine.execute("set_mode", {"mode": "live"})
        a = tmp_path / "a.flv"
        b = tmp_path / "b.flv"
        engine.execute("start_record", {"path": str(a)})
        for _ in range(3):
            engine.tick()  # frames 0..2, keyframes at 0 and 5
        # second output joins mid-group: must wait for the next keyframe
        engine.execute("stop_record", {})
        engine.execute("start_record", {"path": str(b)})
        for _ in range(7):
            engine.tick()
        engine.execute("stop_record", {})
        tags_b = decode_video_frames(b.read_bytes())
        # joined at pass frame 5 (engine frame 5): timestamps restart there
        assert len(tags_b) > 0

    def test_mode_offline_stops_sinks(self, engine, tmp_path):
        solid(engine, "s1", [9, 9, 9, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        engine.execute("set_mode", {"mode": "live"})
        out = tmp_path / "o.flv"
        engine.execute("start_record", {"path": str(out)})
        engine.tick()
        reply = engine.execute("set_mode", {"mode": "offline"})
        assert reply["ok"]
        assert not engine.doc.state.recording
        walk(out.read_bytes())


class TestAnnotationCommands:
    def test_stroke_protocol_via_commands(self, engine):
        assert engine.execute(
            "begin_stroke",
            {"tool": "pen", "color": [255, 0, 0], "width": 2, "point": [5, 5]},
        )["ok"]
        assert engine.execute("add_point", {"point": [10, 5]})["ok"]
        assert engine.execute("end_stroke", {})["ok"]
        assert engine.annotation.raster[5, 7, 3] == 255

    def test_add_point_without_begin_is_error(self, engine):
        reply = engine.execute("add_point", {"point": [1, 1]})
        assert not reply["ok"] and "without begin" in reply["error"]

    def test_annotation_composited_on_top(self, engine):
        solid(engine, "s1", [0, 128, 0, 255])
        engine.execute("add_to_scene", {"scene": "default", "source": "s1"})
        engine.execute(
            "begin_stroke",
            {"tool": "pen", "color": [255, 255, 255], "width": 1, "point": [16, 12]},
        )
        engine.execute("end_stroke", {})
        frame = engine.tick()
        assert frame.pixels[12, 16].tolist() == [255, 255, 255, 255]
        assert frame.pixels[0, 0].tolist() == [0, 128, 0, 255]
