#!/usr/bin/env python3
"""Publish a scripted session over RTMP to the bundled ingest server.

Starts the loopback ingest in-process, streams a 6 second session to it
while also recording locally, then verifies the two recordings decode
to identical frames. This is the full closed loop: compositor, codec,
FLV tags, RTMP chunking, ingest, file.

    python demos/03_stream_loopback.py [out_dir]
"""

import os
import sys
import time

import numpy as np

from scenecast import IngestServer, SessionScript, run_script
from scenecast.flv import decode_video_frames

HERE = os.path.dirname(os.path.abspath(__file__))


def main() -> None:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "loopback_out"
    os.makedirs(out_dir, exist_ok=True)
    server = IngestServer("127.0.0.1", 0, out_dir)
    server.start()
    host, port = server.address
    print(f"ingest listening on rtmp://{host}:{port}/live/...")

    local_path = os.path.join(out_dir, "local_copy.flv")
    script = SessionScript.from_dict({
        "output": {"width": 480, "height": 270, "fps": 30, "keyframe_interval": 30},
        "sources": [
            {"id": "clip", "kind": "video", "params": {"path": "assets/speech_clip.y4m"}},
            {"id": "badge", "kind": "text",
             "params": {"text": "ON AIR", "fg": [255, 40, 40], "bg": [0, 0, 0, 255]}},
        ],
        "scenes": [{"id": "live", "name": "Live", "placements": [
            {"source": "clip",
             "transform": {"crop": [0, 0, 96, 54], "scale": [5.0, 5.0]}},
            {"source": "badge",
             "transform": {"crop": [0, 0, 55, 10], "position": [398, 12], "scale": [1.4, 1.4]}},
        ]}],
        "active_scene": "live",
        "duration_ms": 6000,
        "timeline": [
            {"t_ms": 0, "command": {"op": "set_mode", "args": {"mode": "live"}}},
            {"t_ms": 0, "command": {"op": "start_record", "args": {"path": local_path}}},
            {"t_ms": 0, "command": {"op": "start_stream",
                                    "args": {"url": f"rtmp://{host}:{port}/live/demo"}}},
            {"t_ms": 6000, "command": {"op": "stop_stream", "args": {}}},
            {"t_ms": 6000, "command": {"op": "stop_record", "args": {}}},
        ],
    })
    result = run_script(script, assets_root=HERE)
    statuses = [e["body"].get("status") for e in result.events if e["kind"] == "stream-status"]
    print(f"stream status events: {statuses}")

    ingested_path = os.path.join(out_dir, "demo.flv")
    deadline = time.monotonic() + 10
    while not os.path.exists(ingested_path) and time.monotonic() < deadline:
        time.sleep(0.05)
    server.stop()

    local = decode_video_frames(open(local_path, "rb").read())
    ingested = decode_video_frames(open(ingested_path, "rb").read())
    matches = all(
        t1 == t2 and np.array_equal(f1.pixels, f2.pixels)
        for (t1, f1), (t2, f2) in zip(local, ingested)
    )
    print(f"local recording:    {local_path} ({len(local)} frames)")
    print(f"ingested recording: {ingested_path} ({len(ingested)} frames)")
    print(f"frame-for-frame identical: {matches and len(local) == len(ingested)}")


if __name__ == "__main__":
    main()
