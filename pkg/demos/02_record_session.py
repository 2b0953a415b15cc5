#!/usr/bin/env python3
"""Replay a bundled session script and inspect the recording.

The same thing `engine run` does, driven through the library: execute
the timeline on the fixed-timestep clock, then decode the resulting FLV
to show it really contains what the commands said it should.

    python demos/02_record_session.py [script.json] [out.flv]
"""

import os
import sys

from scenecast import load_script, run_script
from scenecast.flv import decode_video_frames, read_metadata, walk

HERE = os.path.dirname(os.path.abspath(__file__))


def main() -> None:
    script_path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "market_outlook.json")
    out_path = sys.argv[2] if len(sys.argv) > 2 else "session.flv"

    script = load_script(script_path)
    result = run_script(script, assets_root=os.path.dirname(script_path))
    with open(out_path, "wb") as fh:
        fh.write(result.flv)

    counts = walk(result.flv)
    meta = read_metadata(result.flv)
    print(f"{os.path.basename(script_path)} -> {out_path}")
    print(f"  {counts['video']} video tags, {counts['keyframes']} keyframes, "
          f"{int(meta['width'])}x{int(meta['height'])} @ {meta['framerate']:.0f} fps")

    switches = [
        r for r in result.replies
        if r.get("ok") and "applied_at_frame" in r
    ]
    print(f"  {len(switches)} commands applied, "
          f"{sum(1 for r in result.replies if not r['ok'])} rejected")

    # prove the determinism claim on the spot
    again = run_script(script, assets_root=os.path.dirname(script_path))
    print(f"  second run byte-identical: {again.flv == result.flv}")

    frames = decode_video_frames(result.flv)
    print(f"  decoded {len(frames)} frames, last timestamp {frames[-1][0]} ms")


if __name__ == "__main__":
    main()
